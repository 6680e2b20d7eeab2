#ifndef SOAD_EMBEDDING_HPP
#define SOAD_EMBEDDING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "soad/common.hpp"
#include "soad/model.hpp"

namespace soad {

// Hierarchically separated tree over the ON points, with one OFF leaf hung
// under each ON node at weight beta(u). Nodes are stored parent-before-child
// (node 0 is the root), so subtree sums can be done in one reverse sweep.
struct TreeEmbedding {
  std::vector<int> parent;     // parent[0] == -1
  std::vector<double> edge_w;  // weight of edge to parent; edge_w[0] == 0
  std::vector<int> state_node; // state s -> tree node carrying it
  std::vector<int> node_state; // tree node -> state, or -1 for internal
  int n_points = 0;

  int num_nodes() const { return (int)parent.size(); }

  double depth_weight(int v) const {
    double d = 0.0;
    for (; v > 0; v = parent[v]) d += edge_w[v];
    return d;
  }

  // Weighted path length between two nodes.
  double node_distance(int a, int b) const {
    // Walk both nodes up to their common ancestor, accumulating edge weights.
    double da = 0.0, db = 0.0;
    std::vector<char> seen(num_nodes(), 0);
    std::vector<double> acc(num_nodes(), 0.0);
    for (int v = a; v != -1; v = parent[v]) {
      seen[v] = 1;
      acc[v] = da;
      if (v > 0) da += edge_w[v];
    }
    for (int v = b; v != -1; v = parent[v]) {
      if (seen[v]) return db + acc[v];
      if (v > 0) db += edge_w[v];
    }
    return da + db;  // unreachable for a tree
  }

  double state_distance(int s1, int s2) const {
    return node_distance(state_node[s1], state_node[s2]);
  }

  // Full 2n x 2n table of tree distances between states.
  std::vector<std::vector<double>> state_distance_table() const {
    int m = (int)state_node.size();
    std::vector<std::vector<double>> d(m, std::vector<double>(m, 0.0));
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) d[i][j] = d[j][i] = state_distance(i, j);
    return d;
  }
};

// Vector-space image of a state distribution: k[v] = mass in the subtree of v
// (the ON node carries its own ON mass plus its OFF child's mass).
using KVector = std::vector<double>;

inline KVector phi(const TreeEmbedding& emb, const StateDistribution& p) {
  // Place state masses on their nodes, then accumulate subtree sums in one
  // reverse sweep (children always have larger ids than their parent).
  KVector k(emb.num_nodes(), 0.0);
  for (int s = 0; s < (int)emb.state_node.size(); ++s) k[emb.state_node[s]] += p[s];
  for (int v = emb.num_nodes() - 1; v > 0; --v) k[emb.parent[v]] += k[v];
  return k;
}

inline StateDistribution phi_inverse(const TreeEmbedding& emb, const KVector& k) {
  int n = emb.n_points;
  StateDistribution p(2 * n, 0.0);
  for (int u = 0; u < n; ++u) {
    double off = k[emb.state_node[off_state(u)]];
    p[off_state(u)] = off;
    p[on_state(u)] = k[emb.state_node[on_state(u)]] - off;
  }
  return p;
}

// Weighted l1 distance between two K vectors; equals the tree Wasserstein-1
// distance between the decoded distributions.
inline double k_norm(const TreeEmbedding& emb, const KVector& a, const KVector& b) {
  double s = 0.0;
  for (int v = 1; v < emb.num_nodes(); ++v) s += emb.edge_w[v] * std::abs(a[v] - b[v]);
  return s;
}

// True when k is the image of a valid state distribution: root mass 1, state
// entries in [0,1], internal consistency, ON mass nonnegative.
inline bool k_valid(const TreeEmbedding& emb, const KVector& k, double tol = kFeasTol) {
  if ((int)k.size() != emb.num_nodes()) return false;
  if (std::abs(k[0] - 1.0) > tol) return false;
  std::vector<double> child_sum(emb.num_nodes(), 0.0);
  for (int v = emb.num_nodes() - 1; v > 0; --v) child_sum[emb.parent[v]] += k[v];
  for (int v = 0; v < emb.num_nodes(); ++v) {
    if (k[v] < -tol || k[v] > 1.0 + tol) return false;
    int s = emb.node_state[v];
    if (s == -1) {
      // Steiner node: carries no state mass of its own.
      if (std::abs(k[v] - child_sum[v]) > tol) return false;
    } else if (is_on_state(s)) {
      // ON node: own mass plus the OFF child's.
      if (k[v] < child_sum[v] - tol) return false;
    }
  }
  return true;
}

namespace detail {

struct HstBuilder {
  const DistMatrix& d;
  const MetricSpace& metric;
  std::vector<std::vector<int>> groups;  // zero-distance point groups
  std::vector<int> perm;                 // permutation over groups
  double radius_scale = 1.0;             // FRT radius multiplier in [1,2)
  double unit = 1.0;                     // scaled units -> metric units
  double scale = 1.0;                    // metric units -> scaled units

  TreeEmbedding emb;

  int new_node(int parent, double w, int state = -1) {
    emb.parent.push_back(parent);
    emb.edge_w.push_back(w);
    emb.node_state.push_back(state);
    if (state != -1) emb.state_node[state] = (int)emb.parent.size() - 1;
    return (int)emb.parent.size() - 1;
  }

  void attach_group(int node, const std::vector<int>& g) {
    if (g.size() == 1) {
      int u = g[0];
      emb.node_state[node] = on_state(u);
      emb.state_node[on_state(u)] = node;
      new_node(node, metric.switch_beta[u], off_state(u));
    } else {
      // Coincident points keep distinct ON nodes at zero spatial separation.
      for (int u : g) {
        int on = new_node(node, 0.0, on_state(u));
        new_node(on, metric.switch_beta[u], off_state(u));
      }
    }
  }

  // Distance between group representatives, in scaled units.
  double gdist(int a, int b) const { return d[groups[a][0]][groups[b][0]] * scale; }

  // Recursive FRT partition: split cluster `cl` (group ids) at `level`
  // under tree node `node`. Radius at this level is radius_scale * 2^(level-1).
  void partition(int node, const std::vector<int>& cl, int level) {
    if (cl.size() == 1) {
      attach_group(node, groups[cl[0]]);
      return;
    }
    double r = radius_scale * std::ldexp(1.0, level - 1);
    // Assign each member to the first permutation element within radius r.
    std::vector<std::vector<int>> sub;
    std::vector<int> center_of;
    for (int g : cl) {
      int c = -1;
      for (int w : perm)
        if (gdist(g, w) < r) {
          c = w;
          break;
        }
      int idx = -1;
      for (int i = 0; i < (int)center_of.size(); ++i)
        if (center_of[i] == c) idx = i;
      if (idx == -1) {
        center_of.push_back(c);
        sub.emplace_back();
        idx = (int)sub.size() - 1;
      }
      sub[idx].push_back(g);
    }
    // Children at level-1 sit within radius r of their centers; an edge of
    // radius_scale * 2^level keeps tree distances dominating the metric.
    double w_child = radius_scale * std::ldexp(1.0, level) * unit;
    for (const auto& s : sub) {
      int child = new_node(node, w_child);
      partition(child, s, level - 1);
    }
  }
};

}  // namespace detail

// Sample a dominating tree embedding of the metric. Identical-coordinate
// points are merged for the clustering and re-expanded as zero-weight
// children. Uniform metrics (all pairwise distances equal) get the exact star
// tree, so no distortion is introduced for them.
inline TreeEmbedding sample_hst(const MetricSpace& metric, Rng& rng,
                                const DistMatrix* dist_override = nullptr) {
  const DistMatrix& d = dist_override ? *dist_override : metric.dist;
  int n = metric.n;
  detail::HstBuilder b{d, metric};
  b.emb.n_points = n;
  b.emb.state_node.assign(2 * n, -1);

  // Merge zero-distance points.
  std::vector<int> group_of(n, -1);
  for (int u = 0; u < n; ++u) {
    for (int g = 0; g < (int)b.groups.size(); ++g)
      if (d[b.groups[g][0]][u] <= 0.0) {
        group_of[u] = g;
        break;
      }
    if (group_of[u] == -1) {
      b.groups.push_back({u});
      group_of[u] = (int)b.groups.size() - 1;
    } else {
      b.groups[group_of[u]].push_back(u);
    }
  }
  int ng = (int)b.groups.size();

  int root = b.new_node(-1, 0.0);
  if (ng == 1) {
    b.attach_group(root, b.groups[0]);
    return b.emb;
  }

  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
  bool uniform = true;
  for (int a = 0; a < ng; ++a)
    for (int c = a + 1; c < ng; ++c) {
      double x = b.gdist(a, c);
      dmin = std::min(dmin, x);
      dmax = std::max(dmax, x);
      if (std::abs(x - b.gdist(0, 1)) > kPropTol * std::max(1.0, x)) uniform = false;
    }

  if (uniform) {
    // Exact star: every pairwise distance realized as two half-edges.
    for (const auto& g : b.groups) {
      int leaf = b.new_node(root, dmax / 2.0);
      b.attach_group(leaf, g);
    }
    return b.emb;
  }

  // Scale so the smallest positive distance is 2; then level-0 clusters are
  // singletons for any radius_scale in [1,2).
  double scale = 2.0 / dmin;
  b.scale = scale;
  b.unit = 1.0 / scale;
  b.radius_scale = urand(rng, 1.0, 2.0);
  std::uniform_int_distribution<int> pick(0, ng - 1);
  b.perm.resize(ng);
  std::iota(b.perm.begin(), b.perm.end(), 0);
  std::shuffle(b.perm.begin(), b.perm.end(), rng);

  int top = 0;
  while (std::ldexp(1.0, top - 1) * b.radius_scale < dmax * scale) ++top;
  std::vector<int> all(ng);
  std::iota(all.begin(), all.end(), 0);
  b.partition(root, all, top);
  return b.emb;
}

}  // namespace soad

#endif  // SOAD_EMBEDDING_HPP
