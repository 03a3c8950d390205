#pragma once

#include <string>
#include <vector>

namespace gsamr {

// Rooted directed labeled graph of concepts. Nodes are identified by index;
// the original variable name (when parsed from Penman) is kept for error
// reporting only. Attribute nodes hold constants (negation "-", numbers,
// name strings) and never have outgoing edges.
struct AmrNode {
  std::string var;      // original variable name, empty for attributes
  std::string label;  // concept label or constant value (quotes stripped)
  bool attribute = false;
};

struct AmrEdge {
  int src = -1;
  int tgt = -1;
  std::string label;
};

class AmrGraph {
 public:
  int add_node(const std::string& var, const std::string& label, bool attribute);
  // Silently ignores exact duplicate (src, tgt, label) triples.
  void add_edge(int src, int tgt, const std::string& label);
  void set_root(int idx) { root_ = idx; }

  int root() const { return root_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const AmrNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<AmrNode>& nodes() const { return nodes_; }
  const std::vector<AmrEdge>& edges() const { return edges_; }
  bool empty() const { return nodes_.empty(); }

  bool has_edge(int src, int tgt, const std::string& label) const;
  // Every edge incident to `i`, as (edge index, other endpoint, outgoing?).
  std::vector<std::tuple<int, int, bool>> incident(int i) const;

  bool connected_undirected() const;
  // Throws DataError when an invariant is violated: missing/invalid root,
  // disconnected graph, self loops, or attribute nodes with outgoing edges.
  void validate() const;

 private:
  std::vector<AmrNode> nodes_;
  std::vector<AmrEdge> edges_;
  int root_ = -1;
};

// Constants are rendered bare when they look like numbers or polarity
// markers and quoted otherwise.
bool is_bare_constant(const std::string& s);

// Heuristic used when committing model predictions, where gold attribute
// flags are unavailable: polarity marks, numbers and capitalized strings
// become attributes.
bool looks_like_attribute(const std::string& label);

}  // namespace gsamr
