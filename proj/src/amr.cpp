#include "gsamr/amr.hpp"

#include <cctype>
#include <tuple>

#include "gsamr/error.hpp"

namespace gsamr {

int AmrGraph::add_node(const std::string& var, const std::string& label, bool attribute) {
  nodes_.push_back(AmrNode{var, label, attribute});
  if (root_ < 0) root_ = 0;
  return static_cast<int>(nodes_.size()) - 1;
}

void AmrGraph::add_edge(int src, int tgt, const std::string& label) {
  if (src < 0 || src >= node_count() || tgt < 0 || tgt >= node_count()) {
    throw DataError("edge endpoint out of range");
  }
  if (src == tgt) throw DataError("self-loop edge on node " + nodes_[src].label);
  if (has_edge(src, tgt, label)) return;
  edges_.push_back(AmrEdge{src, tgt, label});
}

bool AmrGraph::has_edge(int src, int tgt, const std::string& label) const {
  for (const AmrEdge& e : edges_) {
    if (e.src == src && e.tgt == tgt && e.label == label) return true;
  }
  return false;
}

std::vector<std::tuple<int, int, bool>> AmrGraph::incident(int i) const {
  std::vector<std::tuple<int, int, bool>> out;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    if (edges_[k].src == i) out.emplace_back(static_cast<int>(k), edges_[k].tgt, true);
    if (edges_[k].tgt == i) out.emplace_back(static_cast<int>(k), edges_[k].src, false);
  }
  return out;
}

bool AmrGraph::connected_undirected() const {
  if (nodes_.empty()) return true;
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<int> stack{root_ >= 0 ? root_ : 0};
  seen[static_cast<std::size_t>(stack[0])] = 1;
  int count = 0;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    ++count;
    for (const AmrEdge& e : edges_) {
      int other = -1;
      if (e.src == u) other = e.tgt;
      else if (e.tgt == u) other = e.src;
      if (other >= 0 && !seen[static_cast<std::size_t>(other)]) {
        seen[static_cast<std::size_t>(other)] = 1;
        stack.push_back(other);
      }
    }
  }
  return count == node_count();
}

void AmrGraph::validate() const {
  if (nodes_.empty()) throw DataError("empty graph");
  if (root_ < 0 || root_ >= node_count()) throw DataError("invalid root");
  if (nodes_[static_cast<std::size_t>(root_)].attribute) throw DataError("attribute node as root");
  if (!connected_undirected()) throw DataError("graph is not connected");
  for (const AmrEdge& e : edges_) {
    if (e.src == e.tgt) throw DataError("self-loop edge");
    if (nodes_[static_cast<std::size_t>(e.src)].attribute) {
      throw DataError("attribute node '" + nodes_[static_cast<std::size_t>(e.src)].label +
                      "' has an outgoing edge");
    }
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    for (std::size_t j = i + 1; j < edges_.size(); ++j) {
      if (edges_[i].src == edges_[j].src && edges_[i].tgt == edges_[j].tgt &&
          edges_[i].label == edges_[j].label) {
        throw DataError("duplicate edge " + edges_[i].label);
      }
    }
  }
}

bool is_bare_constant(const std::string& s) {
  if (s == "-" || s == "+") return true;
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i >= s.size()) return false;
  bool saw_digit = false, saw_dot = false;
  for (; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      saw_digit = true;
    } else if (s[i] == '.' && !saw_dot) {
      saw_dot = true;
    } else {
      return false;
    }
  }
  return saw_digit;
}

bool looks_like_attribute(const std::string& label) {
  if (is_bare_constant(label)) return true;
  for (char c : label) {
    if (std::isupper(static_cast<unsigned char>(c))) return true;
  }
  return false;
}

}  // namespace gsamr
