#include "gsamr/oracle.hpp"

#include <algorithm>
#include <sstream>

#include "gsamr/error.hpp"
#include "gsamr/rng.hpp"

namespace gsamr {

int RelationFrequency::count(const std::string& label) const {
  auto it = counts_.find(label);
  return it == counts_.end() ? 0 : it->second;
}

void RelationFrequency::add_corpus(const std::vector<AmrGraph>& graphs) {
  for (const AmrGraph& g : graphs) {
    for (const AmrEdge& e : g.edges()) observe(e.label);
  }
}

std::string RelationFrequency::serialize() const {
  std::ostringstream os;
  for (const auto& [label, count] : counts_) os << label << "\t" << count << "\n";
  return os.str();
}

RelationFrequency RelationFrequency::deserialize(const std::string& text) {
  RelationFrequency f;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string label;
    int count = 0;
    if (!std::getline(ls, label, '\t') || !(ls >> count) || count <= 0) {
      throw DataError("relation frequency line " + std::to_string(line_no) + ": malformed entry");
    }
    f.counts_[label] = count;
  }
  return f;
}

std::vector<OracleStep> bfs_order(const AmrGraph& graph, SiblingOrder order,
                                  const RelationFrequency* freq, std::uint64_t seed) {
  graph.validate();
  if (order == SiblingOrder::FrequencySorted && !freq) {
    throw UsageError("bfs_order: frequency-sorted policy requires a frequency table");
  }
  const int n = graph.node_count();
  std::vector<int> insert_order_of(static_cast<std::size_t>(n), -1);
  std::vector<int> inserted;  // node index per insertion position
  std::vector<OracleStep> steps;
  Rng rng(seed);

  auto record_step = [&](int node) {
    OracleStep step;
    step.label = graph.node(node).label;
    step.attribute = graph.node(node).attribute;
    step.step_index = static_cast<int>(steps.size());
    for (auto [ei, other, outgoing] : graph.incident(node)) {
      const int other_pos = insert_order_of[static_cast<std::size_t>(other)];
      if (other_pos < 0) continue;  // not inserted yet
      const std::string& label = graph.edges()[static_cast<std::size_t>(ei)].label;
      if (outgoing) {
        // gold edge node -> other, i.e. from the new node back to an earlier
        // one: inverse label.
        step.sources.emplace_back(other_pos, label + "-of");
      } else {
        step.sources.emplace_back(other_pos, label);
      }
    }
    std::sort(step.sources.begin(), step.sources.end());
    insert_order_of[static_cast<std::size_t>(node)] = step.step_index;
    inserted.push_back(node);
    steps.push_back(std::move(step));
  };

  record_step(graph.root());
  std::size_t frontier = 0;
  while (frontier < inserted.size()) {
    const int u = inserted[frontier];
    ++frontier;
    // Collect not-yet-inserted neighbors of u with the label linking them.
    struct Child {
      int node;
      std::string label;  // canonical label of the earliest connecting edge
      int edge_index;
    };
    std::vector<Child> children;
    for (auto [ei, other, outgoing] : graph.incident(u)) {
      (void)outgoing;
      if (insert_order_of[static_cast<std::size_t>(other)] >= 0) continue;
      bool seen = false;
      for (const Child& c : children) seen = seen || c.node == other;
      if (!seen) {
        children.push_back({other, graph.edges()[static_cast<std::size_t>(ei)].label, ei});
      }
    }
    if (order == SiblingOrder::Random) {
      rng.shuffle(children);
    } else {
      std::sort(children.begin(), children.end(), [&](const Child& a, const Child& b) {
        const int fa = freq->count(a.label), fb = freq->count(b.label);
        if (fa != fb) return fa > fb;
        if (a.label != b.label) return a.label < b.label;
        const std::string& ca = graph.node(a.node).label;
        const std::string& cb = graph.node(b.node).label;
        if (ca != cb) return ca < cb;
        return a.node < b.node;
      });
    }
    for (const Child& c : children) record_step(c.node);
  }

  OracleStep eog;
  eog.label = kEogToken;
  eog.step_index = static_cast<int>(steps.size());
  steps.push_back(std::move(eog));
  return steps;
}

AmrGraph graph_from_steps(const std::vector<OracleStep>& steps) {
  AmrGraph g;
  for (const OracleStep& step : steps) {
    if (step.label == kEogToken) break;
    const int idx = g.add_node("", step.label, step.attribute);
    for (const auto& [src, label] : step.sources) {
      if (label.size() > 3 && label.compare(label.size() - 3, 3, "-of") == 0) {
        g.add_edge(idx, src, label.substr(0, label.size() - 3));
      } else {
        g.add_edge(src, idx, label);
      }
    }
  }
  if (!g.empty()) g.set_root(0);
  return g;
}

}  // namespace gsamr
