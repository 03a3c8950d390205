#include "gsamr/senses.hpp"

#include <cctype>
#include <sstream>

#include "gsamr/error.hpp"

namespace gsamr {

bool has_sense_suffix(const std::string& label) {
  const std::size_t n = label.size();
  return n > 3 && label[n - 3] == '-' &&
         std::isdigit(static_cast<unsigned char>(label[n - 2])) &&
         std::isdigit(static_cast<unsigned char>(label[n - 1]));
}

std::string strip_sense(const std::string& label) {
  return has_sense_suffix(label) ? label.substr(0, label.size() - 3) : label;
}

AmrGraph remove_senses(const AmrGraph& g) {
  AmrGraph out;
  for (const AmrNode& n : g.nodes()) {
    out.add_node(n.var, n.attribute ? n.label : strip_sense(n.label), n.attribute);
  }
  for (const AmrEdge& e : g.edges()) out.add_edge(e.src, e.tgt, e.label);
  out.set_root(g.root());
  return out;
}

void SenseTable::observe(const std::string& full_concept) {
  if (!has_sense_suffix(full_concept)) return;
  const std::string stripped = strip_sense(full_concept);
  const int count = ++counts_[full_concept];
  auto it = best_.find(stripped);
  if (it == best_.end()) {
    best_[stripped] = {full_concept, count};
    return;
  }
  auto& [best_full, best_count] = it->second;
  if (count > best_count || (count == best_count && full_concept < best_full)) {
    best_full = full_concept;
    best_count = count;
  }
}

std::string SenseTable::restore(const std::string& stripped) const {
  auto it = best_.find(stripped);
  return it == best_.end() ? stripped : it->second.first;
}

std::string SenseTable::serialize() const {
  std::ostringstream os;
  for (const auto& [stripped, entry] : best_) {
    os << stripped << "\t" << entry.first << "\t" << entry.second << "\n";
  }
  return os.str();
}

SenseTable SenseTable::deserialize(const std::string& text) {
  SenseTable t;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string stripped, full;
    int count = 0;
    if (!std::getline(ls, stripped, '\t') || !std::getline(ls, full, '\t') || !(ls >> count) ||
        count <= 0) {
      throw DataError("sense table line " + std::to_string(line_no) + ": malformed entry");
    }
    t.best_[stripped] = {full, count};
    t.counts_[full] = count;
  }
  return t;
}

SenseTable build_sense_table(const std::vector<AmrGraph>& gold_corpus) {
  if (gold_corpus.empty()) throw DataError("build_sense_table: empty corpus");
  SenseTable t;
  for (const AmrGraph& g : gold_corpus) {
    for (const AmrNode& n : g.nodes()) {
      if (!n.attribute) t.observe(n.label);
    }
  }
  return t;
}

AmrGraph restore_senses(const AmrGraph& g, const SenseTable& table) {
  AmrGraph out;
  for (const AmrNode& n : g.nodes()) {
    out.add_node(n.var, n.attribute ? n.label : table.restore(n.label), n.attribute);
  }
  for (const AmrEdge& e : g.edges()) out.add_edge(e.src, e.tgt, e.label);
  out.set_root(g.root());
  return out;
}

AmrGraph strip_wiki(const AmrGraph& g) {
  std::vector<char> drop(static_cast<std::size_t>(g.node_count()), 0);
  for (const AmrEdge& e : g.edges()) {
    if (e.label == "wiki" && g.node(e.tgt).attribute) drop[static_cast<std::size_t>(e.tgt)] = 1;
  }
  AmrGraph out;
  std::vector<int> remap(static_cast<std::size_t>(g.node_count()), -1);
  for (int i = 0; i < g.node_count(); ++i) {
    if (!drop[static_cast<std::size_t>(i)]) {
      remap[static_cast<std::size_t>(i)] =
          out.add_node(g.node(i).var, g.node(i).label, g.node(i).attribute);
    }
  }
  for (const AmrEdge& e : g.edges()) {
    const int s = remap[static_cast<std::size_t>(e.src)];
    const int t = remap[static_cast<std::size_t>(e.tgt)];
    if (s >= 0 && t >= 0) out.add_edge(s, t, e.label);
  }
  out.set_root(remap[static_cast<std::size_t>(g.root())]);
  return out;
}

}  // namespace gsamr
