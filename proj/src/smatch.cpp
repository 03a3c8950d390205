#include "gsamr/smatch.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "gsamr/error.hpp"
#include "gsamr/rng.hpp"
#include "gsamr/senses.hpp"

namespace gsamr {

TripleSet TripleSet::from_graph(const AmrGraph& g) {
  TripleSet t;
  std::vector<int> var_of(static_cast<std::size_t>(g.node_count()), -1);
  for (int i = 0; i < g.node_count(); ++i) {
    if (!g.node(i).attribute) {
      var_of[static_cast<std::size_t>(i)] = t.var_count;
      t.instances.push_back({t.var_count, g.node(i).label});
      ++t.var_count;
    }
  }
  if (g.root() >= 0) {
    const int rv = var_of[static_cast<std::size_t>(g.root())];
    if (rv < 0) throw DataError("smatch: attribute node as root");
    t.attributes.push_back({"TOP", rv, "top"});
  }
  for (const AmrEdge& e : g.edges()) {
    const int sv = var_of[static_cast<std::size_t>(e.src)];
    if (sv < 0) throw DataError("smatch: attribute node with an outgoing edge");
    if (g.node(e.tgt).attribute) {
      t.attributes.push_back({e.label, sv, g.node(e.tgt).label});
    } else {
      t.relations.push_back({e.label, sv, var_of[static_cast<std::size_t>(e.tgt)]});
    }
  }
  return t;
}

namespace {

// Right-side triples keyed for multiset matching.
struct RightIndex {
  std::unordered_map<std::string, int> counts;

  static std::string ikey(int var, const std::string& label) {
    return "i\x1f" + std::to_string(var) + "\x1f" + label;
  }
  static std::string rkey(const std::string& label, int src, int tgt) {
    return "r\x1f" + label + "\x1f" + std::to_string(src) + "\x1f" + std::to_string(tgt);
  }
  static std::string akey(const std::string& label, int var, const std::string& value) {
    return "a\x1f" + label + "\x1f" + std::to_string(var) + "\x1f" + value;
  }

  explicit RightIndex(const TripleSet& t) {
    for (const auto& i : t.instances) ++counts[ikey(i.var, i.label)];
    for (const auto& r : t.relations) ++counts[rkey(r.label, r.src, r.tgt)];
    for (const auto& a : t.attributes) ++counts[akey(a.label, a.var, a.value)];
  }
};

int score_mapping(const TripleSet& left, const RightIndex& right, const std::vector<int>& map) {
  std::unordered_map<std::string, int> remaining = right.counts;
  int matched = 0;
  auto take = [&](const std::string& key) {
    auto it = remaining.find(key);
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  };
  for (const auto& i : left.instances) {
    if (map[static_cast<std::size_t>(i.var)] >= 0) {
      take(RightIndex::ikey(map[static_cast<std::size_t>(i.var)], i.label));
    }
  }
  for (const auto& a : left.attributes) {
    if (map[static_cast<std::size_t>(a.var)] >= 0) {
      take(RightIndex::akey(a.label, map[static_cast<std::size_t>(a.var)], a.value));
    }
  }
  for (const auto& r : left.relations) {
    const int s = map[static_cast<std::size_t>(r.src)];
    const int t = map[static_cast<std::size_t>(r.tgt)];
    if (s >= 0 && t >= 0) take(RightIndex::rkey(r.label, s, t));
  }
  return matched;
}

MatchResult finish(const TripleSet& lt, const TripleSet& rt, int matched,
                   std::vector<int> mapping) {
  MatchResult res;
  res.matched = matched;
  res.total_left = lt.total();
  res.total_right = rt.total();
  res.precision = res.total_left ? static_cast<double>(matched) / res.total_left : 1.0;
  res.recall = res.total_right ? static_cast<double>(matched) / res.total_right : 1.0;
  const int denom = res.total_left + res.total_right;
  res.f1 = denom ? 2.0 * matched / denom : 1.0;
  res.mapping = std::move(mapping);
  return res;
}

// Steepest-ascent local search over single reassignments and pairwise swaps.
int hill_climb(const TripleSet& left, const RightIndex& right, int right_vars,
               std::vector<int>& map) {
  const int v1 = left.var_count;
  std::vector<char> used(static_cast<std::size_t>(right_vars), 0);
  for (int m : map) {
    if (m >= 0) used[static_cast<std::size_t>(m)] = 1;
  }
  int current = score_mapping(left, right, map);
  for (;;) {
    int best_gain = 0;
    int best_kind = -1, best_a = -1, best_b = -1;
    // Reassign one variable to any free slot (or unmap it).
    for (int v = 0; v < v1; ++v) {
      const int old = map[static_cast<std::size_t>(v)];
      for (int u = -1; u < right_vars; ++u) {
        if (u == old) continue;
        if (u >= 0 && used[static_cast<std::size_t>(u)]) continue;
        map[static_cast<std::size_t>(v)] = u;
        const int s = score_mapping(left, right, map);
        if (s - current > best_gain) {
          best_gain = s - current;
          best_kind = 0;
          best_a = v;
          best_b = u;
        }
      }
      map[static_cast<std::size_t>(v)] = old;
    }
    // Swap the images of two variables.
    for (int v = 0; v < v1; ++v) {
      for (int w = v + 1; w < v1; ++w) {
        std::swap(map[static_cast<std::size_t>(v)], map[static_cast<std::size_t>(w)]);
        const int s = score_mapping(left, right, map);
        if (s - current > best_gain) {
          best_gain = s - current;
          best_kind = 1;
          best_a = v;
          best_b = w;
        }
        std::swap(map[static_cast<std::size_t>(v)], map[static_cast<std::size_t>(w)]);
      }
    }
    if (best_kind < 0) break;
    if (best_kind == 0) {
      const int old = map[static_cast<std::size_t>(best_a)];
      if (old >= 0) used[static_cast<std::size_t>(old)] = 0;
      if (best_b >= 0) used[static_cast<std::size_t>(best_b)] = 1;
      map[static_cast<std::size_t>(best_a)] = best_b;
    } else {
      std::swap(map[static_cast<std::size_t>(best_a)], map[static_cast<std::size_t>(best_b)]);
    }
    current += best_gain;
  }
  return current;
}

}  // namespace

MatchResult smatch(const AmrGraph& left, const AmrGraph& right, int restarts, std::uint64_t seed) {
  const TripleSet lt = TripleSet::from_graph(left);
  const TripleSet rt = TripleSet::from_graph(right);
  const RightIndex ri(rt);
  const int v1 = lt.var_count, v2 = rt.var_count;

  Rng rng(seed);
  int best = -1;
  std::vector<int> best_map;
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    std::vector<int> map(static_cast<std::size_t>(v1), -1);
    if (r == 0) {
      // Concept-matching initialization: pair identical concepts first come
      // first served, in variable order.
      std::vector<char> used(static_cast<std::size_t>(v2), 0);
      for (const auto& li : lt.instances) {
        for (const auto& ji : rt.instances) {
          if (!used[static_cast<std::size_t>(ji.var)] && li.label == ji.label) {
            map[static_cast<std::size_t>(li.var)] = ji.var;
            used[static_cast<std::size_t>(ji.var)] = 1;
            break;
          }
        }
      }
    } else {
      std::vector<int> targets(static_cast<std::size_t>(v2));
      for (int i = 0; i < v2; ++i) targets[static_cast<std::size_t>(i)] = i;
      rng.shuffle(targets);
      std::vector<int> sources(static_cast<std::size_t>(v1));
      for (int i = 0; i < v1; ++i) sources[static_cast<std::size_t>(i)] = i;
      rng.shuffle(sources);
      const int n = std::min(v1, v2);
      for (int i = 0; i < n; ++i) {
        map[static_cast<std::size_t>(sources[static_cast<std::size_t>(i)])] =
            targets[static_cast<std::size_t>(i)];
      }
    }
    const int score = hill_climb(lt, ri, v2, map);
    if (score > best) {
      best = score;
      best_map = map;
    }
  }
  return finish(lt, rt, best, std::move(best_map));
}

namespace {

void enumerate_maps(int v, int v1, const std::vector<int>& free_targets, std::vector<char>& used,
                    std::vector<int>& map, const TripleSet& lt, const RightIndex& ri, int& best,
                    std::vector<int>& best_map) {
  if (v == v1) {
    const int s = score_mapping(lt, ri, map);
    if (s > best) {
      best = s;
      best_map = map;
    }
    return;
  }
  bool any_free = false;
  for (std::size_t i = 0; i < free_targets.size(); ++i) {
    if (used[i]) continue;
    any_free = true;
    used[i] = 1;
    map[static_cast<std::size_t>(v)] = free_targets[i];
    enumerate_maps(v + 1, v1, free_targets, used, map, lt, ri, best, best_map);
    used[i] = 0;
  }
  if (!any_free) {
    // Right side exhausted: remaining variables stay unmapped. Mapping a
    // variable never lowers the match count, so skips are only ever forced.
    map[static_cast<std::size_t>(v)] = -1;
    enumerate_maps(v + 1, v1, free_targets, used, map, lt, ri, best, best_map);
  }
  map[static_cast<std::size_t>(v)] = -1;
}

}  // namespace

MatchResult smatch_exact(const AmrGraph& left, const AmrGraph& right) {
  const TripleSet lt = TripleSet::from_graph(left);
  const TripleSet rt = TripleSet::from_graph(right);
  if (std::min(lt.var_count, rt.var_count) > 8) {
    throw UsageError("smatch_exact: graphs too large (min side > 8 variables)");
  }
  // Enumerate from the smaller side to bound the factorial.
  const bool flip = lt.var_count > rt.var_count;
  const TripleSet& a = flip ? rt : lt;
  const TripleSet& b = flip ? lt : rt;
  const RightIndex ri(b);
  std::vector<int> targets(static_cast<std::size_t>(b.var_count));
  for (int i = 0; i < b.var_count; ++i) targets[static_cast<std::size_t>(i)] = i;
  std::vector<char> used(targets.size(), 0);
  std::vector<int> map(static_cast<std::size_t>(a.var_count), -1);
  std::vector<int> best_map = map;
  int best = -1;
  enumerate_maps(0, a.var_count, targets, used, map, a, ri, best, best_map);

  if (!flip) return finish(lt, rt, best, std::move(best_map));
  // Invert the mapping back to left -> right.
  std::vector<int> inv(static_cast<std::size_t>(lt.var_count), -1);
  for (int i = 0; i < rt.var_count; ++i) {
    const int m = best_map[static_cast<std::size_t>(i)];
    if (m >= 0) inv[static_cast<std::size_t>(m)] = i;
  }
  return finish(lt, rt, best, std::move(inv));
}

namespace {

AmrGraph relabel_edges(const AmrGraph& g) {
  AmrGraph out;
  for (const AmrNode& n : g.nodes()) out.add_node(n.var, n.label, n.attribute);
  for (const AmrEdge& e : g.edges()) out.add_edge(e.src, e.tgt, "rel");
  out.set_root(g.root());
  return out;
}

struct Accum {
  long long matched = 0, left = 0, right = 0;
  void add(const MatchResult& r) {
    matched += r.matched;
    left += r.total_left;
    right += r.total_right;
  }
  MatchResult result() const {
    MatchResult res;
    res.matched = static_cast<int>(matched);
    res.total_left = static_cast<int>(left);
    res.total_right = static_cast<int>(right);
    res.precision = left ? static_cast<double>(matched) / left : 1.0;
    res.recall = right ? static_cast<double>(matched) / right : 1.0;
    res.f1 = (left + right) ? 2.0 * matched / (left + right) : 1.0;
    return res;
  }
};

}  // namespace

MatchResult smatch_corpus(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                          int restarts, std::uint64_t seed) {
  if (pred.size() != gold.size()) {
    throw DataError("corpus length mismatch: " + std::to_string(pred.size()) + " vs " +
                    std::to_string(gold.size()));
  }
  Accum acc;
  for (std::size_t i = 0; i < pred.size(); ++i) acc.add(smatch(pred[i], gold[i], restarts, seed));
  return acc.result();
}

FineGrained fine_grained(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                         int restarts, std::uint64_t seed) {
  if (pred.size() != gold.size()) {
    throw DataError("corpus length mismatch: " + std::to_string(pred.size()) + " vs " +
                    std::to_string(gold.size()));
  }
  FineGrained out;
  Accum plain, unlabeled, no_wsd;
  long long c_match = 0, c_pred = 0, c_gold = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    plain.add(smatch(pred[i], gold[i], restarts, seed));
    unlabeled.add(smatch(relabel_edges(pred[i]), relabel_edges(gold[i]), restarts, seed));
    no_wsd.add(smatch(remove_senses(pred[i]), remove_senses(gold[i]), restarts, seed));

    // Bag-of-concepts over non-attribute nodes.
    std::map<std::string, int> bag;
    for (const AmrNode& n : pred[i].nodes()) {
      if (!n.attribute) ++bag[n.label];
    }
    for (const AmrNode& n : gold[i].nodes()) {
      if (n.attribute) continue;
      ++c_gold;
      auto it = bag.find(n.label);
      if (it != bag.end() && it->second > 0) {
        --it->second;
        ++c_match;
      }
    }
    for (const AmrNode& n : pred[i].nodes()) {
      if (!n.attribute) ++c_pred;
    }
  }
  out.smatch_score = plain.result();
  out.unlabeled = unlabeled.result();
  out.no_wsd = no_wsd.result();
  out.concept_precision = c_pred ? static_cast<double>(c_match) / c_pred : 1.0;
  out.concept_recall = c_gold ? static_cast<double>(c_match) / c_gold : 1.0;
  out.concept_f1 =
      (c_pred + c_gold) ? 2.0 * c_match / (c_pred + c_gold) : 1.0;
  return out;
}

}  // namespace gsamr
