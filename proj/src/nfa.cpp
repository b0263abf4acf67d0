#include "dyckref/nfa.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace dyckref {

namespace {

std::set<int> eps_closure(const Nfa& a, const std::set<int>& from) {
  std::set<int> out = from;
  std::deque<int> queue(from.begin(), from.end());
  while (!queue.empty()) {
    int q = queue.front();
    queue.pop_front();
    for (const auto& e : a.edges)
      if (e.from == q && !e.label && out.insert(e.to).second)
        queue.push_back(e.to);
  }
  return out;
}

}  // namespace

std::vector<Word> nfa_words(const Nfa& a, int max_len, int64_t cap) {
  std::set<Word> out;
  if (a.initial < 0) return {};
  // BFS over (state set, word) layers by length.
  std::map<Word, std::set<int>> layer;
  layer[{}] = eps_closure(a, {a.initial});
  for (int len = 0; len <= max_len; ++len) {
    std::map<Word, std::set<int>> next;
    for (const auto& [w, states] : layer) {
      for (int q : states)
        if (a.is_final(q)) {
          out.insert(w);
          if (int64_t(out.size()) > cap) throw CapExceeded("nfa_words", cap);
        }
      if (len == max_len) continue;
      std::map<Sym, std::set<int>> step;
      for (const auto& e : a.edges)
        if (e.label && states.count(e.from)) step[*e.label].insert(e.to);
      for (auto& [sym, tos] : step) {
        Word w2 = w;
        w2.push_back(sym);
        auto closed = eps_closure(a, tos);
        next[w2].insert(closed.begin(), closed.end());
      }
    }
    layer = std::move(next);
    if (layer.empty()) break;
  }
  return {out.begin(), out.end()};
}

Nfa nfa_trim(const Nfa& a) {
  std::vector<bool> fwd(a.num_states, false), bwd(a.num_states, false);
  std::deque<int> queue;
  if (a.initial >= 0) {
    fwd[a.initial] = true;
    queue.push_back(a.initial);
  }
  while (!queue.empty()) {
    int q = queue.front();
    queue.pop_front();
    for (const auto& e : a.edges)
      if (e.from == q && !fwd[e.to]) {
        fwd[e.to] = true;
        queue.push_back(e.to);
      }
  }
  for (int f : a.finals)
    if (f >= 0 && !bwd[f]) {
      bwd[f] = true;
      queue.push_back(f);
    }
  while (!queue.empty()) {
    int q = queue.front();
    queue.pop_front();
    for (const auto& e : a.edges)
      if (e.to == q && !bwd[e.from]) {
        bwd[e.from] = true;
        queue.push_back(e.from);
      }
  }
  Nfa out;
  std::vector<int> remap(a.num_states, -1);
  for (int q = 0; q < a.num_states; ++q)
    if (fwd[q] && bwd[q]) remap[q] = out.add_state();
  if (a.initial >= 0 && remap[a.initial] >= 0) out.initial = remap[a.initial];
  else out.initial = out.add_state();  // empty language automaton
  for (int f : a.finals)
    if (f >= 0 && remap[f] >= 0) out.finals.push_back(remap[f]);
  for (const auto& e : a.edges)
    if (remap[e.from] >= 0 && remap[e.to] >= 0)
      out.add_edge(remap[e.from], e.label, remap[e.to]);
  return out;
}

bool nfa_accepts(const Nfa& a, const Word& w) {
  if (a.initial < 0) return false;
  std::set<int> cur = eps_closure(a, {a.initial});
  for (Sym s : w) {
    std::set<int> next;
    for (const auto& e : a.edges)
      if (e.label && *e.label == s && cur.count(e.from)) next.insert(e.to);
    cur = eps_closure(a, next);
    if (cur.empty()) return false;
  }
  for (int q : cur)
    if (a.is_final(q)) return true;
  return false;
}

}  // namespace dyckref
