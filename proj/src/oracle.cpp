#include "dyckref/oracle.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "dyckref/grammar.hpp"

namespace dyckref {

namespace {

// Independent scheduler walker tracking full runs.
struct TraceWalker {
  const AsyncProgram& p;
  const OracleBudget& b;
  std::map<int, std::vector<Word>> words;
  bool exhausted = false;

  const std::vector<Word>& words_of(int nt) {
    auto it = words.find(nt);
    if (it != words.end()) return it->second;
    std::vector<Word> ws;
    try {
      ws = enumerate_words_from(p.grammar, nt, b.max_word, b.max_results);
    } catch (const CapExceeded&) {
      exhausted = true;
    }
    return words.emplace(nt, std::move(ws)).first->second;
  }

  // Visits every accepted (trace, run) within the budget.
  void walk(const std::function<void(const Word&, const std::vector<RunStep>&)>&
                visit) {
    struct Node {
      Configuration conf;
      Word trace;
      std::vector<RunStep> run;
    };
    std::set<std::pair<Configuration, Word>> seen;
    std::deque<Node> queue;
    queue.push_back({initial_configuration(p), {}, {}});
    seen.insert({queue.front().conf, {}});
    int64_t configs = 0;
    for (int depth = 0; depth <= b.max_steps && !queue.empty(); ++depth) {
      std::deque<Node> next;
      for (auto& node : queue) {
        if (node.conf.state == p.qf) visit(node.trace, node.run);
        if (depth == b.max_steps) continue;
        for (size_t ri = 0; ri < p.rules.size(); ++ri) {
          const Rule& r = p.rules[ri];
          if (r.from != node.conf.state) continue;
          auto have = node.conf.pending.find(r.handler);
          if (have == node.conf.pending.end() || have->second <= 0) continue;
          for (const Word& u : words_of(r.nt)) {
            if (++configs > b.max_configs) {
              exhausted = true;
              return;
            }
            Word emitted;
            Configuration c2 = step(p, node.conf, int(ri), u, &emitted);
            Word t2 = node.trace;
            t2.insert(t2.end(), emitted.begin(), emitted.end());
            if (!seen.insert({c2, t2}).second) continue;
            std::vector<RunStep> run2 = node.run;
            run2.push_back({int(ri), u});
            next.push_back({std::move(c2), std::move(t2), std::move(run2)});
          }
        }
      }
      queue = std::move(next);
    }
  }
};

}  // namespace

OracleInclusion oracle_dyck_inclusion(const AsyncProgram& p,
                                      const OracleBudget& b) {
  p.validate();
  OracleInclusion out;
  TraceWalker walker{p, b};
  std::optional<InclusionWitness> best;
  walker.walk([&](const Word& trace, const std::vector<RunStep>& run) {
    Violation v = classify_violation(trace);
    if (v == Violation::None) return;
    if (!best || trace < best->trace) best = {v, trace, run};
  });
  out.violation = best;
  out.budget_exhausted = walker.exhausted;
  return out;
}

// ---- closure slices ------------------------------------------------------------

namespace {

struct WordSummary {
  MarkerShape shape;
  EffectPair inside_eff, outside_eff;
  Word inside_handlers, outside_handlers;

  friend bool operator==(const WordSummary&, const WordSummary&) = default;
  friend auto operator<=>(const WordSummary&, const WordSummary&) = default;
};

std::optional<WordSummary> summarize(const Word& w) {
  MarkedSplit ms;
  try {
    ms = split_marked(w);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
  if (!is_admissible(w)) return std::nullopt;
  WordSummary s;
  s.shape = ms.shape;
  s.inside_eff = effect(project_brackets(ms.inside));
  s.outside_eff = effect(project_brackets(ms.outside));
  s.inside_handlers = project_handlers(ms.inside);
  s.outside_handlers = project_handlers(ms.outside);
  return s;
}

bool summary_below(const WordSummary& z, const WordSummary& y) {
  return z.shape == y.shape && z.inside_eff.offset == y.inside_eff.offset &&
         z.inside_eff.dip >= y.inside_eff.dip &&
         z.outside_eff.offset == y.outside_eff.offset &&
         z.outside_eff.dip >= y.outside_eff.dip &&
         subword_leq(z.inside_handlers, y.inside_handlers) &&
         subword_leq(z.outside_handlers, y.outside_handlers);
}

}  // namespace

std::set<Word> closure_slice_of_words(const std::vector<Word>& language,
                                      int len) {
  // Candidate alphabet: canonical brackets, handlers seen, markers seen.
  std::set<Sym> alphabet = {canon_open(), canon_close()};
  std::set<WordSummary> lang_summaries;
  for (const Word& y : language) {
    for (Sym s : y) {
      if (s.is_bracket() && s.base != 0)
        throw std::invalid_argument("closure slice: non-canonical brackets");
      if (s.is_handler() || s.is_marker()) alphabet.insert(s);
    }
    if (auto s = summarize(y)) lang_summaries.insert(*s);
  }
  std::vector<Sym> al(alphabet.begin(), alphabet.end());
  std::set<Word> out;
  std::map<WordSummary, bool> verdict;
  Word cur;
  std::function<void()> rec = [&] {
    if (auto zs = summarize(cur)) {
      auto it = verdict.find(*zs);
      bool in;
      if (it != verdict.end()) {
        in = it->second;
      } else {
        in = false;
        for (const auto& ys : lang_summaries)
          if (summary_below(*zs, ys)) {
            in = true;
            break;
          }
        verdict.emplace(*zs, in);
      }
      if (in) out.insert(cur);
    }
    if (int(cur.size()) == len) return;
    for (Sym s : al) {
      cur.push_back(s);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

std::set<Word> oracle_closure(const Grammar& g, const OracleBudget& b) {
  std::optional<std::set<Word>> prev;
  for (int slack = 0; slack <= b.max_slack; slack += 2) {
    auto words =
        enumerate_words(g, b.closure_len + slack, b.max_results);
    std::set<Word> slice = closure_slice_of_words(words, b.closure_len);
    if (prev && slice == *prev) return slice;
    prev = std::move(slice);
  }
  throw CapExceeded("oracle_closure stabilization", b.max_slack);
}

std::set<Word> oracle_closure(const Nfa& a, const OracleBudget& b) {
  std::optional<std::set<Word>> prev;
  for (int slack = 0; slack <= b.max_slack; slack += 2) {
    auto words = nfa_words(a, b.closure_len + slack, b.max_results);
    std::set<Word> slice = closure_slice_of_words(words, b.closure_len);
    if (prev && slice == *prev) return slice;
    prev = std::move(slice);
  }
  throw CapExceeded("oracle_closure stabilization", b.max_slack);
}

// ---- coverability ----------------------------------------------------------------

CoverabilityComparison oracle_coverability(const Vass& v,
                                           const OracleBudget& b) {
  CoverabilityComparison out;
  // Forward bounded exploration.
  std::set<std::pair<int, std::vector<int64_t>>> seen;
  std::deque<std::pair<int, std::vector<int64_t>>> queue;
  queue.push_back({v.q0, std::vector<int64_t>(v.num_counters, 0)});
  seen.insert(queue.front());
  while (!queue.empty()) {
    auto [q, c] = queue.front();
    queue.pop_front();
    if (q == v.qf) {
      out.forward_covered = true;
      break;
    }
    for (const auto& e : v.edges) {
      if (e.from != q) continue;
      std::vector<int64_t> c2 = c;
      bool ok = true;
      for (int i = 0; i < v.num_counters; ++i) {
        c2[i] += e.delta[i];
        if (c2[i] < 0 || c2[i] > b.counter_cap) ok = false;
      }
      if (!ok) continue;
      auto key = std::make_pair(e.to, std::move(c2));
      if (int64_t(seen.size()) >= b.max_configs) break;
      if (seen.insert(key).second) queue.push_back(key);
    }
  }
  CoverResult r = coverable(v, v.qf);
  out.backward = r.status;
  // The forward search under-approximates: finding the target while the
  // backward algorithm denies it is the only inconsistent combination.
  out.consistent =
      !(out.forward_covered && r.status == CoverResult::Unreachable);
  return out;
}

}  // namespace dyckref
