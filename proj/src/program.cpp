#include "dyckref/program.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

namespace dyckref {

int AsyncProgram::add_state(const std::string& name) {
  state_names.push_back(name);
  return num_states++;
}

void AsyncProgram::validate() const {
  grammar.validate();
  if (q0 < 0 || q0 >= num_states || qf < 0 || qf >= num_states)
    throw std::invalid_argument("program: undeclared initial or final state");
  if (!gamma0.is_handler())
    throw std::invalid_argument("program: initial handler is not a handler");
  for (const auto& r : rules) {
    if (r.from < 0 || r.from >= num_states || r.to < 0 || r.to >= num_states)
      throw std::invalid_argument("program: rule references unknown state");
    if (!r.handler.is_handler())
      throw std::invalid_argument("program: rule handler symbol invalid");
    if (r.nt < 0 || r.nt >= int(grammar.num_nonterminals()))
      throw std::invalid_argument("program: rule references unknown nonterminal");
  }
}

Configuration initial_configuration(const AsyncProgram& p) {
  Configuration c;
  c.state = p.q0;
  c.pending[p.gamma0] = 1;
  return c;
}

Configuration step(const AsyncProgram& p, const Configuration& c, int rule_idx,
                   const Word& u, Word* emitted, bool check_derivation) {
  const Rule& r = p.rules.at(rule_idx);
  if (c.state != r.from)
    throw std::invalid_argument("step: rule not enabled in this state");
  auto it = c.pending.find(r.handler);
  if (it == c.pending.end() || it->second <= 0)
    throw std::invalid_argument("step: handler instance not available");
  if (check_derivation && !derives(p.grammar, r.nt, u))
    throw std::invalid_argument("step: word not derivable from rule nonterminal");
  Configuration out = c;
  out.state = r.to;
  if (--out.pending[r.handler] == 0) out.pending.erase(r.handler);
  if (emitted) emitted->clear();
  for (Sym s : u) {
    if (s.is_handler())
      out.pending[s]++;
    else if (emitted)
      emitted->push_back(s);
  }
  return out;
}

std::vector<Word> enumerate_traces(const AsyncProgram& p, int max_steps,
                                   int max_word, int64_t cap) {
  p.validate();
  // Handler words per rule nonterminal, memoized.
  std::map<int, std::vector<Word>> words;
  auto words_of = [&](int nt) -> const std::vector<Word>& {
    auto it = words.find(nt);
    if (it != words.end()) return it->second;
    return words.emplace(nt, enumerate_words_from(p.grammar, nt, max_word, cap))
        .first->second;
  };

  std::set<Word> traces;
  std::set<std::pair<Configuration, Word>> seen;
  std::deque<std::pair<Configuration, Word>> queue;
  queue.push_back({initial_configuration(p), {}});
  seen.insert(queue.front());
  int64_t explored = 0;
  for (int depth = 0; depth <= max_steps && !queue.empty(); ++depth) {
    std::deque<std::pair<Configuration, Word>> next;
    for (auto& [conf, trace] : queue) {
      if (conf.state == p.qf) {
        traces.insert(trace);
        if (int64_t(traces.size()) > cap)
          throw CapExceeded("enumerate_traces", cap);
      }
      if (depth == max_steps) continue;
      for (size_t ri = 0; ri < p.rules.size(); ++ri) {
        const Rule& r = p.rules[ri];
        if (r.from != conf.state) continue;
        auto have = conf.pending.find(r.handler);
        if (have == conf.pending.end() || have->second <= 0) continue;
        for (const Word& u : words_of(r.nt)) {
          Word emitted;
          Configuration c2 = step(p, conf, int(ri), u, &emitted);
          Word t2 = trace;
          t2.insert(t2.end(), emitted.begin(), emitted.end());
          auto key = std::make_pair(std::move(c2), std::move(t2));
          if (++explored > 64 * cap)
            throw CapExceeded("enumerate_traces", cap);
          if (seen.insert(key).second) next.push_back(key);
        }
      }
    }
    queue = std::move(next);
  }
  return {traces.begin(), traces.end()};
}

bool bounded_reachable(const AsyncProgram& p, int max_steps, int max_word,
                       int64_t cap) {
  // Like enumerate_traces but without tracking trace content.
  std::map<int, std::vector<Word>> words;
  auto words_of = [&](int nt) -> const std::vector<Word>& {
    auto it = words.find(nt);
    if (it != words.end()) return it->second;
    return words.emplace(nt, enumerate_words_from(p.grammar, nt, max_word, cap))
        .first->second;
  };
  std::set<Configuration> seen;
  std::deque<Configuration> queue;
  queue.push_back(initial_configuration(p));
  seen.insert(queue.front());
  for (int depth = 0; depth <= max_steps && !queue.empty(); ++depth) {
    std::deque<Configuration> next;
    for (const auto& conf : queue) {
      if (conf.state == p.qf) return true;
      if (depth == max_steps) continue;
      for (size_t ri = 0; ri < p.rules.size(); ++ri) {
        const Rule& r = p.rules[ri];
        if (r.from != conf.state) continue;
        auto have = conf.pending.find(r.handler);
        if (have == conf.pending.end() || have->second <= 0) continue;
        for (const Word& u : words_of(r.nt)) {
          Configuration c2 = step(p, conf, int(ri), u, nullptr);
          if (int64_t(seen.size()) > cap) return false;  // budget exhausted
          if (seen.insert(c2).second) next.push_back(std::move(c2));
        }
      }
    }
    queue = std::move(next);
  }
  return false;
}

// ---- transducers ----------------------------------------------------------------

std::vector<std::pair<Word, Word>> transducer_pairs(const Transducer& t,
                                                    int max_len, int64_t cap) {
  std::set<std::pair<Word, Word>> out;
  std::set<std::tuple<int, Word, Word>> seen;
  std::deque<std::tuple<int, Word, Word>> queue;
  queue.push_back({t.initial, {}, {}});
  seen.insert(queue.front());
  while (!queue.empty()) {
    auto [q, in, outw] = queue.front();
    queue.pop_front();
    if (q == t.final_state) {
      out.insert({in, outw});
      if (int64_t(out.size()) > cap) throw CapExceeded("transducer_pairs", cap);
    }
    for (const auto& e : t.edges) {
      if (e.from != q) continue;
      Word in2 = in, out2 = outw;
      if (e.in) {
        if (int(in.size()) >= max_len) continue;
        in2.push_back(*e.in);
      }
      if (e.out) out2.push_back(*e.out);
      if (int(out2.size()) > max_len + 2) continue;  // output paced by input
      auto key = std::make_tuple(e.to, std::move(in2), std::move(out2));
      if (seen.insert(key).second) queue.push_back(key);
    }
  }
  return {out.begin(), out.end()};
}

bool offset_preserving(const Transducer& t, int max_len) {
  for (const auto& [in, out] : transducer_pairs(t, max_len, 1000000))
    if (offset(in) != offset(out)) return false;
  return true;
}

AsyncProgram apply_transduction(const AsyncProgram& p, const Transducer& t) {
  p.validate();
  if (t.initial < 0 || t.final_state < 0)
    throw std::invalid_argument("apply_transduction: incomplete transducer");

  int np = t.num_states;
  // Epsilon-input closure words: R_eps[p][p'] = output words along
  // epsilon-input paths. Inputs here are acyclic in epsilon (checked).
  std::vector<std::vector<std::set<Word>>> r_eps(
      np, std::vector<std::set<Word>>(np));
  for (int q = 0; q < np; ++q) r_eps[q][q].insert(Word{});
  bool grew = true;
  int64_t guard = 0;
  while (grew) {
    grew = false;
    for (const auto& e : t.edges) {
      if (e.in) continue;
      for (int q = 0; q < np; ++q)
        for (const Word& w : std::set<Word>(r_eps[q][e.from])) {
          Word w2 = w;
          if (e.out) w2.push_back(*e.out);
          if (r_eps[q][e.to].insert(w2).second) grew = true;
        }
    }
    if (++guard > 1000)
      throw std::invalid_argument(
          "apply_transduction: epsilon-input cycle in transducer");
  }
  // Images of a single input letter: R_sym[a][p][p'].
  auto images = [&](Sym a) {
    std::vector<std::vector<std::set<Word>>> r(
        np, std::vector<std::set<Word>>(np));
    for (const auto& e : t.edges) {
      if (!e.in || *e.in != a) continue;
      for (int q = 0; q < np; ++q)
        for (int q2 = 0; q2 < np; ++q2)
          for (const Word& pre : r_eps[q][e.from])
            for (const Word& post : r_eps[e.to][q2]) {
              Word w = pre;
              if (e.out) w.push_back(*e.out);
              w.insert(w.end(), post.begin(), post.end());
              r[q][q2].insert(w);
            }
    }
    return r;
  };
  std::map<Sym, std::vector<std::vector<std::set<Word>>>> r_sym;
  for (const auto& prod : p.grammar.productions)
    for (const auto& s : prod.rhs) {
      if (s.tag == GSym::Terminal && !s.t.is_handler())
        if (!r_sym.count(s.t)) r_sym.emplace(s.t, images(s.t));
      if (s.tag == GSym::Star)
        for (Sym x : s.star)
          if (!x.is_handler())
            throw std::invalid_argument(
                "apply_transduction: event letters inside star unsupported");
    }

  AsyncProgram out;
  out.table = p.table;
  out.gamma0 = p.gamma0;
  // States (q, p).
  for (int q = 0; q < p.num_states; ++q)
    for (int tp = 0; tp < np; ++tp)
      out.add_state(p.state_names[q] + "." + std::to_string(tp));
  auto st = [&](int q, int tp) { return q * np + tp; };
  out.q0 = st(p.q0, t.initial);
  out.qf = st(p.qf, t.final_state);

  // Grammar nonterminals A(p, p').
  Grammar& g = out.grammar;
  size_t n = p.grammar.num_nonterminals();
  auto nt_of = [&](int a, int q, int q2) { return (a * np + q) * np + q2; };
  for (size_t a = 0; a < n; ++a)
    for (int q = 0; q < np; ++q)
      for (int q2 = 0; q2 < np; ++q2)
        g.add_nonterminal(p.grammar.nt_names[a] + "." + std::to_string(q) +
                          "." + std::to_string(q2));
  g.start = nt_of(p.grammar.start, t.initial, t.final_state);

  for (const auto& prod : p.grammar.productions) {
    // Chains of transducer states across the rhs.
    std::function<void(size_t, int, int, std::vector<GSym>&)> rec =
        [&](size_t i, int q_begin, int q, std::vector<GSym>& rhs) {
          if (i == prod.rhs.size()) {
            g.add_production(nt_of(prod.lhs, q_begin, q), rhs);
            return;
          }
          const GSym& s = prod.rhs[i];
          if (s.tag == GSym::Terminal && s.t.is_handler()) {
            rhs.push_back(s);
            rec(i + 1, q_begin, q, rhs);
            rhs.pop_back();
          } else if (s.tag == GSym::Terminal) {
            const auto& r = r_sym.at(s.t);
            for (int q2 = 0; q2 < np; ++q2)
              for (const Word& w : r[q][q2]) {
                size_t before = rhs.size();
                for (Sym x : w) rhs.push_back(GSym::terminal(x));
                rec(i + 1, q_begin, q2, rhs);
                rhs.resize(before);
              }
          } else if (s.tag == GSym::Star) {
            rhs.push_back(s);  // handlers only, checked above
            rec(i + 1, q_begin, q, rhs);
            rhs.pop_back();
          } else {
            for (int q2 = 0; q2 < np; ++q2) {
              rhs.push_back(GSym::nonterminal(nt_of(s.nt, q, q2)));
              rec(i + 1, q_begin, q2, rhs);
              rhs.pop_back();
            }
          }
        };
    std::vector<GSym> rhs;
    for (int q = 0; q < np; ++q) rec(0, q, q, rhs);
  }

  // Rules (q,p) -> (q',p') with the nonterminal spanning (p, p').
  for (const auto& r : p.rules)
    for (int q = 0; q < np; ++q)
      for (int q2 = 0; q2 < np; ++q2)
        out.rules.push_back(
            {st(r.from, q), r.handler, nt_of(r.nt, q, q2), st(r.to, q2)});

  trim_program_grammar(out);
  out.validate();
  return out;
}

void trim_program_grammar(AsyncProgram& p) {
  // The grammar's roots are the rule nonterminals (plus the start symbol);
  // trim from a synthetic root covering all of them.
  Grammar g = p.grammar;
  int root = g.add_nonterminal("!root");
  std::set<int> roots;
  for (const auto& r : p.rules) roots.insert(r.nt);
  if (g.start >= 0 && g.start != root) roots.insert(g.start);
  for (int a : roots) g.add_production(root, {GSym::nonterminal(a)});
  int old_start = g.start;
  g.start = root;
  std::vector<int> remap;
  Grammar t = trim(g, &remap);
  // Drop the synthetic root and its productions.
  Grammar clean;
  std::vector<int> final_map(p.grammar.num_nonterminals(), -1);
  for (size_t a = 0; a < p.grammar.num_nonterminals(); ++a)
    if (remap[a] >= 0)
      final_map[a] = clean.add_nonterminal(p.grammar.nt_names[a]);
  for (const auto& prod : t.productions) {
    if (remap[root] >= 0 && prod.lhs == remap[root]) continue;
    // Map trimmed indices back through the original naming.
    Production q = prod;
    // Build reverse map of remap once.
    q.lhs = -1;
    for (size_t a = 0; a < p.grammar.num_nonterminals(); ++a)
      if (remap[a] == prod.lhs) q.lhs = final_map[a];
    bool ok = q.lhs >= 0;
    for (auto& s : q.rhs)
      if (s.tag == GSym::Nonterminal) {
        int orig = -1;
        for (size_t a = 0; a < p.grammar.num_nonterminals(); ++a)
          if (remap[a] == s.nt) orig = int(a);
        if (orig < 0 || final_map[orig] < 0) ok = false;
        else s.nt = final_map[orig];
      }
    if (ok) clean.productions.push_back(std::move(q));
  }
  clean.start = old_start >= 0 && final_map[old_start] >= 0
                    ? final_map[old_start]
                    : clean.add_nonterminal("!start");
  clean.normalize();
  std::vector<Rule> live;
  for (auto r : p.rules)
    if (final_map[r.nt] >= 0) {
      r.nt = final_map[r.nt];
      live.push_back(r);
    }
  p.grammar = std::move(clean);
  p.rules = std::move(live);
}

Transducer make_aux_transducer(const SymbolTable& table, AuxKind which) {
  Transducer t;
  size_t bases = table.num_bases();
  auto add_rho_loops = [&](int q) {
    for (size_t b = 0; b < bases; ++b) {
      t.add_edge(q, open_sym(uint16_t(b)), canon_open(), q);
      t.add_edge(q, close_sym(uint16_t(b)), canon_close(), q);
    }
  };
  switch (which) {
    case AuxKind::O: {
      int q = t.add_state();
      t.initial = q;
      t.final_state = q;
      add_rho_loops(q);
      break;
    }
    case AuxKind::D: {
      int d0 = t.add_state();
      int d1 = t.add_state();
      int d2 = t.add_state();
      int d3 = t.add_state();
      t.initial = d0;
      t.final_state = d3;
      t.add_edge(d0, std::nullopt, hash_sym(), d1);
      add_rho_loops(d1);
      t.add_edge(d1, std::nullopt, barhash_sym(), d2);
      for (size_t b = 0; b < bases; ++b)
        t.add_edge(d2, close_sym(uint16_t(b)), canon_close(), d3);
      add_rho_loops(d3);
      break;
    }
    case AuxKind::M: {
      int m0 = t.add_state();
      int m2 = t.add_state();
      t.initial = m0;
      t.final_state = m2;
      add_rho_loops(m0);
      add_rho_loops(m2);
      for (size_t y = 0; y < bases; ++y) {
        int my = t.add_state();
        add_rho_loops(my);
        t.add_edge(m0, open_sym(uint16_t(y)), hash_sym(), my);
        for (size_t z = 0; z < bases; ++z)
          if (z != y)
            t.add_edge(my, close_sym(uint16_t(z)), barhash_sym(), m2);
      }
      break;
    }
  }
  return t;
}

AsyncProgram build_aux(const AsyncProgram& p, AuxKind which) {
  Transducer t = make_aux_transducer(p.table, which);
  return apply_transduction(p, t);
}

// ---- utility ---------------------------------------------------------------------

AsyncProgram restrict_to_useful(const AsyncProgram& p,
                                const std::set<int>& useful) {
  AsyncProgram out = p;
  std::vector<Production> keep;
  for (const auto& prod : p.grammar.productions) {
    if (!useful.count(prod.lhs)) continue;
    bool ok = true;
    for (const auto& s : prod.rhs)
      if (s.tag == GSym::Nonterminal && !useful.count(s.nt)) ok = false;
    if (ok) keep.push_back(prod);
  }
  out.grammar.productions = std::move(keep);
  std::vector<Rule> rules;
  for (const auto& r : p.rules)
    if (useful.count(r.nt)) rules.push_back(r);
  out.rules = std::move(rules);
  return out;
}

std::string dump(const AsyncProgram& p) {
  std::ostringstream os;
  os << "states:";
  for (const auto& s : p.state_names) os << ' ' << s;
  os << "\ninit: " << p.state_names.at(p.q0);
  os << "\nfinal: " << p.state_names.at(p.qf);
  os << "\nstart: " << p.table.name(p.gamma0) << '\n';
  os << dump(p.grammar, p.table);
  for (const auto& r : p.rules)
    os << "rule " << p.state_names.at(r.from) << ' ' << p.table.name(r.handler)
       << ' ' << p.grammar.nt_names.at(r.nt) << ' ' << p.state_names.at(r.to)
       << '\n';
  return os.str();
}

}  // namespace dyckref
