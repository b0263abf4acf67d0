#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dyckref/analysis.hpp"
#include "dyckref/program.hpp"
#include "testutil.hpp"

using namespace dyckref;
using tu::w;

namespace {

GSym T(Sym s) { return GSym::terminal(s); }
GSym N(int a) { return GSym::nonterminal(a); }

// Two-rule program with L = {x ~x}: gamma0 = a, running a emits x and
// spawns b, running b emits ~x and reaches the final state.
AsyncProgram xx_program() {
  AsyncProgram p;
  p.table = SymbolTable({"x"}, {"a", "b"});
  int a = p.grammar.add_nonterminal("A");
  int b = p.grammar.add_nonterminal("B");
  p.grammar.start = a;
  p.grammar.add_production(a, {T(open_sym(0)), T(handler_sym(1))});
  p.grammar.add_production(b, {T(close_sym(0))});
  p.q0 = p.add_state("q0");
  int q1 = p.add_state("q1");
  p.qf = p.add_state("qf");
  p.rules.push_back({p.q0, handler_sym(0), a, q1});
  p.rules.push_back({q1, handler_sym(1), b, p.qf});
  p.gamma0 = handler_sym(0);
  return p;
}

std::set<Word> trace_set(const AsyncProgram& p, int steps, int word) {
  auto ts = enumerate_traces(p, steps, word, 200000);
  return {ts.begin(), ts.end()};
}

Word rho_of(const Word& v) {
  Word out;
  for (Sym s : v) {
    if (s.kind == Sym::Open) out.push_back(canon_open());
    else if (s.kind == Sym::Close) out.push_back(canon_close());
    else out.push_back(s);
  }
  return out;
}

std::set<Word> d_image(const std::set<Word>& traces) {
  std::set<Word> out;
  for (const Word& t : traces)
    for (size_t i = 0; i < t.size(); ++i) {
      if (t[i].kind != Sym::Close) continue;
      Word img = {hash_sym()};
      Word v(t.begin(), t.begin() + i);
      Word rest(t.begin() + i, t.end());
      Word rv = rho_of(v), rr = rho_of(rest);
      img.insert(img.end(), rv.begin(), rv.end());
      img.push_back(barhash_sym());
      img.insert(img.end(), rr.begin(), rr.end());
      out.insert(img);
    }
  return out;
}

std::set<Word> m_image(const std::set<Word>& traces) {
  std::set<Word> out;
  for (const Word& t : traces)
    for (size_t i = 0; i < t.size(); ++i)
      for (size_t j = i + 1; j < t.size(); ++j) {
        if (t[i].kind != Sym::Open || t[j].kind != Sym::Close) continue;
        if (t[i].base == t[j].base) continue;
        Word img = rho_of(Word(t.begin(), t.begin() + i));
        img.push_back(hash_sym());
        Word mid = rho_of(Word(t.begin() + i + 1, t.begin() + j));
        img.insert(img.end(), mid.begin(), mid.end());
        img.push_back(barhash_sym());
        Word tail = rho_of(Word(t.begin() + j + 1, t.end()));
        img.insert(img.end(), tail.begin(), tail.end());
        out.insert(img);
      }
  return out;
}

std::set<Word> rho_image(const std::set<Word>& traces) {
  std::set<Word> out;
  for (const Word& t : traces) out.insert(rho_of(t));
  return out;
}

AsyncProgram random_program(std::mt19937_64& rng) {
  AsyncProgram p;
  p.table = SymbolTable({"x", "y"}, {"a", "b", "c"});
  int nn = 1 + int(rng() % 3);
  for (int i = 0; i < nn; ++i) p.grammar.add_nonterminal("N" + std::to_string(i));
  p.grammar.start = 0;
  std::vector<Sym> ts = {open_sym(0),    close_sym(0),   open_sym(1),
                         close_sym(1),   handler_sym(0), handler_sym(1),
                         handler_sym(2)};
  int np = 1 + int(rng() % 6);
  for (int i = 0; i < np; ++i) {
    int lhs = int(rng() % nn);
    std::vector<GSym> rhs;
    int len = int(rng() % 3);
    for (int k = 0; k < len; ++k) {
      if (rng() % 4 == 0)
        rhs.push_back(N(int(rng() % nn)));
      else
        rhs.push_back(T(ts[rng() % ts.size()]));
    }
    p.grammar.add_production(lhs, std::move(rhs));
  }
  int ns = 1 + int(rng() % 3);
  for (int i = 0; i < ns; ++i) p.add_state("q" + std::to_string(i));
  p.q0 = 0;
  p.qf = int(rng() % ns);
  int nr = 1 + int(rng() % 4);
  for (int i = 0; i < nr; ++i)
    p.rules.push_back({int(rng() % ns), handler_sym(uint16_t(rng() % 3)),
                       int(rng() % nn), int(rng() % ns)});
  p.gamma0 = handler_sym(0);
  return p;
}

}  // namespace

TEST_CASE("step semantics") {
  AsyncProgram p = xx_program();
  Configuration c0 = initial_configuration(p);
  CHECK(c0.state == p.q0);
  CHECK(c0.pending.at(handler_sym(0)) == 1);

  Word u1 = {open_sym(0), handler_sym(1)};
  Word emitted;
  Configuration c1 = step(p, c0, 0, u1, &emitted, true);
  CHECK(emitted == w("x"));
  CHECK(c1.pending.count(handler_sym(0)) == 0);
  CHECK(c1.pending.at(handler_sym(1)) == 1);

  Configuration c2 = step(p, c1, 1, w("X"), &emitted, true);
  CHECK(emitted == w("X"));
  CHECK(c2.state == p.qf);
  CHECK(c2.pending.empty());

  CHECK_THROWS(step(p, c0, 1, w("X"), nullptr));
  CHECK_THROWS(step(p, c0, 0, w("xx"), nullptr, true));
}

TEST_CASE("step spawning multiplicities") {
  AsyncProgram p;
  p.table = SymbolTable({"x"}, {"a", "b"});
  int a = p.grammar.add_nonterminal("A");
  p.grammar.start = a;
  p.grammar.add_production(a, {T(handler_sym(1)), T(handler_sym(1))});
  p.q0 = p.add_state("q0");
  p.qf = p.add_state("qf");
  p.rules.push_back({p.q0, handler_sym(0), a, p.qf});
  p.gamma0 = handler_sym(0);
  Word u = {handler_sym(1), handler_sym(1)};
  Configuration c = step(p, initial_configuration(p), 0, u, nullptr, true);
  CHECK(c.pending.at(handler_sym(1)) == 2);
}

TEST_CASE("enumerate_traces") {
  SUBCASE("two-step program") {
    CHECK(trace_set(xx_program(), 4, 3) == std::set<Word>{w("xX")});
  }
  SUBCASE("unreachable final state") {
    AsyncProgram p = xx_program();
    p.qf = p.add_state("island");
    CHECK(trace_set(p, 5, 3).empty());
  }
  SUBCASE("epsilon-only program") {
    AsyncProgram p;
    p.table = SymbolTable({"x"}, {"a"});
    int a = p.grammar.add_nonterminal("A");
    p.grammar.start = a;
    p.grammar.add_production(a, {});
    p.q0 = p.add_state("q0");
    p.qf = p.add_state("qf");
    p.rules.push_back({p.q0, handler_sym(0), a, p.qf});
    p.gamma0 = handler_sym(0);
    CHECK(trace_set(p, 3, 2) == std::set<Word>{w("")});
  }
}

TEST_CASE("aux transducers are offset preserving") {
  SymbolTable t({"x", "y"}, {"a"});
  CHECK(offset_preserving(make_aux_transducer(t, AuxKind::O), 5));
  CHECK(offset_preserving(make_aux_transducer(t, AuxKind::D), 5));
  CHECK(offset_preserving(make_aux_transducer(t, AuxKind::M), 5));
}

TEST_CASE("aux transducer pair semantics") {
  SymbolTable t({"x", "y"}, {"a"});
  SUBCASE("dip marking") {
    Transducer td = make_aux_transducer(t, AuxKind::D);
    auto pairs = transducer_pairs(td, 3, 10000);
    CHECK(!pairs.empty());
    for (auto& [in, out] : pairs) {
      REQUIRE(out.size() == in.size() + 2);
      CHECK(out[0] == hash_sym());
      size_t bar_at = 0;
      bool seen_bar = false;
      for (size_t i = 1; i < out.size(); ++i)
        if (out[i] == barhash_sym()) {
          seen_bar = true;
          bar_at = i;
        }
      REQUIRE(seen_bar);
      REQUIRE(bar_at + 1 < out.size());
      CHECK(out[bar_at + 1] == canon_close());
      CHECK(in[bar_at - 1].kind == Sym::Close);
    }
  }
  SUBCASE("mismatch marking") {
    Transducer tm = make_aux_transducer(t, AuxKind::M);
    auto pairs = transducer_pairs(tm, 4, 10000);
    CHECK(!pairs.empty());
    for (auto& [in, out] : pairs) {
      REQUIRE(in.size() == out.size());
      int hp = -1, bp = -1;
      for (size_t i = 0; i < out.size(); ++i) {
        if (out[i] == hash_sym()) hp = int(i);
        if (out[i] == barhash_sym()) bp = int(i);
      }
      REQUIRE(hp >= 0);
      REQUIRE(bp > hp);
      CHECK(in[hp].kind == Sym::Open);
      CHECK(in[bp].kind == Sym::Close);
      CHECK(in[hp].base != in[bp].base);
    }
  }
}

TEST_CASE("apply_transduction identity keeps the bounded language") {
  Transducer id;
  int q = id.add_state();
  id.initial = q;
  id.final_state = q;
  for (uint16_t b = 0; b < 2; ++b) {
    id.add_edge(q, open_sym(b), open_sym(b), q);
    id.add_edge(q, close_sym(b), close_sym(b), q);
  }
  AsyncProgram p = xx_program();
  AsyncProgram q2 = apply_transduction(p, id);
  CHECK(trace_set(q2, 4, 5) == trace_set(p, 4, 3));
}

TEST_CASE("build_aux reference cases") {
  SUBCASE("rho image") {
    AsyncProgram p;
    p.table = SymbolTable({"x", "y"}, {"a"});
    int a = p.grammar.add_nonterminal("A");
    p.grammar.start = a;
    p.grammar.add_production(a, {T(open_sym(0)), T(open_sym(1)),
                                 T(close_sym(1)), T(close_sym(0))});
    p.q0 = p.add_state("q0");
    p.qf = p.add_state("qf");
    p.rules.push_back({p.q0, handler_sym(0), a, p.qf});
    p.gamma0 = handler_sym(0);
    AsyncProgram po = build_aux(p, AuxKind::O);
    CHECK(trace_set(po, 3, 8) == std::set<Word>{w("xxXX")});
  }
  SUBCASE("dip image of Xx") {
    AsyncProgram p;
    p.table = SymbolTable({"x"}, {"a"});
    int a = p.grammar.add_nonterminal("A");
    p.grammar.start = a;
    p.grammar.add_production(a, {T(close_sym(0)), T(open_sym(0))});
    p.q0 = p.add_state("q0");
    p.qf = p.add_state("qf");
    p.rules.push_back({p.q0, handler_sym(0), a, p.qf});
    p.gamma0 = handler_sym(0);
    AsyncProgram pd = build_aux(p, AuxKind::D);
    CHECK(trace_set(pd, 3, 8) == std::set<Word>{w("#!Xx")});
  }
  SUBCASE("mismatch image needs two letters") {
    AsyncProgram p;
    p.table = SymbolTable({"x", "y"}, {"a"});
    int a = p.grammar.add_nonterminal("A");
    p.grammar.start = a;
    p.grammar.add_production(a, {T(open_sym(0)), T(close_sym(1))});
    p.q0 = p.add_state("q0");
    p.qf = p.add_state("qf");
    p.rules.push_back({p.q0, handler_sym(0), a, p.qf});
    p.gamma0 = handler_sym(0);
    AsyncProgram pm = build_aux(p, AuxKind::M);
    CHECK(trace_set(pm, 3, 8) == std::set<Word>{w("#!")});

    AsyncProgram p2;
    p2.table = SymbolTable({"x"}, {"a"});
    int a2 = p2.grammar.add_nonterminal("A");
    p2.grammar.start = a2;
    p2.grammar.add_production(a2, {T(open_sym(0)), T(close_sym(0))});
    p2.q0 = p2.add_state("q0");
    p2.qf = p2.add_state("qf");
    p2.rules.push_back({p2.q0, handler_sym(0), a2, p2.qf});
    p2.gamma0 = handler_sym(0);
    AsyncProgram pm2 = build_aux(p2, AuxKind::M);
    CHECK(trace_set(pm2, 3, 8).empty());
  }
}

TEST_CASE("aux images agree with set-builder semantics on random programs") {
  std::mt19937_64 rng(555);
  int done = 0;
  for (int trial = 0; trial < 60 && done < 25; ++trial) {
    AsyncProgram p = random_program(rng);
    if (language_empty(p.grammar)) continue;
    std::set<Word> small = trace_set(p, 4, 3);
    std::set<Word> big = trace_set(p, 4, 5);

    AsyncProgram po = build_aux(p, AuxKind::O);
    CHECK(trace_set(po, 4, 3) == rho_image(small));

    AsyncProgram pd = build_aux(p, AuxKind::D);
    std::set<Word> pd_traces = trace_set(pd, 4, 5);
    for (const Word& img : d_image(small)) CHECK(pd_traces.count(img) == 1);
    std::set<Word> pd_tight = trace_set(pd, 4, 5);
    std::set<Word> d_big = d_image(big);
    for (const Word& tr : pd_tight) CHECK(d_big.count(tr) == 1);

    AsyncProgram pm = build_aux(p, AuxKind::M);
    std::set<Word> pm_traces = trace_set(pm, 4, 5);
    for (const Word& img : m_image(small)) CHECK(pm_traces.count(img) == 1);
    std::set<Word> pm_tight = trace_set(pm, 4, 3);
    std::set<Word> m_big = m_image(big);
    for (const Word& tr : pm_tight) CHECK(m_big.count(tr) == 1);
    ++done;
  }
  CHECK(done >= 20);
}

TEST_CASE("transduction preserves tame pumping on tame inputs") {
  std::mt19937_64 rng(808);
  int done = 0, tame_seen = 0;
  for (int trial = 0; trial < 40 && done < 15; ++trial) {
    AsyncProgram p = random_program(rng);
    Grammar c = trim(to_cnf(p.grammar));
    if (c.productions.empty() || !c.in_cnf()) continue;
    TameResult before = check_tame_pumping(c);
    if (!before.caps.events.empty()) continue;
    if (!before.tame) { ++done; continue; }
    ++tame_seen;
    for (AuxKind k : {AuxKind::O, AuxKind::D, AuxKind::M}) {
      AsyncProgram aux = build_aux(p, k);
      Grammar ac = trim(to_cnf(aux.grammar));
      if (ac.productions.empty()) continue;
      TameResult after = check_tame_pumping(ac);
      if (after.caps.events.empty()) CHECK(after.tame);
    }
    ++done;
  }
  CHECK(tame_seen >= 5);
}
