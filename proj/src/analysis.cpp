#include "dyckref/analysis.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace dyckref {

// ---- Parikh ----------------------------------------------------------------

ParikhSystem parikh_system(const Grammar& g) {
  g.validate();
  ParikhSystem ps;
  ps.grammar = g;
  for (size_t p = 0; p < g.productions.size(); ++p) {
    for (const auto& s : g.productions[p].rhs)
      if (s.tag == GSym::Star)
        throw std::invalid_argument("parikh_system: star production");
    ps.y_var.push_back(ps.flow.add_var("y" + std::to_string(p)));
  }
  // Flow: expansions(A) = [A = start] + occurrences(A).
  for (size_t a = 0; a < g.num_nonterminals(); ++a) {
    LinRow row;
    row.rel = LinRow::Eq;
    row.rhs = int(a) == g.start ? 1 : 0;
    for (size_t p = 0; p < g.productions.size(); ++p) {
      int64_t c = 0;
      if (g.productions[p].lhs == int(a)) c += 1;
      for (const auto& s : g.productions[p].rhs)
        if (s.tag == GSym::Nonterminal && s.nt == int(a)) c -= 1;
      if (c) row.coeffs[ps.y_var[p]] = c;
    }
    if (row.coeffs.empty() && row.rhs != 0) ps.flow.trivially_infeasible = true;
    if (!row.coeffs.empty()) ps.flow.add_row(row);
  }
  return ps;
}

std::map<int, int64_t> ParikhSystem::terminal_expr(Sym t) const {
  std::map<int, int64_t> expr;
  for (size_t p = 0; p < grammar.productions.size(); ++p) {
    int64_t c = 0;
    for (const auto& s : grammar.productions[p].rhs)
      if (s.tag == GSym::Terminal && s.t == t) ++c;
    if (c) expr[y_var[p]] = c;
  }
  return expr;
}

namespace {

// Used nonterminals whose support is not connected to the start symbol.
std::vector<int> disconnected_used(const Grammar& g,
                                   const std::vector<int64_t>& y) {
  std::set<int> used_nts;
  for (size_t p = 0; p < g.productions.size(); ++p)
    if (y[p] > 0) used_nts.insert(g.productions[p].lhs);
  std::set<int> reached = {g.start};
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t p = 0; p < g.productions.size(); ++p) {
      if (y[p] == 0 || !reached.count(g.productions[p].lhs)) continue;
      for (const auto& s : g.productions[p].rhs)
        if (s.tag == GSym::Nonterminal && reached.insert(s.nt).second)
          changed = true;
    }
  }
  std::vector<int> out;
  for (int a : used_nts)
    if (!reached.count(a)) out.push_back(a);
  return out;
}

}  // namespace

ParikhQuery parikh_feasible(const ParikhSystem& ps,
                            const std::vector<LinRow>& extra,
                            const Caps& caps) {
  ParikhQuery out;
  std::vector<std::vector<LinRow>> stack = {extra};
  int64_t refinements = 0;
  while (!stack.empty()) {
    std::vector<LinRow> rows = std::move(stack.back());
    stack.pop_back();
    LinearSystem sys = ps.flow;
    for (const auto& r : rows) sys.add_row(r);
    IlpResult r = ilp_feasible(sys, caps);
    if (r.status == IlpResult::Indeterminate) {
      out.status = ParikhQuery::Indeterminate;
      return out;
    }
    if (r.status == IlpResult::Unsat) continue;
    std::vector<int64_t> y(ps.y_var.size());
    for (size_t p = 0; p < y.size(); ++p) y[p] = r.witness[ps.y_var[p]];
    std::vector<int> d = disconnected_used(ps.grammar, y);
    if (d.empty()) {
      out.status = ParikhQuery::Sat;
      out.y = std::move(y);
      return out;
    }
    if (++refinements > caps.ilp_node_budget) {
      out.status = ParikhQuery::Indeterminate;
      return out;
    }
    std::set<int> dset(d.begin(), d.end());
    // Either no production with lhs in D is used ...
    LinRow kill;
    kill.rel = LinRow::Le;
    kill.rhs = 0;
    for (size_t p = 0; p < ps.grammar.productions.size(); ++p)
      if (dset.count(ps.grammar.productions[p].lhs))
        kill.coeffs[ps.y_var[p]] = 1;
    // ... or D is entered from outside.
    LinRow enter;
    enter.rel = LinRow::Ge;
    enter.rhs = 1;
    for (size_t p = 0; p < ps.grammar.productions.size(); ++p) {
      if (dset.count(ps.grammar.productions[p].lhs)) continue;
      bool touches = false;
      for (const auto& s : ps.grammar.productions[p].rhs)
        if (s.tag == GSym::Nonterminal && dset.count(s.nt)) touches = true;
      if (touches) enter.coeffs[ps.y_var[p]] = 1;
    }
    auto with_kill = rows;
    with_kill.push_back(std::move(kill));
    if (!enter.coeffs.empty()) {
      auto with_enter = std::move(rows);
      with_enter.push_back(std::move(enter));
      stack.push_back(std::move(with_enter));
    }
    stack.push_back(std::move(with_kill));
  }
  out.status = ParikhQuery::Unsat;
  return out;
}

// ---- tame pumping -----------------------------------------------------------

namespace {

// Bracket offset expression over one side's tagged letters.
std::map<int, int64_t> side_offset_expr(const ParikhSystem& ps,
                                        const PumpGrammar& pg, PumpSide side) {
  std::map<int, int64_t> expr;
  for (const auto& [tagged, orig] : pg.untag) {
    if (orig.first != side || !orig.second.is_bracket()) continue;
    int64_t sign = orig.second.kind == Sym::Open ? 1 : -1;
    for (auto [v, c] : ps.terminal_expr(tagged)) expr[v] += sign * c;
  }
  for (auto it = expr.begin(); it != expr.end();)
    it = it->second == 0 ? expr.erase(it) : std::next(it);
  return expr;
}

LinRow nonempty_row(const ParikhSystem& ps, const PumpGrammar& pg) {
  LinRow row;
  row.rel = LinRow::Ge;
  row.rhs = 1;
  for (size_t p = 0; p < pg.g.productions.size(); ++p) {
    int64_t terminals = 0;
    for (const auto& s : pg.g.productions[p].rhs)
      if (s.tag == GSym::Terminal) ++terminals;
    if (terminals) row.coeffs[ps.y_var[p]] = terminals;
  }
  return row;
}

// Leftmost replay of a production-count vector into a concrete pump.
std::optional<Pump> reconstruct_pump(const Grammar& g, const PumpGrammar& pg,
                                     int a0, const std::vector<int64_t>& y) {
  std::vector<int64_t> counts = y;
  std::vector<GSym> form = {GSym::nonterminal(pg.g.start)};
  std::vector<int> script;
  Word left, right;
  bool pivoted = false;
  int64_t guard = 0;
  std::function<bool(size_t)> rec = [&](size_t pos) -> bool {
    if (++guard > 2000000) return false;
    if (pos == form.size()) {
      for (int64_t c : counts)
        if (c != 0) return false;
      return pivoted;
    }
    const GSym s = form[pos];
    if (s.tag == GSym::Terminal) {
      auto [side, orig] = pg.untag.at(s.t);
      (side == PumpSide::Left ? left : right).push_back(orig);
      if (rec(pos + 1)) return true;
      (side == PumpSide::Left ? left : right).pop_back();
      return false;
    }
    for (size_t p = 0; p < pg.g.productions.size(); ++p) {
      if (pg.g.productions[p].lhs != s.nt || counts[p] == 0) continue;
      counts[p]--;
      bool was_pivot = int(p) == pg.epsilon_production;
      bool saved_pivot = pivoted;
      if (was_pivot) {
        if (pivoted) {
          counts[p]++;
          continue;
        }
        pivoted = true;
        script.push_back(-1);
      } else {
        script.push_back(pg.origin[p]);
      }
      std::vector<GSym> saved = form;
      form.erase(form.begin() + pos);
      form.insert(form.begin() + pos, pg.g.productions[p].rhs.begin(),
                  pg.g.productions[p].rhs.end());
      if (rec(pos)) return true;
      form = std::move(saved);
      script.pop_back();
      pivoted = saved_pivot;
      counts[p]++;
    }
    return false;
  };
  if (!rec(0)) return std::nullopt;
  Pump pump;
  pump.nt = a0;
  pump.left = std::move(left);
  pump.right = std::move(right);
  pump.witness = std::move(script);
  if (!validate_pump(g, pump)) return std::nullopt;
  return pump;
}

}  // namespace

TameResult check_tame_pumping(const Grammar& g, const Caps& caps) {
  if (!g.in_cnf())
    throw std::invalid_argument("check_tame_pumping: grammar not in CNF");
  for (const auto& p : g.productions)
    for (const auto& s : p.rhs)
      if (s.tag == GSym::Star)
        throw std::invalid_argument("check_tame_pumping: star production");
  TameResult res;
  for (size_t a0 = 0; a0 < g.num_nonterminals(); ++a0) {
    PumpGrammar pg = pump_grammar(g, int(a0));
    ParikhSystem ps = parikh_system(pg.g);
    auto off_l = side_offset_expr(ps, pg, PumpSide::Left);
    auto off_r = side_offset_expr(ps, pg, PumpSide::Right);
    std::map<int, int64_t> sum = off_l;
    for (auto [v, c] : off_r) {
      sum[v] += c;
      if (sum[v] == 0) sum.erase(v);
    }
    // offset(u) < 0, or offset(u) + offset(v) != 0 (split disjunction).
    std::vector<LinRow> violations = {{off_l, LinRow::Le, -1},
                                      {sum, LinRow::Le, -1},
                                      {sum, LinRow::Ge, 1}};
    for (const auto& row : violations) {
      if (row.coeffs.empty()) continue;  // constant zero never violates
      ParikhQuery q = parikh_feasible(ps, {row}, caps);
      if (q.status == ParikhQuery::Indeterminate) {
        res.caps.hit("tame_pumping", "ilp_node_budget", caps.ilp_node_budget);
        continue;
      }
      if (q.status == ParikhQuery::Sat) {
        res.tame = false;
        res.witness = reconstruct_pump(g, pg, int(a0), q.y);
        return res;
      }
    }
  }
  res.tame = true;
  return res;
}

BoolWithCaps pump_kind_exists(const Grammar& g, int a, PumpKind kind,
                              const Caps& caps) {
  BoolWithCaps res;
  PumpGrammar pg = pump_grammar(g, a);
  ParikhSystem ps = parikh_system(pg.g);
  auto off_l = side_offset_expr(ps, pg, PumpSide::Left);
  std::vector<LinRow> rows = {nonempty_row(ps, pg)};
  if (kind == PumpKind::Zero) {
    if (!off_l.empty()) rows.push_back({off_l, LinRow::Eq, 0});
  } else {
    if (off_l.empty()) return res;  // no bracket letters: never increasing
    rows.push_back({off_l, LinRow::Ge, 1});
  }
  ParikhQuery q = parikh_feasible(ps, rows, caps);
  if (q.status == ParikhQuery::Indeterminate)
    res.caps.hit("pump_kind_exists", "ilp_node_budget", caps.ilp_node_budget);
  res.value = q.status == ParikhQuery::Sat;
  return res;
}

// ---- pump effects -----------------------------------------------------------

namespace {

bool dominated(const PumpEffects::Tuple& a, const PumpEffects::Tuple& b) {
  // b is at least as useful as a.
  return a.off_l == b.off_l && a.off_r == b.off_r && a.dip_l >= b.dip_l &&
         a.dip_r >= b.dip_r && (a.letters_l & ~b.letters_l) == 0 &&
         (a.letters_r & ~b.letters_r) == 0 && (!a.nonempty || b.nonempty);
}

}  // namespace

PumpEffects::PumpEffects(const Grammar& g_cnf, int a0, const Caps& caps) {
  PumpGrammar pg = pump_grammar(g_cnf, a0);
  const Grammar& pgg = pg.g;
  size_t n = pgg.num_nonterminals();
  std::vector<std::vector<Tuple>> val(n);

  auto clampv = [&](const Tuple& t) {
    return t.dip_l > caps.dip_cap || t.dip_r > caps.dip_cap ||
           std::abs(t.off_l) > caps.offset_cap ||
           std::abs(t.off_r) > caps.offset_cap;
  };
  auto add_to = [&](std::vector<Tuple>& set, const Tuple& t) {
    for (const auto& have : set)
      if (dominated(t, have)) return false;
    std::erase_if(set, [&](const Tuple& have) { return dominated(have, t); });
    set.push_back(t);
    if (set.size() > 4096) {
      clamped_ = true;
      set.resize(4096);
    }
    return true;
  };
  auto compose_t = [](const Tuple& a, const Tuple& b) {
    Tuple t;
    t.dip_l = std::max(a.dip_l, b.dip_l - a.off_l);
    t.off_l = a.off_l + b.off_l;
    t.dip_r = std::max(a.dip_r, b.dip_r - a.off_r);
    t.off_r = a.off_r + b.off_r;
    t.letters_l = a.letters_l | b.letters_l;
    t.letters_r = a.letters_r | b.letters_r;
    t.nonempty = a.nonempty || b.nonempty;
    return t;
  };
  auto terminal_tuple = [&](Sym tagged) {
    auto [side, orig] = pg.untag.at(tagged);
    Tuple t;
    t.nonempty = true;
    int64_t d = orig.kind == Sym::Close ? 1 : 0;
    int64_t o = orig.offset();
    uint32_t fl = orig.is_handler() ? (uint32_t(1) << (orig.base & 31)) : 0;
    if (side == PumpSide::Left) {
      t.dip_l = d;
      t.off_l = o;
      t.letters_l = fl;
    } else {
      t.dip_r = d;
      t.off_r = o;
      t.letters_r = fl;
    }
    return t;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t p = 0; p < pgg.productions.size(); ++p) {
      const auto& prod = pgg.productions[p];
      std::vector<Tuple> partial = {Tuple{}};
      for (const auto& s : prod.rhs) {
        std::vector<Tuple> options;
        if (s.tag == GSym::Terminal) {
          options.push_back(terminal_tuple(s.t));
        } else if (s.tag == GSym::Star) {
          options.push_back(Tuple{});
          Tuple full;
          full.nonempty = true;
          bool brackets = false;
          for (Sym x : s.star) {
            auto [side, orig] = pg.untag.at(x);
            if (orig.is_bracket()) brackets = true;
            if (!orig.is_handler()) continue;
            uint32_t bit = uint32_t(1) << (orig.base & 31);
            (side == PumpSide::Left ? full.letters_l : full.letters_r) |= bit;
          }
          if (brackets) clamped_ = true;
          if (full.letters_l || full.letters_r) options.push_back(full);
        } else {
          options = val[s.nt];
        }
        std::vector<Tuple> next;
        for (const auto& a : partial)
          for (const auto& b : options) {
            Tuple t = compose_t(a, b);
            if (clampv(t)) {
              clamped_ = true;
              continue;
            }
            bool dup = false;
            for (const auto& have : next)
              if (dominated(t, have)) {
                dup = true;
                break;
              }
            if (!dup) {
              std::erase_if(
                  next, [&](const Tuple& have) { return dominated(have, t); });
              next.push_back(t);
            }
          }
        partial = std::move(next);
        if (partial.empty()) break;
      }
      for (const auto& t : partial)
        if (add_to(val[prod.lhs], t)) changed = true;
    }
  }
  root_ = val[pgg.start];
  std::sort(root_.begin(), root_.end());
}

bool PumpEffects::exists(const PsiRelationQuery& q, bool* indeterminate) const {
  for (const auto& t : root_) {
    if (!t.nonempty) continue;
    if (t.dip_l > q.d_left || t.dip_r > q.d_right) continue;
    if (q.require_increasing && t.off_l <= 0) continue;
    if (q.letter) {
      uint32_t bit = uint32_t(1) << (q.letter->base & 31);
      uint32_t have =
          q.letter_side == PumpSide::Left ? t.letters_l : t.letters_r;
      if (!(have & bit)) continue;
    }
    return true;
  }
  if (indeterminate && clamped_) *indeterminate = true;
  return false;
}

int64_t PumpEffects::max_tracked_dip() const {
  int64_t m = 0;
  for (const auto& t : root_) m = std::max({m, t.dip_l, t.dip_r});
  return m;
}

uint32_t PumpEffects::letters_within(PumpSide side, int64_t dl, int64_t dr,
                                     bool increasing_only) const {
  uint32_t out = 0;
  for (const auto& t : root_) {
    if (t.dip_l > dl || t.dip_r > dr) continue;
    if (increasing_only && t.off_l <= 0) continue;
    out |= side == PumpSide::Left ? t.letters_l : t.letters_r;
  }
  return out;
}

bool PumpEffects::has_pump_within(int64_t dl, int64_t dr) const {
  for (const auto& t : root_)
    if (t.nonempty && t.dip_l <= dl && t.dip_r <= dr) return true;
  return false;
}

bool PumpEffects::has_increasing_within(int64_t dl, int64_t dr) const {
  for (const auto& t : root_)
    if (t.nonempty && t.off_l > 0 && t.dip_l <= dl && t.dip_r <= dr)
      return true;
  return false;
}

BoolWithCaps pump_exists_with(const Grammar& g, const PsiRelationQuery& q,
                              const Caps& caps) {
  BoolWithCaps res;
  PumpEffects pe(g, q.nt, caps);
  bool indet = false;
  res.value = pe.exists(q, &indet);
  if (!res.value && indet)
    res.caps.hit("pump_exists_with", "dip_offset_clamp",
                 std::max(caps.dip_cap, caps.offset_cap));
  return res;
}

// ---- reachable word effects ---------------------------------------------------

EffectSets::EffectSets(const Grammar& g, const Caps& caps) {
  size_t n = g.num_nonterminals();
  sets_.assign(n, {});
  auto clampv = [&](const EffectPair& e) {
    return e.dip > caps.dip_cap || std::abs(e.offset) > caps.offset_cap;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : g.productions) {
      std::set<EffectPair> partial = {EffectPair{0, 0}};
      for (const auto& s : p.rhs) {
        std::set<EffectPair> options;
        if (s.tag == GSym::Terminal) {
          options.insert(
              {s.t.kind == Sym::Close ? int64_t{1} : int64_t{0}, s.t.offset()});
        } else if (s.tag == GSym::Star) {
          // Effects over the star alphabet: capped iteration closure.
          options.insert({0, 0});
          std::set<EffectPair> letters;
          for (Sym x : s.star)
            letters.insert(
                {x.kind == Sym::Close ? int64_t{1} : int64_t{0}, x.offset()});
          bool grown = true;
          while (grown && options.size() <= 2048) {
            grown = false;
            for (const auto& a : std::set<EffectPair>(options))
              for (const auto& l : letters) {
                EffectPair e = compose(a, l);
                if (clampv(e)) {
                  clamped_ = true;
                  continue;
                }
                if (options.insert(e).second) grown = true;
              }
          }
          if (options.size() > 2048) clamped_ = true;
        } else {
          options = sets_[s.nt];
        }
        std::set<EffectPair> next;
        for (const auto& a : partial)
          for (const auto& b : options) {
            EffectPair e = compose(a, b);
            if (clampv(e)) {
              clamped_ = true;
              continue;
            }
            next.insert(e);
          }
        partial = std::move(next);
        if (partial.empty()) break;
      }
      for (const auto& e : partial) {
        if (sets_[p.lhs].size() > 4096) {
          clamped_ = true;
          break;
        }
        if (sets_[p.lhs].insert(e).second) changed = true;
      }
    }
  }
}

int64_t EffectSets::max_dip() const {
  int64_t m = 0;
  for (const auto& s : sets_)
    for (const auto& e : s) m = std::max(m, e.dip);
  return m;
}

}  // namespace dyckref
