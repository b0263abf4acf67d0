#include "dyckref/grammar.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dyckref {

GSym GSym::star_of(std::vector<Sym> xs) {
  GSym g;
  g.tag = Star;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  g.star = std::move(xs);
  return g;
}

int Grammar::add_nonterminal(const std::string& name) {
  nt_names.push_back(name);
  return int(nt_names.size()) - 1;
}

void Grammar::add_production(int lhs, std::vector<GSym> rhs) {
  productions.push_back({lhs, std::move(rhs)});
}

int64_t Grammar::size() const {
  int64_t n = 0;
  for (const auto& p : productions) n += int64_t(p.rhs.size()) + 1;
  return n;
}

void Grammar::validate() const {
  if (start < 0 || start >= int(nt_names.size()))
    throw std::invalid_argument("grammar: undeclared start symbol");
  for (const auto& p : productions) {
    if (p.lhs < 0 || p.lhs >= int(nt_names.size()))
      throw std::invalid_argument("grammar: undeclared production lhs");
    for (const auto& s : p.rhs)
      if (s.tag == GSym::Nonterminal &&
          (s.nt < 0 || s.nt >= int(nt_names.size())))
        throw std::invalid_argument("grammar: undeclared rhs nonterminal");
  }
}

void Grammar::normalize() {
  std::sort(productions.begin(), productions.end());
  productions.erase(std::unique(productions.begin(), productions.end()),
                    productions.end());
}

bool Grammar::in_cnf() const {
  std::vector<bool> on_rhs(nt_names.size(), false);
  for (const auto& p : productions)
    for (const auto& s : p.rhs)
      if (s.tag == GSym::Nonterminal) on_rhs[s.nt] = true;
  for (const auto& p : productions) {
    if (p.rhs.empty()) {
      if (p.lhs != start || on_rhs[start]) return false;
    } else if (p.rhs.size() == 1) {
      if (p.rhs[0].tag == GSym::Nonterminal) return false;
    } else if (p.rhs.size() == 2) {
      if (p.rhs[0].tag != GSym::Nonterminal ||
          p.rhs[1].tag != GSym::Nonterminal)
        return false;
    } else {
      return false;
    }
  }
  return true;
}

// ---- CNF -------------------------------------------------------------

Grammar to_cnf(const Grammar& g_in) {
  Grammar g = g_in;
  g.validate();

  // Fresh start if the old one occurs on a right-hand side.
  bool start_on_rhs = false;
  for (const auto& p : g.productions)
    for (const auto& s : p.rhs)
      if (s.tag == GSym::Nonterminal && s.nt == g.start) start_on_rhs = true;
  if (start_on_rhs) {
    int s0 = g.add_nonterminal(g.nt_names[g.start] + "'");
    g.add_production(s0, {GSym::nonterminal(g.start)});
    g.start = s0;
  }

  // TERM: wrap terminals and stars occurring in long bodies.
  std::map<GSym, int> leaf_nt;
  auto wrap = [&](const GSym& s) {
    auto it = leaf_nt.find(s);
    if (it != leaf_nt.end()) return it->second;
    int nt = g.add_nonterminal("T" + std::to_string(leaf_nt.size()));
    leaf_nt.emplace(s, nt);
    return nt;
  };
  {
    std::vector<Production> out;
    for (auto& p : g.productions) {
      if (p.rhs.size() >= 2) {
        for (auto& s : p.rhs)
          if (s.tag != GSym::Nonterminal) s = GSym::nonterminal(wrap(s));
      }
      out.push_back(std::move(p));
    }
    for (const auto& [leaf, nt] : leaf_nt) out.push_back({nt, {leaf}});
    g.productions = std::move(out);
  }

  // BIN: binarize long bodies.
  {
    std::vector<Production> out;
    int chain = 0;
    for (auto& p : g.productions) {
      while (p.rhs.size() > 2) {
        int nt = g.add_nonterminal("B" + std::to_string(chain++));
        GSym last = p.rhs.back();
        p.rhs.pop_back();
        GSym prev = p.rhs.back();
        p.rhs.pop_back();
        Production q{nt, {prev, last}};
        out.push_back(q);
        p.rhs.push_back(GSym::nonterminal(nt));
      }
      out.push_back(std::move(p));
    }
    g.productions = std::move(out);
  }

  // DEL: eliminate epsilon productions (kept only at the start).
  {
    std::vector<bool> nullable(g.num_nonterminals(), false);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& p : g.productions) {
        if (nullable[p.lhs]) continue;
        bool all = true;
        for (const auto& s : p.rhs) {
          if (s.tag == GSym::Terminal) { all = false; break; }
          if (s.tag == GSym::Nonterminal && !nullable[s.nt]) { all = false; break; }
          // stars derive epsilon
        }
        if (all) { nullable[p.lhs] = true; changed = true; }
      }
    }
    std::set<Production> out;
    for (const auto& p : g.productions) {
      // Generate all variants omitting nullable nonterminal occurrences.
      size_t k = p.rhs.size();
      for (uint32_t mask = 0; mask < (1u << k); ++mask) {
        std::vector<GSym> rhs;
        bool ok = true;
        for (size_t i = 0; i < k; ++i) {
          if (mask & (1u << i)) {
            if (p.rhs[i].tag != GSym::Nonterminal || !nullable[p.rhs[i].nt]) {
              ok = false;
              break;
            }
          } else {
            rhs.push_back(p.rhs[i]);
          }
        }
        if (!ok) continue;
        if (rhs.empty() && p.lhs != g.start) continue;
        out.insert({p.lhs, std::move(rhs)});
      }
    }
    g.productions.assign(out.begin(), out.end());
    if (nullable[g.start]) g.productions.push_back({g.start, {}});
  }

  // UNIT: eliminate unit chains A -> B.
  {
    size_t n = g.num_nonterminals();
    std::vector<std::set<int>> unit(n);
    for (size_t a = 0; a < n; ++a) unit[a].insert(int(a));
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& p : g.productions)
        if (p.rhs.size() == 1 && p.rhs[0].tag == GSym::Nonterminal)
          for (int b : std::set<int>(unit[p.rhs[0].nt]))
            if (unit[p.lhs].insert(b).second) changed = true;
    }
    std::set<Production> out;
    for (size_t a = 0; a < n; ++a)
      for (int b : unit[a])
        for (const auto& p : g.productions) {
          if (p.lhs != b) continue;
          if (p.rhs.size() == 1 && p.rhs[0].tag == GSym::Nonterminal) continue;
          if (p.rhs.empty() && int(a) != g.start) continue;
          out.insert({int(a), p.rhs});
        }
    g.productions.assign(out.begin(), out.end());
  }

  g.normalize();
  return g;
}

// ---- trim ------------------------------------------------------------

Grammar trim(const Grammar& g, std::vector<int>* new_of_old) {
  g.validate();
  size_t n = g.num_nonterminals();
  std::vector<bool> productive(n, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : g.productions) {
      if (productive[p.lhs]) continue;
      bool all = true;
      for (const auto& s : p.rhs)
        if (s.tag == GSym::Nonterminal && !productive[s.nt]) { all = false; break; }
      if (all) { productive[p.lhs] = true; changed = true; }
    }
  }
  std::vector<bool> reachable(n, false);
  std::deque<int> queue;
  if (productive[g.start]) {
    reachable[g.start] = true;
    queue.push_back(g.start);
  }
  while (!queue.empty()) {
    int a = queue.front();
    queue.pop_front();
    for (const auto& p : g.productions) {
      if (p.lhs != a) continue;
      bool all = true;
      for (const auto& s : p.rhs)
        if (s.tag == GSym::Nonterminal && !productive[s.nt]) { all = false; break; }
      if (!all) continue;
      for (const auto& s : p.rhs)
        if (s.tag == GSym::Nonterminal && !reachable[s.nt]) {
          reachable[s.nt] = true;
          queue.push_back(s.nt);
        }
    }
  }

  Grammar out;
  std::vector<int> remap(n, -1);
  for (size_t a = 0; a < n; ++a)
    if (reachable[a] && productive[a]) remap[a] = out.add_nonterminal(g.nt_names[a]);
  if (remap[g.start] >= 0) {
    out.start = remap[g.start];
  } else {
    // Empty language: keep the start symbol, no productions.
    out.start = out.add_nonterminal(g.nt_names[g.start]);
  }
  for (const auto& p : g.productions) {
    if (remap[p.lhs] < 0) continue;
    std::vector<GSym> rhs;
    bool ok = true;
    for (const auto& s : p.rhs) {
      if (s.tag == GSym::Nonterminal) {
        if (remap[s.nt] < 0) { ok = false; break; }
        rhs.push_back(GSym::nonterminal(remap[s.nt]));
      } else {
        rhs.push_back(s);
      }
    }
    if (ok) out.add_production(remap[p.lhs], std::move(rhs));
  }
  out.normalize();
  if (new_of_old) *new_of_old = remap;
  return out;
}

bool language_empty(const Grammar& g) {
  Grammar t = trim(g);
  return t.productions.empty();
}

// ---- word enumeration --------------------------------------------------

namespace {

void star_words(const std::vector<Sym>& alphabet, int max_len, int64_t cap,
                std::set<Word>& out) {
  Word cur;
  std::function<void(int)> rec = [&](int remaining) {
    if (int64_t(out.size()) > cap) throw CapExceeded("enumerate_words", cap);
    out.insert(cur);
    if (remaining == 0) return;
    for (Sym s : alphabet) {
      cur.push_back(s);
      rec(remaining - 1);
      cur.pop_back();
    }
  };
  rec(max_len);
}

}  // namespace

std::vector<Word> enumerate_words_from(const Grammar& g, int start, int max_len,
                                       int64_t cap) {
  g.validate();
  size_t n = g.num_nonterminals();
  std::vector<std::set<Word>> words(n);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : g.productions) {
      // All combinations of the rhs with total length <= max_len.
      std::set<Word> results;
      Word cur;
      std::function<void(size_t)> rec = [&](size_t idx) {
        if (int(cur.size()) > max_len) return;
        if (idx == p.rhs.size()) {
          results.insert(cur);
          return;
        }
        const GSym& s = p.rhs[idx];
        if (s.tag == GSym::Terminal) {
          cur.push_back(s.t);
          rec(idx + 1);
          cur.pop_back();
        } else if (s.tag == GSym::Star) {
          std::set<Word> sw;
          star_words(s.star, max_len - int(cur.size()), cap, sw);
          for (const Word& w : sw) {
            size_t before = cur.size();
            cur.insert(cur.end(), w.begin(), w.end());
            rec(idx + 1);
            cur.resize(before);
          }
        } else {
          for (const Word& w : words[s.nt]) {
            if (int(cur.size() + w.size()) > max_len) continue;
            size_t before = cur.size();
            cur.insert(cur.end(), w.begin(), w.end());
            rec(idx + 1);
            cur.resize(before);
          }
        }
      };
      rec(0);
      for (const Word& w : results)
        if (words[p.lhs].insert(w).second) {
          changed = true;
          if (int64_t(words[p.lhs].size()) > cap)
            throw CapExceeded("enumerate_words", cap);
        }
    }
  }
  if (start < 0 || start >= int(n)) return {};
  return {words[start].begin(), words[start].end()};
}

std::vector<Word> enumerate_words(const Grammar& g, int max_len, int64_t cap) {
  return enumerate_words_from(g, g.start, max_len, cap);
}

// ---- membership --------------------------------------------------------

bool derives(const Grammar& g, int nt, const Word& w) {
  if (w.empty()) {
    std::vector<bool> nullable(g.num_nonterminals(), false);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& p : g.productions) {
        if (nullable[p.lhs]) continue;
        bool all = true;
        for (const auto& s : p.rhs) {
          if (s.tag == GSym::Terminal) { all = false; break; }
          if (s.tag == GSym::Nonterminal && !nullable[s.nt]) { all = false; break; }
        }
        if (all) { nullable[p.lhs] = true; changed = true; }
      }
    }
    return nullable[nt];
  }
  Grammar c = to_cnf(g);  // original nonterminal indices are preserved
  size_t len = w.size(), n = c.num_nonterminals();
  // cell[i][l]: set of nts deriving w[i .. i+l)
  std::vector<std::vector<std::vector<bool>>> cell(
      len, std::vector<std::vector<bool>>(len + 1, std::vector<bool>(n, false)));
  for (const auto& p : c.productions) {
    if (p.rhs.size() == 1 && p.rhs[0].tag == GSym::Terminal) {
      for (size_t i = 0; i < len; ++i)
        if (w[i] == p.rhs[0].t) cell[i][1][p.lhs] = true;
    } else if (p.rhs.size() == 1 && p.rhs[0].tag == GSym::Star) {
      for (size_t i = 0; i < len; ++i)
        for (size_t l = 1; i + l <= len; ++l) {
          bool all = true;
          for (size_t k = i; k < i + l; ++k)
            if (!std::binary_search(p.rhs[0].star.begin(), p.rhs[0].star.end(),
                                    w[k])) {
              all = false;
              break;
            }
          if (all) cell[i][l][p.lhs] = true;
        }
    }
  }
  for (size_t l = 2; l <= len; ++l)
    for (size_t i = 0; i + l <= len; ++i)
      for (const auto& p : c.productions) {
        if (p.rhs.size() != 2) continue;
        int b = p.rhs[0].nt, cnt = p.rhs[1].nt;
        for (size_t split = 1; split < l; ++split)
          if (cell[i][split][b] && cell[i + split][l - split][cnt]) {
            cell[i][l][p.lhs] = true;
            break;
          }
      }
  // Star productions can also cover the full span found above; re-run one
  // closure round for spans improved by stars (handled in init already).
  return cell[0][len][nt];
}

// ---- marker typing -------------------------------------------------------

namespace {

constexpr int kDead = 4;

int marker_step(int s, const Sym& sym) {
  if (sym.kind == Sym::Hash) return s == 0 ? 1 : kDead;
  if (sym.kind == Sym::BarHash) return s == 0 ? 2 : s == 1 ? 3 : kDead;
  return s;
}

MarkerShape content_of(int s, int t) {
  if (s == t) return MarkerShape::None;
  if (s == 0 && t == 1) return MarkerShape::Hash;
  if ((s == 0 && t == 2) || (s == 1 && t == 3)) return MarkerShape::BarHash;
  if (s == 0 && t == 3) return MarkerShape::Both;
  return MarkerShape::None;  // unreachable for valid pairs
}

}  // namespace

MarkedTyping marked_typing(const Grammar& g_in) {
  Grammar g = trim(g_in);
  size_t n = g.num_nonterminals();

  // Product nonterminal (a, s, t) for tracker states s, t in 0..4.
  auto idx = [&](int a, int s, int t) { return (a * 5 + s) * 5 + t; };
  Grammar prod;
  std::vector<int> remap(n * 25, -1);
  auto get_nt = [&](int a, int s, int t) {
    int& r = remap[idx(a, s, t)];
    if (r < 0)
      r = prod.add_nonterminal(g.nt_names[a] + "@" + std::to_string(s) +
                               std::to_string(t));
    return r;
  };

  for (const auto& p : g.productions) {
    for (const auto& sym : p.rhs)
      if (sym.tag == GSym::Star)
        for (Sym x : sym.star)
          if (x.is_marker())
            throw std::invalid_argument("marked_typing: marker inside star");
    // Enumerate tracker state chains along the rhs.
    std::function<void(size_t, int, int, std::vector<GSym>&)> rec =
        [&](size_t i, int s0, int s, std::vector<GSym>& rhs) {
          if (i == p.rhs.size()) {
            prod.productions.push_back({get_nt(p.lhs, s0, s), rhs});
            return;
          }
          const GSym& sym = p.rhs[i];
          if (sym.tag == GSym::Terminal) {
            int t = marker_step(s, sym.t);
            rhs.push_back(sym);
            rec(i + 1, s0, t, rhs);
            rhs.pop_back();
          } else if (sym.tag == GSym::Star) {
            rhs.push_back(sym);
            rec(i + 1, s0, s, rhs);
            rhs.pop_back();
          } else {
            for (int t = 0; t <= kDead; ++t) {
              if (s == kDead && t != kDead) continue;
              if (t < s && !(s == kDead)) continue;  // tracker states ascend
              rhs.push_back(GSym::nonterminal(get_nt(sym.nt, s, t)));
              rec(i + 1, s0, t, rhs);
              rhs.pop_back();
            }
          }
        };
    std::vector<GSym> rhs;
    for (int s0 = 0; s0 <= kDead; ++s0) rec(0, s0, s0, rhs);
  }
  prod.start = n ? get_nt(g.start, 0, 0) : prod.add_nonterminal("S");

  // Malformed-marker check: any derivable word reaching the dead state.
  {
    Grammar bad = prod;
    int bad_start = bad.add_nonterminal("BAD");
    for (int t = 0; t <= kDead; ++t) {
      int r = remap[idx(g.start, 0, t)];
      if (r >= 0 && t == kDead)
        bad.add_production(bad_start, {GSym::nonterminal(r)});
    }
    // Also nonterminal pairs passing through dead intermediate states are
    // only reachable via a dead-step terminal; covered by (0, dead) above.
    bad.start = bad_start;
    if (!language_empty(bad))
      throw std::invalid_argument(
          "marked_typing: language contains repeated or disordered markers");
  }

  MarkedTyping out;
  out.shapes.assign(g_in.num_nonterminals(), {});

  // Shape split grammars: start S@(0, f(shape)).
  const int shape_state[4] = {0, 1, 2, 3};
  for (int shape = 0; shape < 4; ++shape) {
    Grammar s = prod;
    int r = remap[idx(g.start, 0, shape_state[shape])];
    if (r >= 0) {
      s.start = r;
      out.split[shape] = trim(s);
    } else {
      Grammar e;
      e.start = e.add_nonterminal(g.nt_names[g.start]);
      out.split[shape] = e;
    }
  }

  // Typing of original nonterminals: contents of productive (0, t) copies.
  {
    std::vector<int> trim_map;
    Grammar whole = prod;
    // make every (a,0,t) reachable from a fresh root to judge productivity
    int root = whole.add_nonterminal("ROOT");
    for (size_t a = 0; a < n; ++a)
      for (int t = 0; t < 4; ++t) {
        int r = remap[idx(int(a), 0, t)];
        if (r >= 0) whole.add_production(root, {GSym::nonterminal(r)});
      }
    whole.start = root;
    Grammar w = trim(whole, &trim_map);
    (void)w;
    std::vector<int> back;  // map trimmed g nts to original indices
    {
      std::vector<int> m;
      trim(g_in, &m);
      back.assign(n, -1);
      for (size_t orig = 0; orig < m.size(); ++orig)
        if (m[orig] >= 0) back[m[orig]] = int(orig);
    }
    for (size_t a = 0; a < n; ++a)
      for (int t = 0; t < 4; ++t) {
        int r = remap[idx(int(a), 0, t)];
        if (r >= 0 && trim_map[r] >= 0 && back[a] >= 0)
          out.shapes[back[a]].insert(content_of(0, t));
      }
  }
  return out;
}

// ---- offsets -------------------------------------------------------------

OffsetResult nonterminal_offsets(const Grammar& g) {
  g.validate();
  size_t n = g.num_nonterminals();
  // Offset value sets capped at two elements, with word witnesses.
  std::vector<std::map<int64_t, Word>> vals(n);

  auto star_witness = [](const GSym& s, int64_t off) -> Word {
    if (off == 0) return {};
    for (Sym x : s.star)
      if (x.offset() == off) return {x};
    return {};
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : g.productions) {
      if (vals[p.lhs].size() >= 2) continue;
      // Combine children offset choices.
      std::vector<std::pair<int64_t, Word>> partial = {{0, {}}};
      for (const auto& s : p.rhs) {
        std::vector<std::pair<int64_t, Word>> next;
        std::vector<std::pair<int64_t, Word>> options;
        if (s.tag == GSym::Terminal) {
          options.push_back({s.t.offset(), {s.t}});
        } else if (s.tag == GSym::Star) {
          options.push_back({0, {}});
          for (Sym x : s.star)
            if (x.offset() != 0) {
              options.push_back({x.offset(), star_witness(s, x.offset())});
              break;
            }
        } else {
          for (const auto& [o, w] : vals[s.nt]) options.push_back({o, w});
        }
        for (const auto& [po, pw] : partial)
          for (const auto& [oo, ow] : options) {
            Word w = pw;
            w.insert(w.end(), ow.begin(), ow.end());
            next.push_back({po + oo, std::move(w)});
          }
        // Two distinct sums suffice; keep at most three per step.
        std::map<int64_t, Word> dedup;
        for (auto& [o, w] : next)
          if (dedup.size() < 3) dedup.emplace(o, std::move(w));
        partial.clear();
        for (auto& [o, w] : dedup) partial.push_back({o, std::move(w)});
        if (partial.empty()) break;
      }
      for (auto& [o, w] : partial) {
        if (vals[p.lhs].size() >= 2) break;
        if (vals[p.lhs].emplace(o, std::move(w)).second) changed = true;
      }
    }
  }

  for (size_t a = 0; a < n; ++a)
    if (vals[a].size() >= 2) {
      NonUniformWitness w;
      w.nt = int(a);
      auto it = vals[a].begin();
      w.w1 = it->second;
      ++it;
      w.w2 = it->second;
      return w;
    }
  std::map<int, int64_t> out;
  for (size_t a = 0; a < n; ++a)
    if (!vals[a].empty()) out[int(a)] = vals[a].begin()->first;
  return out;
}

// ---- mindip ----------------------------------------------------------------

DipBound dip_bound(const Grammar& g, const Caps& caps) {
  int64_t e = 2 * g.size();
  if (e >= 62 || (int64_t{1} << e) > caps.mindip_init_cap)
    return {caps.mindip_init_cap, true};
  return {int64_t{1} << e, false};
}

MindipResult mindip(const Grammar& g, const Caps& caps) {
  auto offs = nonterminal_offsets(g);
  if (std::holds_alternative<NonUniformWitness>(offs))
    throw std::invalid_argument("mindip: grammar is not offset-uniform");
  const auto& offset_of = std::get<std::map<int, int64_t>>(offs);

  DipBound bound = dip_bound(g, caps);
  int64_t init = bound.value;
  size_t n = g.num_nonterminals();
  std::vector<int64_t> d(n, init);

  auto sym_offset = [&](const GSym& s) -> int64_t {
    switch (s.tag) {
      case GSym::Terminal: return s.t.offset();
      case GSym::Star:
        for (Sym x : s.star)
          if (x.offset() != 0)
            throw std::invalid_argument("mindip: bracket letters inside star");
        return 0;
      default: {
        auto it = offset_of.find(s.nt);
        if (it == offset_of.end())
          throw std::invalid_argument("mindip: unproductive nonterminal (trim first)");
        return it->second;
      }
    }
  };
  auto sym_dip = [&](const GSym& s) -> int64_t {
    switch (s.tag) {
      case GSym::Terminal: return s.t.kind == Sym::Close ? 1 : 0;
      case GSym::Star: return 0;
      default: return d[s.nt];
    }
  };

  Grammar gg = g;
  gg.normalize();
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : gg.productions) {
      int64_t dw = 0;  // empty body has dip 0
      int64_t prefix_offset = 0;
      for (size_t k = 0; k < p.rhs.size(); ++k) {
        dw = k == 0 ? sym_dip(p.rhs[0])
                    : std::max(dw, sym_dip(p.rhs[k]) - prefix_offset);
        prefix_offset += sym_offset(p.rhs[k]);
      }
      if (dw < d[p.lhs]) {
        d[p.lhs] = dw;
        changed = true;
      }
    }
  }
  MindipResult out;
  for (size_t a = 0; a < n; ++a) {
    if (offset_of.count(int(a)) == 0) continue;  // unproductive
    out.mindip[int(a)] = d[a];
    if (d[a] == init && bound.capped) out.cap_hit = true;
  }
  return out;
}

// ---- pump grammar ----------------------------------------------------------

PumpGrammar pump_grammar(const Grammar& g, int a0) {
  g.validate();
  if (!g.in_cnf()) throw std::invalid_argument("pump_grammar: grammar not in CNF");
  if (a0 < 0 || a0 >= int(g.num_nonterminals()))
    throw std::invalid_argument("pump_grammar: undeclared nonterminal");

  PumpGrammar pg;
  size_t n = g.num_nonterminals();
  // Copies: A (path), A_L, A_R.
  for (size_t a = 0; a < n; ++a) pg.g.add_nonterminal(g.nt_names[a]);
  for (size_t a = 0; a < n; ++a) pg.g.add_nonterminal(g.nt_names[a] + ".L");
  for (size_t a = 0; a < n; ++a) pg.g.add_nonterminal(g.nt_names[a] + ".R");
  auto path = [&](int a) { return a; };
  auto left = [&](int a) { return int(n) + a; };
  auto right = [&](int a) { return 2 * int(n) + a; };

  uint16_t next_base = 0;
  auto tag_of = [&](PumpSide side, Sym x) {
    auto key = std::make_pair(int(side), x);
    auto it = pg.tag.find(key);
    if (it != pg.tag.end()) return it->second;
    Sym t{x.kind, next_base++};
    pg.tag.emplace(key, t);
    pg.untag.emplace(t, std::make_pair(side, x));
    return t;
  };

  auto push = [&](int lhs, std::vector<GSym> rhs, int origin) {
    pg.g.add_production(lhs, std::move(rhs));
    pg.origin.push_back(origin);
  };

  for (size_t pi = 0; pi < g.productions.size(); ++pi) {
    const auto& p = g.productions[pi];
    if (p.rhs.size() == 2) {
      int b = p.rhs[0].nt, c = p.rhs[1].nt;
      push(left(p.lhs), {GSym::nonterminal(left(b)), GSym::nonterminal(left(c))}, int(pi));
      push(right(p.lhs), {GSym::nonterminal(right(b)), GSym::nonterminal(right(c))}, int(pi));
      push(path(p.lhs), {GSym::nonterminal(left(b)), GSym::nonterminal(path(c))}, int(pi));
      push(path(p.lhs), {GSym::nonterminal(path(b)), GSym::nonterminal(right(c))}, int(pi));
    } else if (p.rhs.size() == 1 && p.rhs[0].tag == GSym::Terminal) {
      // Marker productions cannot occur inside pump sides (a repeated marker
      // would leave the marked-word pattern); their copies stay unproductive.
      if (p.rhs[0].t.is_marker()) continue;
      push(left(p.lhs), {GSym::terminal(tag_of(PumpSide::Left, p.rhs[0].t))}, int(pi));
      push(right(p.lhs), {GSym::terminal(tag_of(PumpSide::Right, p.rhs[0].t))}, int(pi));
    } else if (p.rhs.size() == 1 && p.rhs[0].tag == GSym::Star) {
      std::vector<Sym> ls, rs;
      bool marker = false;
      for (Sym x : p.rhs[0].star) {
        if (x.is_marker()) marker = true;
        ls.push_back(tag_of(PumpSide::Left, x));
        rs.push_back(tag_of(PumpSide::Right, x));
      }
      if (marker) continue;
      push(left(p.lhs), {GSym::star_of(ls)}, int(pi));
      push(right(p.lhs), {GSym::star_of(rs)}, int(pi));
    } else if (p.rhs.empty()) {
      push(left(p.lhs), {}, int(pi));
      push(right(p.lhs), {}, int(pi));
    }
  }
  pg.epsilon_production = int(pg.g.productions.size());
  push(path(a0), {}, -1);
  pg.g.start = path(a0);
  return pg;
}

// ---- pump enumeration -------------------------------------------------------

std::vector<Pump> enumerate_pumps(const Grammar& g, int nt, int max_size,
                                  int64_t cap) {
  g.validate();
  std::vector<Pump> out;
  std::set<std::pair<Word, Word>> seen;
  int64_t visited = 0;

  // Process the sentential form left to right; expand nonterminals with any
  // production, or skip (once) an occurrence of `nt` as the pump pivot.
  // The witness records production indices in application order, with -1 at
  // the pivot skip.
  std::vector<GSym> form = {GSym::nonterminal(nt)};
  std::vector<int> script;
  Word prefix;  // terminals emitted before the pivot (or so far)
  Word suffix;  // terminals emitted after the pivot

  std::function<void(size_t, bool, int)> rec = [&](size_t pos, bool pivoted,
                                                   int budget) {
    if (++visited > cap) throw CapExceeded("enumerate_pumps", cap);
    if (pos == form.size()) {
      if (!pivoted) return;
      if (prefix.empty() && suffix.empty()) return;  // epsilon pump
      if (seen.emplace(prefix, suffix).second) {
        Pump p;
        p.nt = nt;
        p.left = prefix;
        p.right = suffix;
        p.witness = script;
        out.push_back(std::move(p));
      }
      return;
    }
    const GSym s = form[pos];  // by value: form is mutated below
    if (s.tag == GSym::Terminal) {
      (pivoted ? suffix : prefix).push_back(s.t);
      rec(pos + 1, pivoted, budget);
      (pivoted ? suffix : prefix).pop_back();
      return;
    }
    if (s.tag == GSym::Star) {
      // Stars contribute any word; for pump enumeration take epsilon and
      // single letters (longer star words add nothing new structurally).
      rec(pos + 1, pivoted, budget);
      for (Sym x : s.star) {
        (pivoted ? suffix : prefix).push_back(x);
        rec(pos + 1, pivoted, budget);
        (pivoted ? suffix : prefix).pop_back();
      }
      return;
    }
    // Nonterminal: pivot skip.
    if (!pivoted && s.nt == nt) {
      script.push_back(-1);
      rec(pos + 1, true, budget);
      script.pop_back();
    }
    if (budget == 0) return;
    for (size_t pi = 0; pi < g.productions.size(); ++pi) {
      const auto& p = g.productions[pi];
      if (p.lhs != s.nt) continue;
      std::vector<GSym> saved = form;
      form.erase(form.begin() + pos);
      form.insert(form.begin() + pos, p.rhs.begin(), p.rhs.end());
      script.push_back(int(pi));
      rec(pos, pivoted, budget - 1);
      script.pop_back();
      form = std::move(saved);
    }
  };
  rec(0, false, max_size);
  return out;
}

bool validate_pump(const Grammar& g, const Pump& p) {
  // Replay the witness with the same traversal as enumerate_pumps.
  std::vector<GSym> form = {GSym::nonterminal(p.nt)};
  Word prefix, suffix;
  bool pivoted = false;
  size_t pos = 0, step = 0;
  while (pos < form.size()) {
    const GSym& s = form[pos];
    if (s.tag == GSym::Terminal) {
      (pivoted ? suffix : prefix).push_back(s.t);
      ++pos;
      continue;
    }
    if (s.tag == GSym::Star) return false;  // witnesses never contain stars
    if (step >= p.witness.size()) return false;
    int w = p.witness[step++];
    if (w == -1) {
      if (pivoted || s.nt != p.nt) return false;
      pivoted = true;
      ++pos;
      continue;
    }
    if (w < 0 || w >= int(g.productions.size())) return false;
    const auto& prod = g.productions[w];
    if (prod.lhs != s.nt) return false;
    form.erase(form.begin() + pos);
    form.insert(form.begin() + pos, prod.rhs.begin(), prod.rhs.end());
  }
  return pivoted && step == p.witness.size() && prefix == p.left &&
         suffix == p.right;
}

std::string dump(const Grammar& g, const SymbolTable& table) {
  std::ostringstream os;
  for (const auto& p : g.productions) {
    os << "prod " << g.nt_names[p.lhs] << " ->";
    for (const auto& s : p.rhs) {
      if (s.tag == GSym::Terminal) {
        os << ' ' << table.name(s.t);
      } else if (s.tag == GSym::Nonterminal) {
        os << ' ' << g.nt_names[s.nt];
      } else {
        os << " [";
        for (size_t i = 0; i < s.star.size(); ++i)
          os << (i ? " " : "") << table.name(s.star[i]);
        os << "]*";
      }
    }
    os << '\n';
  }
  os << "start " << (g.start >= 0 ? g.nt_names[g.start] : "?") << '\n';
  return os.str();
}

}  // namespace dyckref
