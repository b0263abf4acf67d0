#ifndef DYCKREF_TESTUTIL_HPP_
#define DYCKREF_TESTUTIL_HPP_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dyckref/symbols.hpp"
#include "dyckref/words.hpp"

namespace tu {

using dyckref::Sym;
using dyckref::SymbolTable;
using dyckref::Word;

// Builds a word from space-free shorthand over a table with bases x, y and
// handlers a, b, c: "x X y Y" with capital = barred; '#' and '!' markers.
inline Word w(const std::string& shorthand) {
  Word out;
  for (char ch : shorthand) {
    switch (ch) {
      case 'x': out.push_back(dyckref::open_sym(0)); break;
      case 'X': out.push_back(dyckref::close_sym(0)); break;
      case 'y': out.push_back(dyckref::open_sym(1)); break;
      case 'Y': out.push_back(dyckref::close_sym(1)); break;
      case 'a': out.push_back(dyckref::handler_sym(0)); break;
      case 'b': out.push_back(dyckref::handler_sym(1)); break;
      case 'c': out.push_back(dyckref::handler_sym(2)); break;
      case '#': out.push_back(dyckref::hash_sym()); break;
      case '!': out.push_back(dyckref::barhash_sym()); break;
      case ' ': break;
      default: throw std::invalid_argument("bad shorthand char");
    }
  }
  return out;
}

inline SymbolTable table_xy_abc() {
  return SymbolTable({"x", "y"}, {"a", "b", "c"});
}

// All words of length exactly n over the alphabet.
inline void each_word(const std::vector<Sym>& alphabet, int n,
                      const std::function<void(const Word&)>& fn) {
  Word cur;
  std::function<void()> rec = [&] {
    if (int(cur.size()) == n) {
      fn(cur);
      return;
    }
    for (Sym s : alphabet) {
      cur.push_back(s);
      rec();
      cur.pop_back();
    }
  };
  rec();
}

inline void each_word_upto(const std::vector<Sym>& alphabet, int n,
                           const std::function<void(const Word&)>& fn) {
  for (int k = 0; k <= n; ++k) each_word(alphabet, k, fn);
}

// Independent subsequence oracle: u obtainable from v by deleting letters,
// checked by exhaustive deletion-set search.
inline bool subword_oracle(const Word& u, const Word& v) {
  std::function<bool(size_t, size_t)> rec = [&](size_t i, size_t j) -> bool {
    if (i == u.size()) return true;
    if (j == v.size()) return false;
    if (u[i] == v[j] && rec(i + 1, j + 1)) return true;
    return rec(i, j + 1);
  };
  return rec(0, 0);
}

// Independent Dyck membership over one letter: counter scan.
inline bool canon_dyck_oracle(const Word& v) {
  long long c = 0;
  for (Sym s : v) {
    if (s.kind == Sym::Open) ++c;
    else if (s.kind == Sym::Close) { if (--c < 0) return false; }
    else return false;
  }
  return c == 0;
}

// Admissibility by definition: z is an infix of some u # v ! w where the
// bracket projection of v is a canonical Dyck word. The host is searched by
// enumerating bracket completions up to the given budget on the side that
// still needs extending; returns false when no completion within the budget
// works.
inline bool admissible_oracle(const Word& z, int pad) {
  int hp = -1, bp = -1;
  for (size_t i = 0; i < z.size(); ++i) {
    if (z[i].kind == Sym::Hash) {
      if (hp >= 0 || bp >= 0) throw std::invalid_argument("malformed markers");
      hp = int(i);
    } else if (z[i].kind == Sym::BarHash) {
      if (bp >= 0) throw std::invalid_argument("malformed markers");
      bp = int(i);
    }
  }
  auto brackets = [](Word::const_iterator a, Word::const_iterator b) {
    Word out;
    for (auto it = a; it != b; ++it)
      if (it->is_bracket()) out.push_back(*it);
    return out;
  };
  std::vector<Sym> letters = {dyckref::canon_open(), dyckref::canon_close()};
  if (hp < 0 && bp < 0) {
    // Marker-free: embeds into the u part of z # !.
    return true;
  }
  if (hp >= 0 && bp >= 0) {
    Word v = brackets(z.begin() + hp + 1, z.begin() + bp);
    return canon_dyck_oracle(v);
  }
  bool found = false;
  if (hp >= 0) {
    // Search right completions; prune once the running counter dips below
    // zero (no Dyck word has such a prefix).
    Word v0 = brackets(z.begin() + hp + 1, z.end());
    long long c = 0;
    for (Sym s : v0) {
      c += s.offset();
      if (c < 0) return false;
    }
    std::function<void(long long, int)> rec = [&](long long cnt, int left) {
      if (found || cnt < 0) return;
      if (cnt == 0) { found = true; return; }
      if (left == 0) return;
      rec(cnt + 1, left - 1);
      rec(cnt - 1, left - 1);
    };
    rec(c, pad);
  } else {
    // Search left completions ext with ext . v0 a Dyck word.
    Word v0 = brackets(z.begin(), z.begin() + bp);
    each_word_upto(letters, pad, [&](const Word& ext) {
      if (found) return;
      long long c = 0;
      for (Sym s : ext) {
        c += s.offset();
        if (c < 0) return;
      }
      Word v = ext;
      v.insert(v.end(), v0.begin(), v0.end());
      if (canon_dyck_oracle(v)) found = true;
    });
  }
  return found;
}

}  // namespace tu

#endif
