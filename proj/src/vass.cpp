#include "dyckref/vass.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dyckref {

int Vass::add_state(const std::string& name) {
  state_names.push_back(name.empty() ? "q" + std::to_string(num_states) : name);
  return num_states++;
}

int Vass::add_counter(const std::string& name) {
  counter_names.push_back(name.empty() ? "c" + std::to_string(num_counters)
                                       : name);
  return num_counters++;
}

std::vector<int8_t> Vass::unit(int counter, int sign) const {
  std::vector<int8_t> d(num_counters, 0);
  d.at(counter) = int8_t(sign);
  return d;
}

void Vass::add_edge(int from, std::optional<Sym> label,
                    std::vector<int8_t> delta, int to) {
  if (int(delta.size()) != num_counters)
    throw std::invalid_argument("vass edge: wrong delta arity");
  for (int8_t d : delta)
    if (d < -1 || d > 1)
      throw std::invalid_argument("vass edge: update outside {-1,0,1}");
  edges.push_back({from, label, std::move(delta), to});
}

void Vass::validate() const {
  if (q0 < 0 || q0 >= num_states || qf < 0 || qf >= num_states)
    throw std::invalid_argument("vass: undeclared initial or final state");
  for (const auto& e : edges)
    if (e.from < 0 || e.from >= num_states || e.to < 0 || e.to >= num_states)
      throw std::invalid_argument("vass: undeclared edge endpoint");
}

// ---- backward coverability ---------------------------------------------------

namespace {

struct BasisElem {
  int state;
  std::vector<int64_t> vec;
  int pred_edge = -1;  // edge applied to move toward the target
  int pred_elem = -1;  // arena index of the successor element
};

bool leq(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

}  // namespace

CoverResult coverable(const Vass& v, int target_state, const Caps& caps) {
  v.validate();
  CoverResult res;
  std::vector<BasisElem> arena;
  // Active antichain per state: arena indices.
  std::vector<std::vector<int>> active(v.num_states);

  auto insert = [&](BasisElem e) -> int {
    for (int i : active[e.state])
      if (leq(arena[i].vec, e.vec)) return -1;  // dominated
    std::erase_if(active[e.state],
                  [&](int i) { return leq(e.vec, arena[i].vec); });
    arena.push_back(std::move(e));
    active[arena.back().state].push_back(int(arena.size()) - 1);
    return int(arena.size()) - 1;
  };

  std::vector<std::vector<int>> edges_into(v.num_states);
  for (size_t ei = 0; ei < v.edges.size(); ++ei)
    edges_into[v.edges[ei].to].push_back(int(ei));

  insert({target_state, std::vector<int64_t>(v.num_counters, 0), -1, -1});
  std::deque<int> work;
  for (const auto& per_state : active)
    for (int i : per_state) work.push_back(i);

  while (!work.empty()) {
    int cur = work.front();
    work.pop_front();
    // Skip if no longer active (dominated meanwhile).
    const auto& act = active[arena[cur].state];
    if (std::find(act.begin(), act.end(), cur) == act.end()) continue;
    if (int64_t(arena.size()) > caps.basis_budget) {
      res.status = CoverResult::Indeterminate;
      res.caps.hit("coverable", "basis_budget", caps.basis_budget);
      return res;
    }
    for (int ei : edges_into[arena[cur].state]) {
      const auto& e = v.edges[ei];
      BasisElem pre;
      pre.state = e.from;
      pre.vec.resize(v.num_counters);
      for (int c = 0; c < v.num_counters; ++c)
        pre.vec[c] = std::max<int64_t>(
            {0, arena[cur].vec[c] - e.delta[c], -int64_t(e.delta[c])});
      pre.pred_edge = ei;
      pre.pred_elem = cur;
      int id = insert(std::move(pre));
      if (id >= 0) work.push_back(id);
    }
  }

  // Covered iff some basis element at q0 is dominated by the zero vector.
  int root = -1;
  for (int i : active[v.q0]) {
    bool zero = true;
    for (int64_t x : arena[i].vec)
      if (x != 0) zero = false;
    if (zero) root = i;
  }
  if (root < 0) {
    res.status = CoverResult::Unreachable;
    return res;
  }
  res.status = CoverResult::Reachable;
  for (int cur = root; arena[cur].pred_edge >= 0; cur = arena[cur].pred_elem) {
    res.witness_edges.push_back(arena[cur].pred_edge);
    const auto& e = v.edges[arena[cur].pred_edge];
    if (e.label) res.witness_word.push_back(*e.label);
  }
  return res;
}

bool validate_run(const Vass& v, const std::vector<int>& edge_seq,
                  int target_state) {
  int q = v.q0;
  std::vector<int64_t> c(v.num_counters, 0);
  for (int ei : edge_seq) {
    if (ei < 0 || ei >= int(v.edges.size())) return false;
    const auto& e = v.edges[ei];
    if (e.from != q) return false;
    for (int i = 0; i < v.num_counters; ++i) {
      c[i] += e.delta[i];
      if (c[i] < 0) return false;
    }
    q = e.to;
  }
  return q == target_state;
}

// ---- product -----------------------------------------------------------------

Vass product_nfa(const Vass& v, const Nfa& a) {
  v.validate();
  Vass out;
  out.num_counters = v.num_counters;
  out.counter_names = v.counter_names;
  auto idx = [&](int q, int p) { return q * a.num_states + p; };
  for (int q = 0; q < v.num_states; ++q)
    for (int p = 0; p < a.num_states; ++p)
      out.add_state(v.state_names[q] + "*" + std::to_string(p));
  out.q0 = idx(v.q0, a.initial);
  out.qf = out.add_state("pf");  // collector for (qf, nfa-final)
  for (int p = 0; p < a.num_states; ++p)
    if (a.is_final(p)) out.add_edge(idx(v.qf, p), std::nullopt, out.zero(),
                                    out.qf);
  for (const auto& e : v.edges) {
    if (!e.label) {
      for (int p = 0; p < a.num_states; ++p)
        out.add_edge(idx(e.from, p), std::nullopt, e.delta, idx(e.to, p));
      continue;
    }
    for (const auto& f : a.edges)
      if (f.label && *f.label == *e.label)
        out.add_edge(idx(e.from, f.from), e.label, e.delta,
                     idx(e.to, f.to));
  }
  for (const auto& f : a.edges)
    if (!f.label)
      for (int q = 0; q < v.num_states; ++q)
        out.add_edge(idx(q, f.from), std::nullopt, out.zero(), idx(q, f.to));
  return out;
}

// ---- offset tracking -----------------------------------------------------------

namespace {

// Offset tracker product: states (q, offset in [-B, B]) plus an absorbing
// overflow copy (q, sink). Returns the product plus classification states.
struct OffsetProduct {
  Vass prod;
  int bad_final;       // reaches qf with nonzero tracked offset
  int sink_final;      // reaches qf through the overflow copy
};

OffsetProduct offset_product(const Vass& v, int64_t bound) {
  OffsetProduct out;
  Vass& p = out.prod;
  p.num_counters = v.num_counters;
  p.counter_names = v.counter_names;
  int width = int(2 * bound + 1);
  auto idx = [&](int q, int64_t off) {
    return q * (width + 1) + int(off + bound);
  };
  auto sink = [&](int q) { return q * (width + 1) + width; };
  for (int q = 0; q < v.num_states; ++q) {
    for (int64_t off = -bound; off <= bound; ++off)
      p.add_state(v.state_names[q] + "@" + std::to_string(off));
    p.add_state(v.state_names[q] + "@sink");
  }
  p.q0 = idx(v.q0, 0);
  for (const auto& e : v.edges) {
    int64_t d = e.label ? e.label->offset() : 0;
    for (int64_t off = -bound; off <= bound; ++off) {
      int64_t off2 = off + d;
      int to = (off2 < -bound || off2 > bound) ? sink(e.to) : idx(e.to, off2);
      p.add_edge(idx(e.from, off), e.label, e.delta, to);
    }
    p.add_edge(sink(e.from), e.label, e.delta, sink(e.to));
  }
  out.bad_final = p.add_state("bad");
  out.sink_final = p.add_state("overflow");
  p.qf = out.bad_final;
  for (int64_t off = -bound; off <= bound; ++off)
    if (off != 0)
      p.add_edge(idx(v.qf, off), std::nullopt, p.zero(), out.bad_final);
  p.add_edge(sink(v.qf), std::nullopt, p.zero(), out.sink_final);
  return out;
}

}  // namespace

UniformOffsetResult uniform_offset_zero(const Vass& v, int64_t bound,
                                        const Caps& caps) {
  v.validate();
  for (const auto& e : v.edges)
    if (e.label && e.label->is_handler())
      throw std::invalid_argument("uniform_offset_zero: handler letter");
  UniformOffsetResult res;
  OffsetProduct op = offset_product(v, bound);
  CoverResult bad = coverable(op.prod, op.bad_final, caps);
  res.caps.merge(bad.caps);
  if (bad.status == CoverResult::Indeterminate) {
    res.status = UniformOffsetResult::Indeterminate;
    return res;
  }
  if (bad.status == CoverResult::Reachable) {
    res.status = UniformOffsetResult::No;
    res.witness = bad.witness_word;
    return res;
  }
  CoverResult sink = coverable(op.prod, op.sink_final, caps);
  res.caps.merge(sink.caps);
  if (sink.status != CoverResult::Unreachable) {
    res.status = UniformOffsetResult::Indeterminate;
    res.caps.hit("uniform_offset_zero", "tracker_bound", bound);
    return res;
  }
  res.status = UniformOffsetResult::Yes;
  return res;
}

// ---- marked Dyck factor ---------------------------------------------------------

namespace {

// Format-and-middle tracker: phases
//   0: before '#'
//   1 + off: between markers with tracked middle offset off in [0, 2M]
//   after-state: after '~#'
//   overflow copies: middle exceeded 2M
struct MdfTracker {
  Nfa nfa;
  int good_final;
  int overflow_final;
};

MdfTracker mdf_tracker(const Vass& v, int64_t m) {
  MdfTracker out;
  Nfa& a = out.nfa;
  std::set<Sym> letters;
  for (const auto& e : v.edges)
    if (e.label && e.label->is_bracket()) letters.insert(*e.label);
  int64_t top = 2 * m;
  int pre = a.add_state();
  std::vector<int> mid;
  for (int64_t off = 0; off <= top; ++off) mid.push_back(a.add_state());
  int post = a.add_state();
  int mid_over = a.add_state();
  int post_over = a.add_state();
  a.initial = pre;
  out.good_final = post;
  out.overflow_final = post_over;
  a.finals = {post, post_over};
  for (Sym s : letters) {
    a.add_edge(pre, s, pre);
    a.add_edge(post, s, post);
    a.add_edge(mid_over, s, mid_over);
    a.add_edge(post_over, s, post_over);
    int64_t d = s.offset();
    for (int64_t off = 0; off <= top; ++off) {
      int64_t off2 = off + d;
      if (off2 < 0) continue;  // middle may never dip
      if (off2 > top)
        a.add_edge(mid[off], s, mid_over);
      else
        a.add_edge(mid[off], s, mid[off2]);
    }
  }
  a.add_edge(pre, hash_sym(), mid[0]);
  a.add_edge(mid[0], barhash_sym(), post);
  a.add_edge(mid_over, barhash_sym(), post_over);
  return out;
}

}  // namespace

MdfResult marked_dyck_factor(const Vass& v, int64_t m_bound, const Caps& caps) {
  v.validate();
  MdfResult res;
  MdfTracker tr = mdf_tracker(v, m_bound);
  // Two products: one accepting only via the good final, one via overflow.
  Nfa good = tr.nfa;
  good.finals = {tr.good_final};
  Vass pg = product_nfa(v, good);
  CoverResult found = coverable(pg, pg.qf, caps);
  res.caps.merge(found.caps);
  if (found.status == CoverResult::Reachable) {
    res.status = MdfResult::Found;
    res.witness = found.witness_word;
    return res;
  }
  if (found.status == CoverResult::Indeterminate) {
    res.status = MdfResult::Indeterminate;
    return res;
  }
  Nfa over = tr.nfa;
  over.finals = {tr.overflow_final};
  Vass po = product_nfa(v, over);
  CoverResult ov = coverable(po, po.qf, caps);
  res.caps.merge(ov.caps);
  if (ov.status != CoverResult::Unreachable) {
    res.status = MdfResult::Indeterminate;
    res.caps.hit("marked_dyck_factor", "tracker_bound", m_bound);
    return res;
  }
  res.status = MdfResult::NotFound;
  return res;
}

// ---- variants -------------------------------------------------------------------

VassVariants build_vass_variants(const Vass& v) {
  v.validate();
  for (const auto& e : v.edges)
    if (e.label && !e.label->is_bracket())
      throw std::invalid_argument("build_vass_variants: non-bracket letter");
  VassVariants out;

  auto relabel = [](std::optional<Sym> l) -> std::optional<Sym> {
    if (!l) return std::nullopt;
    return l->kind == Sym::Open ? canon_open() : canon_close();
  };

  // Vo: image under the bracket collapse.
  out.vo = v;
  for (auto& e : out.vo.edges) e.label = relabel(e.label);

  // Vd: { # p(v) ~# ~x p(w) | v ybar w accepted }.
  {
    Vass& d = out.vd;
    d.num_counters = v.num_counters;
    d.counter_names = v.counter_names;
    auto c1 = [&](int q) { return q; };
    auto c2 = [&](int q) { return v.num_states + q; };
    for (int q = 0; q < v.num_states; ++q) d.add_state(v.state_names[q] + ".1");
    for (int q = 0; q < v.num_states; ++q) d.add_state(v.state_names[q] + ".2");
    int init = d.add_state("init");
    d.q0 = init;
    d.qf = c2(v.qf);
    d.add_edge(init, hash_sym(), d.zero(), c1(v.q0));
    for (const auto& e : v.edges) {
      d.add_edge(c1(e.from), relabel(e.label), e.delta, c1(e.to));
      d.add_edge(c2(e.from), relabel(e.label), e.delta, c2(e.to));
      if (e.label && e.label->kind == Sym::Close) {
        int mid = d.add_state("split");
        d.add_edge(c1(e.from), barhash_sym(), d.zero(), mid);
        d.add_edge(mid, canon_close(), e.delta, c2(e.to));
      }
    }
  }

  // Vm: { p(u) # p(v) ~# p(w) | u y v zbar w accepted, y != z }.
  {
    Vass& m = out.vm;
    m.num_counters = v.num_counters;
    m.counter_names = v.counter_names;
    std::set<uint16_t> bases;
    for (const auto& e : v.edges)
      if (e.label) bases.insert(e.label->base);
    std::vector<uint16_t> base_list(bases.begin(), bases.end());
    auto c1 = [&](int q) { return q; };
    // copy 2 indexed by the base of the replaced open letter
    std::map<uint16_t, int> c2_off;
    for (int q = 0; q < v.num_states; ++q) m.add_state(v.state_names[q] + ".1");
    for (uint16_t b : base_list) {
      c2_off[b] = m.num_states;
      for (int q = 0; q < v.num_states; ++q)
        m.add_state(v.state_names[q] + ".2y" + std::to_string(b));
    }
    int c3 = m.num_states;
    for (int q = 0; q < v.num_states; ++q) m.add_state(v.state_names[q] + ".3");
    m.q0 = c1(v.q0);
    m.qf = c3 + v.qf;
    for (const auto& e : v.edges) {
      m.add_edge(c1(e.from), relabel(e.label), e.delta, c1(e.to));
      for (uint16_t b : base_list)
        m.add_edge(c2_off[b] + e.from, relabel(e.label), e.delta,
                   c2_off[b] + e.to);
      m.add_edge(c3 + e.from, relabel(e.label), e.delta, c3 + e.to);
      if (e.label && e.label->kind == Sym::Open)
        m.add_edge(c1(e.from), hash_sym(), e.delta,
                   c2_off[e.label->base] + e.to);
      if (e.label && e.label->kind == Sym::Close)
        for (uint16_t b : base_list)
          if (b != e.label->base)
            m.add_edge(c2_off[b] + e.from, barhash_sym(), e.delta, c3 + e.to);
    }
  }
  return out;
}

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::OV: return "OV";
    case ViolationKind::DV: return "DV";
    case ViolationKind::MV: return "MV";
    case ViolationKind::NonTame: return "NON_TAME";
  }
  return "?";
}

VassVerdict vass_in_dyck(const Vass& v, const Caps& caps) {
  VassVerdict res;
  VassVariants var = build_vass_variants(v);
  UniformOffsetResult uo = uniform_offset_zero(var.vo, caps.tracker_bound, caps);
  res.caps.merge(uo.caps);
  if (uo.status == UniformOffsetResult::No) {
    res.status = VassVerdict::NotIncluded;
    res.kind = ViolationKind::OV;
    res.witness = uo.witness;
    return res;
  }
  MdfResult dv = marked_dyck_factor(var.vd, caps.tracker_bound, caps);
  res.caps.merge(dv.caps);
  if (dv.status == MdfResult::Found) {
    res.status = VassVerdict::NotIncluded;
    res.kind = ViolationKind::DV;
    res.witness = dv.witness;
    return res;
  }
  MdfResult mv = marked_dyck_factor(var.vm, caps.tracker_bound, caps);
  res.caps.merge(mv.caps);
  if (mv.status == MdfResult::Found) {
    res.status = VassVerdict::NotIncluded;
    res.kind = ViolationKind::MV;
    res.witness = mv.witness;
    return res;
  }
  if (uo.status == UniformOffsetResult::Indeterminate ||
      dv.status == MdfResult::Indeterminate ||
      mv.status == MdfResult::Indeterminate) {
    res.status = VassVerdict::Indeterminate;
    return res;
  }
  res.status = VassVerdict::Included;
  return res;
}

std::string dump(const Vass& v, const SymbolTable& table) {
  std::ostringstream os;
  os << "states:";
  for (const auto& n : v.state_names) os << ' ' << n;
  os << "\ninit: " << v.state_names.at(v.q0)
     << "\nfinal: " << v.state_names.at(v.qf) << "\ncounters:";
  for (const auto& n : v.counter_names) os << ' ' << n;
  os << '\n';
  for (const auto& e : v.edges) {
    os << "edge " << v.state_names.at(e.from) << ' '
       << (e.label ? table.name(*e.label) : "~") << ' ';
    for (int c = 0; c < v.num_counters; ++c) {
      if (e.delta[c] == 1) os << '+' << v.counter_names[c];
      if (e.delta[c] == -1) os << '-' << v.counter_names[c];
    }
    os << ' ' << v.state_names.at(e.to) << '\n';
  }
  return os.str();
}

}  // namespace dyckref
