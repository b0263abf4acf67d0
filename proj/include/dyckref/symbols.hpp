#ifndef DYCKREF_SYMBOLS_HPP_
#define DYCKREF_SYMBOLS_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyckref {

// A symbol is an open or close bracket over a base name, a handler name, or
// one of the two markers. Base/handler indices refer to a SymbolTable.
struct Sym {
  enum Kind : uint8_t { Open = 0, Close = 1, Handler = 2, Hash = 3, BarHash = 4 };
  Kind kind = Open;
  uint16_t base = 0;

  friend auto operator<=>(const Sym&, const Sym&) = default;

  bool is_bracket() const { return kind == Open || kind == Close; }
  bool is_marker() const { return kind == Hash || kind == BarHash; }
  bool is_handler() const { return kind == Handler; }
  int offset() const { return kind == Open ? 1 : kind == Close ? -1 : 0; }
  uint32_t pack() const { return (uint32_t(kind) << 16) | base; }
};

using Word = std::vector<Sym>;

inline Sym open_sym(uint16_t base) { return {Sym::Open, base}; }
inline Sym close_sym(uint16_t base) { return {Sym::Close, base}; }
inline Sym handler_sym(uint16_t idx) { return {Sym::Handler, idx}; }
inline Sym hash_sym() { return {Sym::Hash, 0}; }
inline Sym barhash_sym() { return {Sym::BarHash, 0}; }

// The canonical bracket pair used after the single-letter projection.
inline Sym canon_open() { return open_sym(0); }
inline Sym canon_close() { return close_sym(0); }

// Declares the bracket base names and the handler names of an instance.
// Barred copies and the two markers are derived, not declared.
class SymbolTable {
 public:
  SymbolTable() = default;
  SymbolTable(std::vector<std::string> bases, std::vector<std::string> handlers)
      : bases_(std::move(bases)), handlers_(std::move(handlers)) {
    for (size_t i = 0; i < bases_.size(); ++i) {
      check_name(bases_[i]);
      if (!by_name_.emplace(bases_[i], open_sym(uint16_t(i))).second)
        throw std::invalid_argument("duplicate symbol name: " + bases_[i]);
    }
    for (size_t i = 0; i < handlers_.size(); ++i) {
      check_name(handlers_[i]);
      if (!by_name_.emplace(handlers_[i], handler_sym(uint16_t(i))).second)
        throw std::invalid_argument("duplicate symbol name: " + handlers_[i]);
    }
  }

  size_t num_bases() const { return bases_.size(); }
  size_t num_handlers() const { return handlers_.size(); }

  const std::string& base_name(uint16_t i) const { return bases_.at(i); }
  const std::string& handler_name(uint16_t i) const { return handlers_.at(i); }

  std::optional<Sym> lookup(const std::string& name) const {
    if (name == "#") return hash_sym();
    if (name == "~#") return barhash_sym();
    if (name.size() > 1 && name[0] == '~') {
      auto it = by_name_.find(name.substr(1));
      if (it != by_name_.end() && it->second.kind == Sym::Open)
        return close_sym(it->second.base);
      return std::nullopt;
    }
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  std::string name(Sym s) const {
    switch (s.kind) {
      case Sym::Open: return bases_.at(s.base);
      case Sym::Close: return "~" + bases_.at(s.base);
      case Sym::Handler: return handlers_.at(s.base);
      case Sym::Hash: return "#";
      case Sym::BarHash: return "~#";
    }
    return "?";
  }

  std::string format(const Word& w) const {
    std::string out;
    for (size_t i = 0; i < w.size(); ++i) {
      if (i) out += ' ';
      out += name(w[i]);
    }
    return out;
  }

 private:
  static void check_name(const std::string& n) {
    if (n.empty() || n[0] == '~' || n == "#")
      throw std::invalid_argument("reserved or empty symbol name: " + n);
  }
  std::vector<std::string> bases_;
  std::vector<std::string> handlers_;
  std::map<std::string, Sym> by_name_;
};

}  // namespace dyckref

template <>
struct std::hash<dyckref::Sym> {
  size_t operator()(const dyckref::Sym& s) const noexcept {
    return std::hash<uint32_t>{}(s.pack());
  }
};

#endif
