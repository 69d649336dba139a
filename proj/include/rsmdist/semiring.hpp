#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsmdist {

enum class SemiringKind : std::uint8_t { boolean, tropical, genkill };

/// A single semiring element. The interpretation of the payload words
/// depends on the kind:
///   boolean:  a = 0 or 1
///   tropical: a = cost, kInfinityCost meaning +infinity
///   genkill:  a = kill bitset, b = gen bitset over the fact universe;
///             a == b == ~0 encodes the annihilating bottom element
struct Weight {
  SemiringKind kind = SemiringKind::boolean;
  std::uint64_t a = 0;
  std::uint64_t b = 0;

  friend bool operator==(const Weight&, const Weight&) = default;
};

inline constexpr std::uint64_t kInfinityCost = ~std::uint64_t{0};

/// Thrown when a saturation loop exceeds its relaxation cap.
struct NonTerminationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a precomputation exceeds its configured budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when the reference evaluator cannot certify a stable answer.
struct InconclusiveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Value-level description of an idempotent semiring instance. One of the
/// three built-in kinds, selected per analysis at run time.
///
/// combine is the path-choice operation (idempotent, commutative), extend
/// accumulates along a path. The canonical order is a <= b iff a (+) b == a.
/// Values are immutable; all operations are pure.
class Semiring {
 public:
  static Semiring boolean() { return Semiring(SemiringKind::boolean); }

  // Costs at or above `ceiling` saturate to +infinity, which keeps the
  // represented domain a legal semiring without integer overflow.
  static Semiring tropical(std::uint64_t ceiling = kDefaultCeiling) {
    Semiring s(SemiringKind::tropical);
    if (ceiling == 0) throw std::invalid_argument("tropical ceiling must be positive");
    s.ceiling_ = ceiling;
    return s;
  }

  static Semiring genkill(std::vector<std::string> universe) {
    if (universe.empty() || universe.size() > 64)
      throw std::invalid_argument("genkill universe must have 1..64 facts");
    for (std::size_t i = 0; i < universe.size(); ++i)
      for (std::size_t j = i + 1; j < universe.size(); ++j)
        if (universe[i] == universe[j])
          throw std::invalid_argument("duplicate fact in genkill universe: " + universe[i]);
    Semiring s(SemiringKind::genkill);
    s.universe_ = std::move(universe);
    s.mask_ = s.universe_.size() == 64 ? ~std::uint64_t{0}
                                       : (std::uint64_t{1} << s.universe_.size()) - 1;
    return s;
  }

  /// Parses "boolean", "tropical", or "genkill:<fact>,<fact>,...".
  static Semiring parse(const std::string& name) {
    if (name == "boolean") return boolean();
    if (name == "tropical") return tropical();
    if (name.rfind("genkill:", 0) == 0) {
      std::vector<std::string> facts;
      std::string rest = name.substr(8);
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        std::size_t comma = rest.find(',', pos);
        if (comma == std::string::npos) comma = rest.size();
        std::string fact = rest.substr(pos, comma - pos);
        if (fact.empty()) throw std::invalid_argument("empty fact name in: " + name);
        facts.push_back(std::move(fact));
        pos = comma + 1;
      }
      return genkill(std::move(facts));
    }
    throw std::invalid_argument("unknown semiring: " + name);
  }

  std::string name() const {
    switch (kind_) {
      case SemiringKind::boolean: return "boolean";
      case SemiringKind::tropical: return "tropical";
      case SemiringKind::genkill: {
        std::string s = "genkill:";
        for (std::size_t i = 0; i < universe_.size(); ++i) {
          if (i) s += ',';
          s += universe_[i];
        }
        return s;
      }
    }
    return {};
  }

  SemiringKind kind() const { return kind_; }
  const std::vector<std::string>& universe() const { return universe_; }
  std::uint64_t ceiling() const { return ceiling_; }

  /// Declared bound on the number of strict descents any chain can take;
  /// absent means only the descending-chain condition is assumed.
  std::optional<std::uint64_t> height_bound() const {
    switch (kind_) {
      case SemiringKind::boolean: return 2;
      case SemiringKind::tropical: return std::nullopt;
      case SemiringKind::genkill: return 2 * universe_.size() + 1;
    }
    return std::nullopt;
  }

  Weight zero() const {
    switch (kind_) {
      case SemiringKind::boolean: return {kind_, 0, 0};
      case SemiringKind::tropical: return {kind_, kInfinityCost, 0};
      case SemiringKind::genkill: return {kind_, ~std::uint64_t{0}, ~std::uint64_t{0}};
    }
    return {};
  }

  Weight one() const {
    switch (kind_) {
      case SemiringKind::boolean: return {kind_, 1, 0};
      case SemiringKind::tropical: return {kind_, 0, 0};
      case SemiringKind::genkill: return {kind_, 0, 0};
    }
    return {};
  }

  Weight combine(const Weight& x, const Weight& y) const {
    check(x);
    check(y);
    switch (kind_) {
      case SemiringKind::boolean:
        return {kind_, x.a | y.a, 0};
      case SemiringKind::tropical:
        return {kind_, x.a < y.a ? x.a : y.a, 0};
      case SemiringKind::genkill:
        if (is_bottom(x)) return y;
        if (is_bottom(y)) return x;
        return {kind_, x.a & y.a, x.b | y.b};
    }
    return {};
  }

  /// x (x) y: first x, then y along the path.
  Weight extend(const Weight& x, const Weight& y) const {
    check(x);
    check(y);
    switch (kind_) {
      case SemiringKind::boolean:
        return {kind_, x.a & y.a, 0};
      case SemiringKind::tropical: {
        if (x.a == kInfinityCost || y.a == kInfinityCost) return zero();
        std::uint64_t sum = x.a + y.a;  // both < ceiling_, no overflow
        return {kind_, sum >= ceiling_ ? kInfinityCost : sum, 0};
      }
      case SemiringKind::genkill: {
        if (is_bottom(x) || is_bottom(y)) return zero();
        std::uint64_t gen = (x.b & ~y.a) | y.b;
        std::uint64_t kill = (x.a | y.a) & ~gen;  // canonical: gen and kill disjoint
        return {kind_, kill, gen};
      }
    }
    return {};
  }

  bool leq(const Weight& x, const Weight& y) const { return combine(x, y) == x; }

  bool is_zero(const Weight& w) const { return w == zero(); }
  bool is_one(const Weight& w) const { return w == one(); }

  Weight from_bool(bool v) const {
    require_kind(SemiringKind::boolean);
    return {kind_, v ? std::uint64_t{1} : 0, 0};
  }

  Weight from_cost(std::uint64_t c) const {
    require_kind(SemiringKind::tropical);
    return {kind_, c >= ceiling_ ? kInfinityCost : c, 0};
  }

  Weight infinity() const {
    require_kind(SemiringKind::tropical);
    return {kind_, kInfinityCost, 0};
  }

  /// Builds the transfer function X -> (X \ kill) u gen, canonicalized so
  /// that gen and kill are disjoint.
  Weight transfer(const std::vector<std::string>& kill,
                  const std::vector<std::string>& gen) const {
    require_kind(SemiringKind::genkill);
    return transfer_bits(facts_to_bits(kill), facts_to_bits(gen));
  }

  Weight transfer_bits(std::uint64_t kill, std::uint64_t gen) const {
    require_kind(SemiringKind::genkill);
    if ((kill | gen) & ~mask_) throw std::invalid_argument("fact bits outside universe");
    return {kind_, kill & ~gen, gen};
  }

  bool is_bottom(const Weight& w) const {
    return kind_ == SemiringKind::genkill && w.a == ~std::uint64_t{0} &&
           w.b == ~std::uint64_t{0};
  }

  /// Applies a genkill transfer function to a fact set (used by tests to
  /// evaluate functions pointwise).
  std::uint64_t apply_transfer(const Weight& w, std::uint64_t facts) const {
    require_kind(SemiringKind::genkill);
    check(w);
    if (is_bottom(w)) throw std::invalid_argument("cannot apply bottom");
    return (facts & ~w.a) | w.b;
  }

  int fact_index(const std::string& fact) const {
    require_kind(SemiringKind::genkill);
    for (std::size_t i = 0; i < universe_.size(); ++i)
      if (universe_[i] == fact) return static_cast<int>(i);
    throw std::invalid_argument("unknown fact: " + fact);
  }

  std::uint64_t facts_to_bits(const std::vector<std::string>& facts) const {
    std::uint64_t bits = 0;
    for (const auto& f : facts) bits |= std::uint64_t{1} << fact_index(f);
    return bits;
  }

  std::string to_string(const Weight& w) const {
    check(w);
    switch (kind_) {
      case SemiringKind::boolean:
        return w.a ? "true" : "false";
      case SemiringKind::tropical:
        return w.a == kInfinityCost ? "inf" : std::to_string(w.a);
      case SemiringKind::genkill: {
        if (is_bottom(w)) return "bot";
        std::ostringstream out;
        out << "kill={" << bits_to_list(w.a) << "} gen={" << bits_to_list(w.b) << "}";
        return out.str();
      }
    }
    return {};
  }

 private:
  static constexpr std::uint64_t kDefaultCeiling = std::uint64_t{1} << 40;

  explicit Semiring(SemiringKind kind) : kind_(kind) {}

  void require_kind(SemiringKind k) const {
    if (kind_ != k) throw std::invalid_argument("operation requires a different semiring kind");
  }

  void check(const Weight& w) const {
    if (w.kind != kind_) throw std::invalid_argument("semiring instance mismatch");
    if (kind_ == SemiringKind::genkill && !is_bottom(w) && ((w.a | w.b) & ~mask_))
      throw std::invalid_argument("genkill universe mismatch");
  }

  std::string bits_to_list(std::uint64_t bits) const {
    std::string s;
    for (std::size_t i = 0; i < universe_.size(); ++i) {
      if (!(bits >> i & 1)) continue;
      if (!s.empty()) s += ',';
      s += universe_[i];
    }
    return s;
  }

  SemiringKind kind_;
  std::uint64_t ceiling_ = kDefaultCeiling;
  std::vector<std::string> universe_;
  std::uint64_t mask_ = 0;
};

/// A semiring given as explicit values and operations, the form the law
/// checker consumes. Deliberately open so tests can describe broken
/// instances as well.
struct SemiringOps {
  Weight zero;
  Weight one;
  std::function<Weight(const Weight&, const Weight&)> combine;
  std::function<Weight(const Weight&, const Weight&)> extend;
  std::optional<std::uint64_t> height_bound;
};

inline SemiringOps make_ops(const Semiring& s) {
  return SemiringOps{
      s.zero(), s.one(),
      [s](const Weight& a, const Weight& b) { return s.combine(a, b); },
      [s](const Weight& a, const Weight& b) { return s.extend(a, b); },
      s.height_bound()};
}

struct LawViolation {
  std::string law;
  std::vector<Weight> witness;
};

struct LawReport {
  std::vector<std::string> laws_checked;
  std::vector<LawViolation> violations;
  bool ok() const { return violations.empty(); }
  bool law_failed(const std::string& law) const {
    for (const auto& v : violations)
      if (v.law == law) return true;
    return false;
  }
};

/// Checks every semiring axiom plus monotonicity of the canonical order on
/// all pairs/triples drawn from `samples`.
inline LawReport verify_semiring_laws(const SemiringOps& ops,
                                      const std::vector<Weight>& samples) {
  if (samples.empty()) throw std::invalid_argument("law check needs samples");
  LawReport report;
  auto fail = [&report](const std::string& law, std::vector<Weight> witness) {
    if (!report.law_failed(law)) report.violations.push_back({law, std::move(witness)});
  };
  auto leq = [&ops](const Weight& x, const Weight& y) { return ops.combine(x, y) == x; };

  report.laws_checked = {
      "combine-associative", "combine-commutative", "combine-idempotent",
      "zero-neutral",        "extend-associative",  "one-neutral",
      "zero-annihilates",    "distributive-left",   "distributive-right",
      "monotone-combine",    "monotone-extend"};

  for (const Weight& a : samples) {
    if (ops.combine(a, a) != a) fail("combine-idempotent", {a});
    if (ops.combine(a, ops.zero) != a || ops.combine(ops.zero, a) != a)
      fail("zero-neutral", {a});
    if (ops.extend(a, ops.one) != a || ops.extend(ops.one, a) != a)
      fail("one-neutral", {a});
    if (ops.extend(a, ops.zero) != ops.zero || ops.extend(ops.zero, a) != ops.zero)
      fail("zero-annihilates", {a});
    for (const Weight& b : samples) {
      if (ops.combine(a, b) != ops.combine(b, a)) fail("combine-commutative", {a, b});
      for (const Weight& c : samples) {
        if (ops.combine(ops.combine(a, b), c) != ops.combine(a, ops.combine(b, c)))
          fail("combine-associative", {a, b, c});
        if (ops.extend(ops.extend(a, b), c) != ops.extend(a, ops.extend(b, c)))
          fail("extend-associative", {a, b, c});
        if (ops.extend(a, ops.combine(b, c)) !=
            ops.combine(ops.extend(a, b), ops.extend(a, c)))
          fail("distributive-left", {a, b, c});
        if (ops.extend(ops.combine(b, c), a) !=
            ops.combine(ops.extend(b, a), ops.extend(c, a)))
          fail("distributive-right", {a, b, c});
        if (leq(a, b)) {
          if (!leq(ops.combine(a, c), ops.combine(b, c))) fail("monotone-combine", {a, b, c});
          if (!leq(ops.extend(a, c), ops.extend(b, c)) ||
              !leq(ops.extend(c, a), ops.extend(c, b)))
            fail("monotone-extend", {a, b, c});
        }
      }
    }
  }
  return report;
}

}  // namespace rsmdist
