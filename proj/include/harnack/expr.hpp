#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "harnack/rational.hpp"

namespace harnack {

// ---------------------------------------------------------------------------
// Indices
// ---------------------------------------------------------------------------

// Frame indices range over 1..n in an orthonormal frame; labels range over
// the frame-decomposition set 1..m. Contraction is plain repeated-index
// summation; there is no raised/lowered distinction.
enum class IndexClass { Frame, Label };

struct Index {
  std::string name;
  IndexClass cls = IndexClass::Frame;

  friend bool operator==(const Index& a, const Index& b) {
    return a.name == b.name && a.cls == b.cls;
  }
  friend bool operator<(const Index& a, const Index& b) {
    if (a.name != b.name) return a.name < b.name;
    return a.cls < b.cls;
  }
};

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

// A slot permutation together with a sign; applying `perm` to the slots of a
// factor and multiplying by `sign` leaves the value unchanged.
struct SymmetryElem {
  std::vector<int> perm;  // image[i] = slot that moves INTO position i
  int sign = 1;
};

class SymbolDecl {
 public:
  SymbolDecl(std::string name, std::vector<IndexClass> slots,
             std::vector<SymmetryElem> generators);

  const std::string& name() const { return name_; }
  int arity() const { return static_cast<int>(slots_.size()); }
  int label_slots() const { return label_slots_; }
  const std::vector<IndexClass>& slots() const { return slots_; }

  // Full group closure of the declared generators (identity included).
  const std::vector<SymmetryElem>& group() const { return group_; }

  // True when transposing slots i and j flips the sign (used as the
  // antisymmetric-pair side condition of the identity-on-2-forms rule).
  bool pair_antisymmetric(int i, int j) const;

 private:
  std::string name_;
  std::vector<IndexClass> slots_;
  int label_slots_ = 0;
  std::vector<SymmetryElem> group_;
};

// The built-in catalog: g, R (Riemann and scalar), Rc, P, M, S, I, B, U, W,
// V, Y, X, E, Z, K, L. Looked up by DSL name and arity.
class SymbolTable {
 public:
  static const SymbolTable& builtin();

  // nullptr when no symbol of this name/arity exists.
  const SymbolDecl* find(const std::string& name, int arity) const;
  const SymbolDecl* get(const std::string& name, int arity) const;
  const std::vector<const SymbolDecl*>& all() const { return order_; }

 private:
  SymbolTable();
  std::map<std::pair<std::string, int>, SymbolDecl> decls_;
  std::vector<const SymbolDecl*> order_;
};

// ---------------------------------------------------------------------------
// Factors, terms, expressions
// ---------------------------------------------------------------------------

// One multiplicand of a term: either an ordinary indexed symbol carrying
// covariant-derivative prefixes (outermost first) and an optional heat flag,
// or a transient group (heat/grad applied to a product) that a Leibniz
// expansion removes.
struct Factor {
  enum class GroupOp { None, Heat, Grad };

  const SymbolDecl* sym = nullptr;  // null iff this is a group factor
  std::vector<Index> prefixes;      // grad indices, outermost first
  std::vector<Index> slots;
  bool heat = false;

  GroupOp gop = GroupOp::None;
  std::optional<Index> gindex;  // grad index for GroupOp::Grad
  std::vector<Factor> inner;    // the grouped product

  bool is_group() const { return gop != GroupOp::None; }
};

Factor make_factor(const SymbolDecl* sym, std::vector<Index> slots);

struct Term {
  Rational coef = Rational(1);
  int tpow = 0;  // exponent of the formal positive scalar t
  std::vector<Factor> factors;
};

struct TensorExpr {
  std::vector<Term> terms;

  bool is_zero() const { return terms.empty(); }
};

// ---------------------------------------------------------------------------
// Structural helpers
// ---------------------------------------------------------------------------

// All index occurrences of a factor (prefixes, slots, recursively for
// groups), appended to `out`.
void collect_indices(const Factor& f, std::vector<Index>& out);
void collect_indices(const Term& t, std::vector<Index>& out);

// Occurrence count per index of a term. Well-formed terms have counts of
// exactly 1 (free) or 2 (dummy).
std::map<Index, int> index_occurrences(const Term& t);

// Throws ExprError when a term has an index appearing 3+ times or a
// mixed-class pairing, or when terms disagree on their free-index set.
void validate(const TensorExpr& e);

// The shared free-index set. Empty expressions act as a wildcard.
std::set<Index> free_indices(const TensorExpr& e);
std::set<Index> free_indices(const Term& t);

TensorExpr operator+(const TensorExpr& a, const TensorExpr& b);
TensorExpr operator-(const TensorExpr& a, const TensorExpr& b);
TensorExpr operator*(const Rational& c, const TensorExpr& e);

// Deterministic SYM-style rendering, parseable by the DSL parser.
std::string to_string(const Factor& f);
std::string to_string(const Term& t, bool leading_sign = false);
std::string to_string(const TensorExpr& e);

struct ExprError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace harnack
