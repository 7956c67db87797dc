#pragma once

#include <string>

#include "harnack/expr.hpp"

namespace harnack {

struct CanonTerm {
  bool zero = false;
  std::string key;   // merge key; excludes coefficient and t-power
  int sign = 1;      // sign picked up while reaching the minimal image
  Term term;         // materialized representative (unit coefficient sign applied by caller)
};

// Minimal representative of a term over (slot-symmetry group of each factor)
// x (dummy relabelings) x (factor reordering), under a fixed total order.
// Detects terms that vanish by symmetry (both signs reach the minimum).
// Terms containing transient heat/grad groups are keyed structurally and
// never merged across distinct shapes.
CanonTerm canonicalize_term(const Term& t);

// Canonical form of an expression: every term replaced by its minimal
// representative, like terms merged, zero terms dropped, deterministic order.
TensorExpr canonicalize(const TensorExpr& e);

// true iff canonicalize(a - b) vanishes. Throws ExprError when the free-index
// sets differ (a zero side matches anything).
bool equal_canonical(const TensorExpr& a, const TensorExpr& b);

}  // namespace harnack
