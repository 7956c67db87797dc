#pragma once

#include <map>
#include <string>

#include "harnack/expr.hpp"

namespace harnack {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Named expressions usable as `$name` inside a parsed expression; spliced
// terms get fresh dummy names.
using ExprEnv = std::map<std::string, TensorExpr>;

// Parses the derivation DSL:
//   Name[i1,...,ik]      indexed symbol; labels before a semicolon: Y[N; a,b]
//   grad[v](...)         covariant derivative
//   heat(...)            the (d/dt - laplacian) operator
//   sum[N,M](...)        explicit label sums
//   p/q, t^-1, + - *     rationals, t-powers, arithmetic (* binds tighter)
//   # line comments; whitespace-insensitive.
// grad and heat distribute over sums at parse; applied to products they
// produce transient group factors that LEIB-GRAD / LEIB-HEAT expand. heat
// applied to an explicit t-power also emits the d/dt product-rule term.
TensorExpr parse_expr(const std::string& text, const ExprEnv& env = {});

}  // namespace harnack
