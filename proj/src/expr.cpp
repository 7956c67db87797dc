#include "harnack/expr.hpp"

#include <algorithm>
#include <sstream>

namespace harnack {

// ---------------------------------------------------------------------------
// SymbolDecl
// ---------------------------------------------------------------------------

namespace {

std::vector<int> compose(const std::vector<int>& a, const std::vector<int>& b) {
  // (a ∘ b)[i] = b[a[i]]: apply a, then b.
  std::vector<int> r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = b[a[i]];
  return r;
}

}  // namespace

SymbolDecl::SymbolDecl(std::string name, std::vector<IndexClass> slots,
                       std::vector<SymmetryElem> generators)
    : name_(std::move(name)), slots_(std::move(slots)) {
  for (auto c : slots_)
    if (c == IndexClass::Label) ++label_slots_;

  const int k = arity();
  std::vector<int> id(k);
  for (int i = 0; i < k; ++i) id[i] = i;
  std::map<std::vector<int>, int> seen;
  seen[id] = 1;
  std::vector<SymmetryElem> frontier{{id, 1}};
  group_ = frontier;
  while (!frontier.empty()) {
    std::vector<SymmetryElem> next;
    for (const auto& e : frontier) {
      for (const auto& g : generators) {
        SymmetryElem ne{compose(e.perm, g.perm), e.sign * g.sign};
        auto it = seen.find(ne.perm);
        if (it == seen.end()) {
          seen[ne.perm] = ne.sign;
          group_.push_back(ne);
          next.push_back(ne);
        } else if (it->second != ne.sign) {
          throw ExprError("symbol " + name_ +
                          ": symmetry generators force the symbol to vanish");
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(group_.begin(), group_.end(),
            [](const SymmetryElem& a, const SymmetryElem& b) {
              return a.perm < b.perm;
            });
}

bool SymbolDecl::pair_antisymmetric(int i, int j) const {
  for (const auto& e : group_) {
    if (e.sign != -1) continue;
    bool transposes = e.perm[i] == j && e.perm[j] == i;
    if (!transposes) continue;
    bool fixes_rest = true;
    for (int s = 0; s < arity(); ++s)
      if (s != i && s != j && e.perm[s] != s) fixes_rest = false;
    if (fixes_rest) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// SymbolTable
// ---------------------------------------------------------------------------

namespace {
constexpr IndexClass F = IndexClass::Frame;
constexpr IndexClass L = IndexClass::Label;
}  // namespace

SymbolTable::SymbolTable() {
  auto add = [this](const std::string& name, std::vector<IndexClass> slots,
                    std::vector<SymmetryElem> gens) {
    auto key = std::make_pair(name, static_cast<int>(slots.size()));
    auto [it, ok] =
        decls_.emplace(key, SymbolDecl(name, std::move(slots), std::move(gens)));
    (void)ok;
    order_.push_back(&it->second);
  };

  SymmetryElem sym2{{1, 0}, 1};
  SymmetryElem anti2{{1, 0}, -1};
  SymmetryElem anti12_4{{1, 0, 2, 3}, -1};
  SymmetryElem anti34_4{{0, 1, 3, 2}, -1};
  SymmetryElem pairex{{2, 3, 0, 1}, 1};
  SymmetryElem badc{{1, 0, 3, 2}, 1};

  add("g", {F, F}, {sym2});
  add("R", {F, F, F, F}, {anti12_4, anti34_4, pairex});  // Riemann
  add("R", {}, {});                                      // scalar curvature
  add("Rc", {F, F}, {sym2});
  add("P", {F, F, F}, {{{1, 0, 2}, -1}});
  add("M", {F, F}, {sym2});
  add("S", {F, F, F, F}, {anti12_4, anti34_4, pairex});
  add("I", {F, F, F, F}, {anti12_4, anti34_4, pairex});
  add("B", {F, F, F, F}, {pairex, badc});
  add("U", {F, F}, {anti2});
  add("W", {F}, {});
  add("V", {F}, {});
  add("Y", {L, F, F}, {{{0, 2, 1}, -1}});
  add("X", {L, F}, {});
  add("E", {F, F, F}, {{{1, 0, 2}, -1}});
  add("Z", {F, F}, {sym2});
  add("K", {F, F, F, F}, {{{0, 1, 3, 2}, -1}});
  add("L", {L, L, F}, {{{1, 0, 2}, -1}});
}

const SymbolTable& SymbolTable::builtin() {
  static SymbolTable table;
  return table;
}

const SymbolDecl* SymbolTable::find(const std::string& name, int arity) const {
  auto it = decls_.find({name, arity});
  return it == decls_.end() ? nullptr : &it->second;
}

const SymbolDecl* SymbolTable::get(const std::string& name, int arity) const {
  const SymbolDecl* d = find(name, arity);
  if (!d)
    throw ExprError("unknown symbol " + name + " with " +
                    std::to_string(arity) + " indices");
  return d;
}

Factor make_factor(const SymbolDecl* sym, std::vector<Index> slots) {
  Factor f;
  f.sym = sym;
  f.slots = std::move(slots);
  if (static_cast<int>(f.slots.size()) != sym->arity())
    throw ExprError("arity mismatch for symbol " + sym->name());
  return f;
}

// ---------------------------------------------------------------------------
// Structural helpers
// ---------------------------------------------------------------------------

void collect_indices(const Factor& f, std::vector<Index>& out) {
  for (const auto& p : f.prefixes) out.push_back(p);
  if (f.is_group()) {
    if (f.gop == Factor::GroupOp::Grad && f.gindex) out.push_back(*f.gindex);
    for (const auto& g : f.inner) collect_indices(g, out);
  } else {
    for (const auto& s : f.slots) out.push_back(s);
  }
}

void collect_indices(const Term& t, std::vector<Index>& out) {
  for (const auto& f : t.factors) collect_indices(f, out);
}

std::map<Index, int> index_occurrences(const Term& t) {
  std::vector<Index> all;
  collect_indices(t, all);
  std::map<Index, int> counts;
  std::map<std::string, std::set<IndexClass>> classes;
  for (const auto& i : all) {
    ++counts[i];
    classes[i.name].insert(i.cls);
  }
  for (const auto& [name, cls] : classes)
    if (cls.size() > 1)
      throw ExprError("index " + name + " used in both frame and label slots");
  for (const auto& [idx, c] : counts)
    if (c > 2)
      throw ExprError("index " + idx.name + " appears " + std::to_string(c) +
                      " times in one term");
  return counts;
}

std::set<Index> free_indices(const Term& t) {
  std::set<Index> frees;
  for (const auto& [idx, c] : index_occurrences(t))
    if (c == 1) frees.insert(idx);
  return frees;
}

void validate(const TensorExpr& e) {
  std::optional<std::set<Index>> frees;
  for (const auto& t : e.terms) {
    auto f = free_indices(t);
    if (!frees)
      frees = f;
    else if (*frees != f)
      throw ExprError("terms disagree on their free-index set");
  }
}

std::set<Index> free_indices(const TensorExpr& e) {
  if (e.terms.empty()) return {};
  return free_indices(e.terms.front());
}

TensorExpr operator+(const TensorExpr& a, const TensorExpr& b) {
  TensorExpr r = a;
  r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
  return r;
}

TensorExpr operator-(const TensorExpr& a, const TensorExpr& b) {
  TensorExpr r = a;
  for (Term t : b.terms) {
    t.coef = -t.coef;
    r.terms.push_back(std::move(t));
  }
  return r;
}

TensorExpr operator*(const Rational& c, const TensorExpr& e) {
  TensorExpr r;
  if (c.is_zero()) return r;
  r = e;
  for (auto& t : r.terms) t.coef = t.coef * c;
  return r;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

void print_factor(std::ostream& os, const Factor& f);

void print_inner_product(std::ostream& os, const std::vector<Factor>& fs) {
  for (size_t i = 0; i < fs.size(); ++i) {
    if (i) os << "*";
    print_factor(os, fs[i]);
  }
}

void print_factor(std::ostream& os, const Factor& f) {
  for (const auto& p : f.prefixes) os << "grad[" << p.name << "](";
  if (f.is_group()) {
    if (f.gop == Factor::GroupOp::Heat) {
      os << "heat(";
      print_inner_product(os, f.inner);
      os << ")";
    } else {
      os << "grad[" << f.gindex->name << "](";
      print_inner_product(os, f.inner);
      os << ")";
    }
  } else {
    if (f.heat) os << "heat(";
    os << f.sym->name();
    if (f.sym->arity() > 0) {
      os << "[";
      int nl = f.sym->label_slots();
      for (int i = 0; i < f.sym->arity(); ++i) {
        if (i) os << (i == nl ? "; " : ",");
        if (i == nl && nl == 0) os << "";
        os << f.slots[i].name;
      }
      os << "]";
    }
    if (f.heat) os << ")";
  }
  for (size_t i = 0; i < f.prefixes.size(); ++i) os << ")";
}

}  // namespace

std::string to_string(const Factor& f) {
  std::ostringstream os;
  print_factor(os, f);
  return os.str();
}

std::string to_string(const Term& t, bool leading_sign) {
  std::ostringstream os;
  Rational c = t.coef;
  if (c.num() < 0) {
    os << "- ";
    c = -c;
  } else if (leading_sign) {
    os << "+ ";
  }
  bool printed = false;
  if (!c.is_one() || (t.factors.empty() && t.tpow == 0)) {
    os << c.str();
    printed = true;
  }
  if (t.tpow != 0) {
    if (printed) os << "*";
    os << "t^" << t.tpow;
    printed = true;
  }
  // Label dummies are summed explicitly in the DSL.
  std::vector<std::string> labels;
  std::map<Index, int> occ;
  {
    std::vector<Index> all;
    collect_indices(t, all);
    for (const auto& i : all) ++occ[i];
  }
  for (const auto& [idx, c2] : occ)
    if (c2 == 2 && idx.cls == IndexClass::Label) labels.push_back(idx.name);
  if (printed && !t.factors.empty()) os << "*";
  if (!labels.empty()) {
    os << "sum[";
    for (size_t i = 0; i < labels.size(); ++i) {
      if (i) os << ",";
      os << labels[i];
    }
    os << "](";
  }
  for (size_t i = 0; i < t.factors.size(); ++i) {
    if (i) os << "*";
    print_factor(os, t.factors[i]);
  }
  if (!labels.empty()) os << ")";
  return os.str();
}

std::string to_string(const TensorExpr& e) {
  if (e.terms.empty()) return "0";
  std::ostringstream os;
  for (size_t i = 0; i < e.terms.size(); ++i) {
    if (i) os << " ";
    os << to_string(e.terms[i], i > 0);
  }
  return os.str();
}

}  // namespace harnack
