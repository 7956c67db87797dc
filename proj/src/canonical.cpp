#include "harnack/canonical.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace harnack {

namespace {

// One symmetry image of a factor: its full index list (prefixes then slots)
// after applying a slot permutation (and, for scalar-curvature factors, an
// optional swap of the two innermost derivatives), with the image sign.
struct FactorImage {
  std::vector<Index> indices;  // prefixes..., slots...
  int sign = 1;
};

struct FactorInfo {
  std::string header;  // symbol name + arity + heat + prefix count
  int nprefix = 0;
  const SymbolDecl* sym = nullptr;
  bool heat = false;
  std::vector<FactorImage> images;
};

std::string make_header(const Factor& f) {
  std::ostringstream os;
  os << f.sym->name() << '\x01' << f.sym->arity() << '\x01'
     << (f.heat ? 'h' : '.') << '\x01' << f.prefixes.size();
  return os.str();
}

FactorInfo factor_info(const Factor& f) {
  FactorInfo info;
  info.sym = f.sym;
  info.heat = f.heat;
  info.nprefix = static_cast<int>(f.prefixes.size());
  info.header = make_header(f);

  std::vector<std::vector<Index>> prefix_variants{f.prefixes};
  // Covariant derivatives commute on scalars; only the hessian of R is ever
  // formed, so the swap is restricted to the two innermost prefixes.
  if (f.sym->arity() == 0 && f.sym->name() == "R" && f.prefixes.size() >= 2) {
    auto swapped = f.prefixes;
    std::swap(swapped[swapped.size() - 1], swapped[swapped.size() - 2]);
    if (swapped != f.prefixes) prefix_variants.push_back(swapped);
  }

  for (const auto& pre : prefix_variants) {
    for (const auto& g : f.sym->group()) {
      FactorImage img;
      img.sign = g.sign;
      img.indices = pre;
      for (int i = 0; i < f.sym->arity(); ++i)
        img.indices.push_back(f.slots[g.perm[i]]);
      info.images.push_back(std::move(img));
    }
  }
  return info;
}

// Index tokens: committed dummies sort before free names; tentative dummies
// receive consecutive numbers so comparisons between candidates at the same
// search depth are consistent.
std::string dummy_token(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "d%04d", id);
  return buf;
}

struct Candidate {
  int factor = -1;
  int image = -1;
  std::vector<std::string> tokens;
  int sign = 1;
  std::vector<std::pair<Index, int>> new_renames;
};

struct SearchState {
  const std::vector<FactorInfo>* infos = nullptr;
  const std::map<Index, int>* occurrences = nullptr;

  std::vector<std::string> best_word;
  bool have_best = false;
  bool best_pos = false, best_neg = false;
  std::vector<std::pair<int, int>> best_placement;  // (factor, image)
};

int compare_words(const std::vector<std::string>& a,
                  const std::vector<std::string>& b, size_t limit) {
  size_t m = std::min({a.size(), b.size(), limit});
  for (size_t i = 0; i < m; ++i) {
    if (a[i] < b[i]) return -1;
    if (a[i] > b[i]) return 1;
  }
  if (limit <= a.size() && limit <= b.size()) return 0;
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

void dfs(SearchState& st, std::vector<int>& remaining,
         std::map<Index, int>& renames, int next_dummy,
         std::vector<std::string>& word, int sign,
         std::vector<std::pair<int, int>>& placement) {
  if (st.have_best) {
    int c = compare_words(word, st.best_word, word.size());
    if (c > 0) return;  // prefix already worse
  }
  if (remaining.empty()) {
    if (!st.have_best || compare_words(word, st.best_word, SIZE_MAX) < 0) {
      st.have_best = true;
      st.best_word = word;
      st.best_pos = sign > 0;
      st.best_neg = sign < 0;
      st.best_placement = placement;
    } else if (compare_words(word, st.best_word, SIZE_MAX) == 0) {
      if (sign > 0)
        st.best_pos = true;
      else
        st.best_neg = true;
    }
    return;
  }

  // Project every (factor, image) pair under the current renaming and keep
  // the minimal extensions; ties are explored exhaustively.
  std::vector<Candidate> keep;
  for (int fi : remaining) {
    const FactorInfo& info = (*st.infos)[fi];
    for (size_t gi = 0; gi < info.images.size(); ++gi) {
      const FactorImage& img = info.images[gi];
      Candidate cand;
      cand.factor = fi;
      cand.image = static_cast<int>(gi);
      cand.sign = img.sign;
      cand.tokens.push_back(info.header);
      int local_next = next_dummy;
      std::map<Index, int> local;
      for (const auto& idx : img.indices) {
        bool is_dummy = st.occurrences->at(idx) == 2;
        if (!is_dummy) {
          cand.tokens.push_back("f" + idx.name);
          continue;
        }
        auto it = renames.find(idx);
        int id;
        if (it != renames.end()) {
          id = it->second;
        } else {
          auto lt = local.find(idx);
          if (lt != local.end()) {
            id = lt->second;
          } else {
            id = local_next++;
            local[idx] = id;
            cand.new_renames.emplace_back(idx, id);
          }
        }
        cand.tokens.push_back(dummy_token(id));
      }
      if (keep.empty()) {
        keep.push_back(std::move(cand));
        continue;
      }
      int c = compare_words(cand.tokens, keep.front().tokens, SIZE_MAX);
      if (c < 0) {
        keep.clear();
        keep.push_back(std::move(cand));
      } else if (c == 0) {
        // Equal projections may still commit different renamings of the
        // original dummies; only exact duplicates are dropped.
        bool dup = false;
        for (const auto& k : keep)
          if (k.factor == cand.factor && k.sign == cand.sign &&
              k.new_renames == cand.new_renames) {
            dup = true;
            break;
          }
        if (!dup) keep.push_back(std::move(cand));
      }
    }
  }

  for (const auto& cand : keep) {
    size_t word_mark = word.size();
    for (const auto& t : cand.tokens) word.push_back(t);
    for (const auto& [idx, id] : cand.new_renames) renames[idx] = id;
    remaining.erase(std::find(remaining.begin(), remaining.end(), cand.factor));
    placement.emplace_back(cand.factor, cand.image);

    dfs(st, remaining, renames, next_dummy + static_cast<int>(cand.new_renames.size()),
        word, sign * cand.sign, placement);

    placement.pop_back();
    remaining.push_back(cand.factor);
    std::sort(remaining.begin(), remaining.end());
    for (const auto& [idx, id] : cand.new_renames) renames.erase(idx);
    word.resize(word_mark);
  }
}

// Canonical dummy names, skipping anything that appears free in the term.
std::vector<std::string> dummy_names(int count, const std::set<Index>& frees) {
  std::set<std::string> taken;
  for (const auto& f : frees) taken.insert(f.name);
  std::vector<std::string> names;
  int k = 0;
  while (static_cast<int>(names.size()) < count) {
    std::string n = "_" + std::to_string(k++);
    if (!taken.count(n)) names.push_back(n);
  }
  return names;
}

void cheap_rename(Factor& f, std::map<Index, Index>& map,
                  const std::map<Index, int>& occ, int& next) {
  auto rename = [&](Index& idx) {
    if (occ.at(idx) != 2) return;
    auto it = map.find(idx);
    if (it == map.end()) {
      Index fresh{"_" + std::to_string(next++), idx.cls};
      it = map.emplace(idx, fresh).first;
    }
    idx = it->second;
  };
  for (auto& p : f.prefixes) rename(p);
  if (f.is_group()) {
    if (f.gindex) rename(*f.gindex);
    for (auto& g : f.inner) cheap_rename(g, map, occ, next);
  } else {
    for (auto& s : f.slots) rename(s);
  }
}

}  // namespace

CanonTerm canonicalize_term(const Term& t) {
  CanonTerm out;
  out.term = t;

  bool has_group = false;
  for (const auto& f : t.factors)
    if (f.is_group()) has_group = true;

  auto occ = index_occurrences(t);

  if (has_group) {
    // Transient Leibniz groups: first-occurrence dummy renaming only, keyed
    // by the structural print. Good enough to merge identical shapes.
    std::map<Index, Index> map;
    int next = 0;
    for (auto& f : out.term.factors) cheap_rename(f, map, occ, next);
    std::ostringstream os;
    for (const auto& f : out.term.factors) os << to_string(f) << '\x02';
    out.key = "G\x02" + os.str();
    return out;
  }

  std::vector<FactorInfo> infos;
  infos.reserve(t.factors.size());
  for (const auto& f : t.factors) infos.push_back(factor_info(f));

  SearchState st;
  st.infos = &infos;
  st.occurrences = &occ;
  std::vector<int> remaining(t.factors.size());
  for (size_t i = 0; i < remaining.size(); ++i) remaining[i] = static_cast<int>(i);
  std::map<Index, int> renames;
  std::vector<std::string> word;
  std::vector<std::pair<int, int>> placement;
  dfs(st, remaining, renames, 0, word, 1, placement);

  if (st.best_pos && st.best_neg) {
    out.zero = true;
    return out;
  }

  // Materialize the winning placement.
  std::set<Index> frees = free_indices(t);
  std::map<Index, int> final_renames;
  {
    int next = 0;
    std::map<Index, int> ren;
    std::vector<std::string> w;
    for (const auto& [fi, gi] : st.best_placement) {
      const FactorImage& img = infos[fi].images[gi];
      for (const auto& idx : img.indices) {
        if (occ.at(idx) != 2) continue;
        if (!ren.count(idx)) ren[idx] = next++;
      }
    }
    final_renames = ren;
  }
  auto names = dummy_names(static_cast<int>(final_renames.size()), frees);

  Term canon;
  canon.coef = t.coef;
  canon.tpow = t.tpow;
  int sign = 1;
  for (const auto& [fi, gi] : st.best_placement) {
    const FactorInfo& info = infos[fi];
    const FactorImage& img = info.images[gi];
    sign *= img.sign;
    Factor nf;
    nf.sym = info.sym;
    nf.heat = info.heat;
    for (size_t k = 0; k < img.indices.size(); ++k) {
      Index idx = img.indices[k];
      if (occ.at(idx) == 2) idx.name = names[final_renames.at(idx)];
      if (static_cast<int>(k) < info.nprefix)
        nf.prefixes.push_back(idx);
      else
        nf.slots.push_back(idx);
    }
    canon.factors.push_back(std::move(nf));
  }
  out.sign = sign;
  out.term = std::move(canon);
  {
    std::ostringstream os;
    for (const auto& tok : st.best_word) os << tok << '\x02';
    out.key = os.str();
  }
  return out;
}

TensorExpr canonicalize(const TensorExpr& e) {
  validate(e);
  struct Slot {
    Rational coef;
    Term rep;
  };
  std::map<std::pair<std::string, int>, Slot> merged;
  for (const auto& t : e.terms) {
    if (t.coef.is_zero()) continue;
    CanonTerm c = canonicalize_term(t);
    if (c.zero) continue;
    auto key = std::make_pair(c.key, t.tpow);
    auto it = merged.find(key);
    Rational add = t.coef * Rational(c.sign);
    if (it == merged.end()) {
      Term rep = c.term;
      rep.coef = Rational(1);
      merged.emplace(key, Slot{add, std::move(rep)});
    } else {
      it->second.coef = it->second.coef + add;
    }
  }
  TensorExpr out;
  for (auto& [key, slot] : merged) {
    if (slot.coef.is_zero()) continue;
    Term t = slot.rep;
    t.coef = slot.coef;
    t.tpow = key.second;
    out.terms.push_back(std::move(t));
  }
  return out;
}

bool equal_canonical(const TensorExpr& a, const TensorExpr& b) {
  if (!a.terms.empty() && !b.terms.empty() &&
      free_indices(a) != free_indices(b))
    throw ExprError("equal_canonical: free-index sets differ");
  return canonicalize(a - b).is_zero();
}

}  // namespace harnack
