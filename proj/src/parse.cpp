#include "harnack/parse.hpp"

#include <cctype>
#include <cstdint>
#include <set>
#include <sstream>
#include <vector>

namespace harnack {

namespace {

struct Token {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "parse error at line " << tok_.line << ", col " << tok_.col << ": "
       << msg;
    throw ParseError(os.str());
  }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
        continue;
      }
      break;
    }
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::End;
      tok_.text.clear();
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      size_t s = pos_;
      ++pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Ident;
      tok_.text = src_.substr(s, pos_ - s);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t s = pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
      tok_.kind = Token::Number;
      tok_.text = src_.substr(s, pos_ - s);
    } else {
      tok_.kind = Token::Punct;
      tok_.text = std::string(1, c);
      ++pos_;
    }
    col_ += static_cast<int>(tok_.text.size());
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

// A term plus the per-name count of label occurrences not yet bound by an
// enclosing sum[...]; the DSL requires label sums to be explicit.
struct PTerm {
  Term term;
  std::map<std::string, int> unbound_labels;
};
using PExpr = std::vector<PTerm>;

class Parser {
 public:
  Parser(const std::string& src, const ExprEnv& env) : lex_(src), env_(env) {}

  TensorExpr parse() {
    PExpr e = parse_sum();
    if (lex_.peek().kind != Token::End) lex_.fail("trailing input");
    TensorExpr out;
    for (auto& pt : e) {
      for (const auto& [name, cnt] : pt.unbound_labels)
        if (cnt >= 2)
          lex_.fail("label " + name +
                    " is summed without an explicit sum[...] wrapper");
      out.terms.push_back(std::move(pt.term));
    }
    validate(out);
    return out;
  }

 private:
  bool punct(const char* p) const {
    return lex_.peek().kind == Token::Punct && lex_.peek().text == p;
  }

  void expect(const char* p, const std::string& what) {
    if (!punct(p)) lex_.fail("expected '" + std::string(p) + "' " + what);
    lex_.next();
  }

  PExpr parse_sum() {
    PExpr acc;
    int sign = 1;
    if (punct("+")) {
      lex_.next();
    } else if (punct("-")) {
      sign = -1;
      lex_.next();
    }
    append(acc, parse_product(), sign);
    while (punct("+") || punct("-")) {
      sign = lex_.next().text == "-" ? -1 : 1;
      append(acc, parse_product(), sign);
    }
    return acc;
  }

  static void append(PExpr& acc, PExpr e, int sign) {
    for (auto& pt : e) {
      if (sign < 0) pt.term.coef = -pt.term.coef;
      acc.push_back(std::move(pt));
    }
  }

  PExpr parse_product() {
    PExpr acc = parse_factor();
    while (punct("*")) {
      lex_.next();
      acc = multiply(acc, parse_factor());
    }
    return acc;
  }

  PExpr multiply(const PExpr& a, const PExpr& b) {
    PExpr out;
    for (const auto& x : a) {
      for (const auto& y : b) {
        PTerm p;
        p.term.coef = x.term.coef * y.term.coef;
        p.term.tpow = x.term.tpow + y.term.tpow;
        p.term.factors = x.term.factors;
        p.term.factors.insert(p.term.factors.end(), y.term.factors.begin(),
                              y.term.factors.end());
        p.unbound_labels = x.unbound_labels;
        for (const auto& [n, c] : y.unbound_labels) p.unbound_labels[n] += c;
        out.push_back(std::move(p));
      }
    }
    return out;
  }

  PExpr parse_factor() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Number) return parse_rational();
    if (t.kind == Token::Punct && t.text == "(") {
      lex_.next();
      PExpr e = parse_sum();
      expect(")", "to close group");
      return e;
    }
    if (t.kind != Token::Ident) lex_.fail("expected a factor");
    if (t.text == "t") return parse_tpower();
    if (t.text == "grad") return parse_grad();
    if (t.text == "heat") return parse_heat();
    if (t.text == "sum") return parse_label_sum();
    if (t.text[0] == '$') return parse_reference();
    return parse_symbol();
  }

  PExpr parse_rational() {
    std::int64_t num = std::stoll(lex_.next().text);
    std::int64_t den = 1;
    if (punct("/")) {
      lex_.next();
      if (lex_.peek().kind != Token::Number) lex_.fail("expected denominator");
      den = std::stoll(lex_.next().text);
    }
    PTerm p;
    p.term.coef = Rational(num, den);
    return {p};
  }

  PExpr parse_tpower() {
    lex_.next();  // t
    int e = 1;
    if (punct("^")) {
      lex_.next();
      int sign = 1;
      if (punct("-")) {
        sign = -1;
        lex_.next();
      }
      if (lex_.peek().kind != Token::Number) lex_.fail("expected t exponent");
      e = sign * std::stoi(lex_.next().text);
    }
    PTerm p;
    p.term.tpow = e;
    return {p};
  }

  std::string parse_index_name() {
    if (lex_.peek().kind != Token::Ident || lex_.peek().text[0] == '$')
      lex_.fail("expected an index name");
    return lex_.next().text;
  }

  PExpr parse_grad() {
    lex_.next();
    expect("[", "after grad");
    Index v{parse_index_name(), IndexClass::Frame};
    expect("]", "after grad index");
    expect("(", "after grad[..]");
    PExpr inner = parse_sum();
    expect(")", "to close grad");

    PExpr out;
    for (auto& pt : inner) {
      if (pt.term.factors.empty()) continue;  // gradient of a constant
      PTerm np = pt;
      if (np.term.factors.size() == 1) {
        Factor& f = np.term.factors.front();
        if (f.heat) lex_.fail("grad applied to a heat factor");
        f.prefixes.insert(f.prefixes.begin(), v);
      } else {
        for (const auto& f : np.term.factors)
          if (f.is_group()) lex_.fail("nested operator groups");
        Factor g;
        g.gop = Factor::GroupOp::Grad;
        g.gindex = v;
        g.inner = std::move(np.term.factors);
        np.term.factors = {std::move(g)};
      }
      out.push_back(std::move(np));
    }
    return out;
  }

  static bool heat_rewritable(const SymbolDecl* sym) {
    const std::string& n = sym->name();
    return (n == "R" && sym->arity() == 4) || n == "Rc" || n == "P" ||
           n == "M" || n == "S";
  }

  PExpr parse_heat() {
    lex_.next();
    expect("(", "after heat");
    PExpr inner = parse_sum();
    expect(")", "to close heat");

    PExpr out;
    for (auto& pt : inner) {
      // d/dt acts on explicit t-powers.
      if (pt.term.tpow != 0) {
        PTerm dt = pt;
        dt.term.coef = dt.term.coef * Rational(pt.term.tpow);
        dt.term.tpow = pt.term.tpow - 1;
        out.push_back(std::move(dt));
      }
      if (pt.term.factors.empty()) continue;
      PTerm np = pt;
      if (np.term.factors.size() == 1) {
        Factor& f = np.term.factors.front();
        if (f.heat || f.is_group() || !f.prefixes.empty())
          lex_.fail("heat applied to an operator factor");
        if (!heat_rewritable(f.sym))
          lex_.fail("heat applied to " + f.sym->name() +
                    ", which no evolution rule rewrites");
        f.heat = true;
      } else {
        for (const auto& f : np.term.factors)
          if (f.is_group()) lex_.fail("nested operator groups");
        Factor g;
        g.gop = Factor::GroupOp::Heat;
        g.inner = std::move(np.term.factors);
        np.term.factors = {std::move(g)};
      }
      out.push_back(std::move(np));
    }
    return out;
  }

  PExpr parse_label_sum() {
    lex_.next();
    expect("[", "after sum");
    std::vector<std::string> labels;
    labels.push_back(parse_index_name());
    while (punct(",")) {
      lex_.next();
      labels.push_back(parse_index_name());
    }
    expect("]", "after sum labels");
    expect("(", "after sum[..]");
    PExpr inner = parse_sum();
    expect(")", "to close sum");
    for (auto& pt : inner) {
      for (const auto& l : labels) {
        auto it = pt.unbound_labels.find(l);
        int c = it == pt.unbound_labels.end() ? 0 : it->second;
        if (c != 2)
          lex_.fail("sum label " + l + " occurs " + std::to_string(c) +
                    " times (needs exactly 2)");
        pt.unbound_labels.erase(it);
      }
    }
    return inner;
  }

  PExpr parse_reference() {
    Token t = lex_.next();
    std::string name = t.text.substr(1);
    auto it = env_.find(name);
    if (it == env_.end()) lex_.fail("unknown expression reference $" + name);
    PExpr out;
    for (const Term& term : it->second.terms) {
      PTerm pt;
      pt.term = term;
      rename_spliced(pt.term);
      for (const auto& [idx, cnt] : index_occurrences(pt.term))
        if (cnt == 1 && idx.cls == IndexClass::Label)
          pt.unbound_labels[idx.name] += 1;
      out.push_back(std::move(pt));
    }
    return out;
  }

  // Dummies of spliced terms get fresh names so products with surrounding
  // factors cannot collide.
  void rename_spliced(Term& t) {
    auto occ = index_occurrences(t);
    std::map<Index, Index> map;
    for (const auto& [idx, cnt] : occ)
      if (cnt == 2)
        map[idx] = Index{"_s" + std::to_string(splice_counter_++), idx.cls};
    if (map.empty()) return;
    for (auto& f : t.factors) rename_factor(f, map);
  }

  static void rename_factor(Factor& f, const std::map<Index, Index>& map) {
    auto ren = [&](Index& i) {
      auto it = map.find(i);
      if (it != map.end()) i = it->second;
    };
    for (auto& p : f.prefixes) ren(p);
    if (f.is_group()) {
      if (f.gindex) ren(*f.gindex);
      for (auto& g : f.inner) rename_factor(g, map);
    } else {
      for (auto& s : f.slots) ren(s);
    }
  }

  PExpr parse_symbol() {
    Token name = lex_.next();
    std::vector<Index> labels, frames;
    if (punct("[")) {
      lex_.next();
      std::vector<std::string> first;
      first.push_back(parse_index_name());
      while (punct(",")) {
        lex_.next();
        first.push_back(parse_index_name());
      }
      if (punct(";")) {
        lex_.next();
        for (const auto& s : first) labels.push_back({s, IndexClass::Label});
        frames.push_back({parse_index_name(), IndexClass::Frame});
        while (punct(",")) {
          lex_.next();
          frames.push_back({parse_index_name(), IndexClass::Frame});
        }
      } else {
        for (const auto& s : first) frames.push_back({s, IndexClass::Frame});
      }
      expect("]", "to close index list");
    }
    int arity = static_cast<int>(labels.size() + frames.size());
    const SymbolDecl* sym = SymbolTable::builtin().find(name.text, arity);
    if (!sym) {
      if (SymbolTable::builtin().find(name.text, arity + 1) ||
          SymbolTable::builtin().find(name.text, arity - 1) ||
          SymbolTable::builtin().find(name.text, 4) ||
          SymbolTable::builtin().find(name.text, 0))
        lex_.fail("symbol " + name.text + " does not take " +
                  std::to_string(arity) + " indices");
      lex_.fail("unknown symbol " + name.text);
    }
    if (sym->label_slots() != static_cast<int>(labels.size()))
      lex_.fail("symbol " + name.text + " takes " +
                std::to_string(sym->label_slots()) + " label indices");
    std::vector<Index> slots = labels;
    slots.insert(slots.end(), frames.begin(), frames.end());
    PTerm pt;
    pt.term.factors.push_back(make_factor(sym, std::move(slots)));
    for (const auto& l : labels) pt.unbound_labels[l.name] += 1;
    return {pt};
  }

  Lexer lex_;
  const ExprEnv& env_;
  int splice_counter_ = 0;
};

}  // namespace

TensorExpr parse_expr(const std::string& text, const ExprEnv& env) {
  Parser p(text, env);
  return p.parse();
}

}  // namespace harnack
