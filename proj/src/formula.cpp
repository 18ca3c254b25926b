// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/formula.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace gelcal {

namespace {

struct Token {
  enum Kind { Name, Number, Tilde, Plus, Colon, LParen, RParen, Cmp, End } kind;
  std::string text;
  double number = 0.0;
  Comparison cmp = Comparison::Greater;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    Token tok;
    tok.offset = pos_;
    if (pos_ >= text_.size()) {
      tok.kind = Token::End;
      return tok;
    }
    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_' || text_[pos_] == '.')) {
        ++pos_;
      }
      tok.kind = Token::Name;
      tok.text = text_.substr(start, pos_ - start);
      return tok;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
      std::size_t endpos = 0;
      double v = 0.0;
      bool ok = true;
      try {
        v = std::stod(text_.substr(pos_), &endpos);
      } catch (const std::exception&) {
        ok = false;
      }
      if (!ok || endpos == 0) {
        throw SyntaxError(syntax_message("a number", pos_));
      }
      tok.kind = Token::Number;
      tok.number = v;
      tok.text = text_.substr(pos_, endpos);
      pos_ += endpos;
      return tok;
    }
    switch (c) {
      case '~': tok.kind = Token::Tilde; ++pos_; return tok;
      case '+': tok.kind = Token::Plus; ++pos_; return tok;
      case ':': tok.kind = Token::Colon; ++pos_; return tok;
      case '(': tok.kind = Token::LParen; ++pos_; return tok;
      case ')': tok.kind = Token::RParen; ++pos_; return tok;
      case '>':
      case '<': {
        tok.kind = Token::Cmp;
        const bool eq = pos_ + 1 < text_.size() && text_[pos_ + 1] == '=';
        if (c == '>') {
          tok.cmp = eq ? Comparison::GreaterEq : Comparison::Greater;
        } else {
          tok.cmp = eq ? Comparison::LessEq : Comparison::Less;
        }
        pos_ += eq ? 2 : 1;
        return tok;
      }
      default:
        throw SyntaxError(syntax_message(
            "a name, number, '~', '+', ':', '(', ')' or comparison", pos_));
    }
  }

  std::string syntax_message(const std::string& expected, std::size_t offset) const {
    std::ostringstream msg;
    msg << "syntax error at offset " << offset << ": expected " << expected;
    return msg.str();
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lexer_(text) { advance(); }

  FormulaSpec parse() {
    FormulaSpec spec;
    parse_response(spec);
    expect(Token::Tilde, "'~'");
    spec.terms.push_back(parse_term());
    while (current_.kind == Token::Plus) {
      advance();
      spec.terms.push_back(parse_term());
    }
    if (current_.kind != Token::End) {
      fail("'+' or end of formula");
    }
    return spec;
  }

 private:
  void advance() { current_ = lexer_.next(); }

  void expect(Token::Kind kind, const std::string& what) {
    if (current_.kind != kind) fail(what);
    advance();
  }

  [[noreturn]] void fail(const std::string& expected) {
    throw SyntaxError(lexer_.syntax_message(expected, current_.offset));
  }

  void parse_response(FormulaSpec& spec) {
    if (current_.kind != Token::Name) fail("a response name or I(...)");
    const std::string name = current_.text;
    advance();
    if (name == "I" && current_.kind == Token::LParen) {
      advance();
      if (current_.kind != Token::Name) fail("a column name inside I(...)");
      spec.response = current_.text;
      advance();
      if (current_.kind != Token::Cmp) fail("a comparison operator inside I(...)");
      spec.response_cmp = current_.cmp;
      advance();
      if (current_.kind != Token::Number) fail("a threshold number inside I(...)");
      spec.response_threshold = current_.number;
      advance();
      expect(Token::RParen, "')'");
    } else {
      spec.response = name;
    }
  }

  FormulaFactor parse_factor() {
    if (current_.kind != Token::Name) {
      fail("a column name or sq/sqrt/log '(' name ')'");
    }
    FormulaFactor factor;
    const std::string name = current_.text;
    advance();
    if (current_.kind == Token::LParen) {
      if (name == "sq") {
        factor.transform = Transform::Square;
      } else if (name == "sqrt") {
        factor.transform = Transform::Sqrt;
      } else if (name == "log") {
        factor.transform = Transform::Log;
      } else {
        fail("a transform name (sq, sqrt, log) before '('");
      }
      advance();
      if (current_.kind != Token::Name) fail("a column name inside the transform");
      factor.column = current_.text;
      advance();
      expect(Token::RParen, "')'");
    } else {
      factor.column = name;
    }
    return factor;
  }

  FormulaTerm parse_term() {
    FormulaTerm term;
    if (current_.kind == Token::Name && current_.text == "I") {
      // lookahead: "I(" starts an indicator; a bare "I" is a column
      const Token saved = current_;
      advance();
      if (current_.kind == Token::LParen) {
        advance();
        if (current_.kind != Token::Name) fail("a column name inside I(...)");
        term.indicator_column = current_.text;
        advance();
        if (current_.kind != Token::Cmp) fail("a comparison operator inside I(...)");
        term.cmp = current_.cmp;
        advance();
        if (current_.kind != Token::Number) fail("a threshold number inside I(...)");
        term.threshold = current_.number;
        advance();
        expect(Token::RParen, "')'");
        return term;
      }
      // plain column named "I"
      FormulaFactor factor;
      factor.column = saved.text;
      term.factors.push_back(std::move(factor));
    } else {
      term.factors.push_back(parse_factor());
    }
    while (current_.kind == Token::Colon) {
      advance();
      term.factors.push_back(parse_factor());
    }
    return term;
  }

  Lexer lexer_;
  Token current_;
};

Vector factor_column(const ObservedSample& sample, const FormulaFactor& factor) {
  Vector col = sample.x.col(sample.column_index(factor.column));
  switch (factor.transform) {
    case Transform::Identity:
      return col;
    case Transform::Square:
      return col.array().square();
    case Transform::Sqrt:
    case Transform::Log:
      if ((col.array() <= 0.0).any()) {
        throw InvariantViolation("factor " + factor.label() +
                                 " requires positive values in column '" +
                                 factor.column + "'");
      }
      if (factor.transform == Transform::Sqrt) return col.array().sqrt();
      return col.array().log();
  }
  throw InvariantViolation("unknown transform");
}

}  // namespace

std::string to_string(Comparison cmp) {
  switch (cmp) {
    case Comparison::Greater: return ">";
    case Comparison::GreaterEq: return ">=";
    case Comparison::Less: return "<";
    case Comparison::LessEq: return "<=";
  }
  return "?";
}

std::string FormulaFactor::label() const {
  switch (transform) {
    case Transform::Identity: return column;
    case Transform::Square: return "sq(" + column + ")";
    case Transform::Sqrt: return "sqrt(" + column + ")";
    case Transform::Log: return "log(" + column + ")";
  }
  return "?";
}

std::string FormulaTerm::label() const {
  if (cmp) {
    std::ostringstream s;
    s << "I(" << indicator_column << to_string(*cmp) << threshold << ")";
    return s.str();
  }
  std::string out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) out += ':';
    out += factors[i].label();
  }
  return out;
}

std::string FormulaSpec::text() const {
  std::ostringstream s;
  if (response_cmp) {
    s << "I(" << response << to_string(*response_cmp) << response_threshold << ")";
  } else {
    s << response;
  }
  s << " ~ ";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) s << " + ";
    s << terms[i].label();
  }
  return s.str();
}

FormulaSpec parse_formula(const std::string& text) {
  return Parser(text).parse();
}

Matrix build_design(const ObservedSample& sample,
                    const std::vector<FormulaTerm>& terms) {
  const Eigen::Index n = sample.n;
  Matrix design(n, static_cast<Eigen::Index>(terms.size()) + 1);
  design.col(0).setOnes();
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const FormulaTerm& term = terms[k];
    Vector col;
    if (term.cmp) {
      Vector base = sample.x.col(sample.column_index(term.indicator_column));
      col.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        bool hit = false;
        switch (*term.cmp) {
          case Comparison::Greater: hit = base[i] > term.threshold; break;
          case Comparison::GreaterEq: hit = base[i] >= term.threshold; break;
          case Comparison::Less: hit = base[i] < term.threshold; break;
          case Comparison::LessEq: hit = base[i] <= term.threshold; break;
        }
        col[i] = hit ? 1.0 : 0.0;
      }
    } else {
      col = factor_column(sample, term.factors.front());
      for (std::size_t f = 1; f < term.factors.size(); ++f) {
        col = col.array() * factor_column(sample, term.factors[f]).array();
      }
    }
    design.col(static_cast<Eigen::Index>(k) + 1) = col;
  }
  return design;
}

std::vector<std::string> design_labels(const std::vector<FormulaTerm>& terms) {
  std::vector<std::string> labels;
  labels.reserve(terms.size() + 1);
  labels.emplace_back("(intercept)");
  for (const auto& t : terms) labels.push_back(t.label());
  return labels;
}

}  // namespace gelcal
