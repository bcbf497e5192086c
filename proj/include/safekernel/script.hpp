#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "safekernel/common.hpp"

namespace safekernel::script {

/// A parsed arithmetic expression over the round index k. Supports decimal
/// literals, +, -, *, /, unary sign, parentheses, sin and cos. Compiled to
/// a postfix program at parse time; evaluation never fails (IEEE semantics),
/// callers check the result for finiteness.
class Expr {
 public:
  Expr() = default;

  static Expr parse(const std::string& text) {
    Parser parser{text, 0};
    Expr expr;
    expr.text_ = text;
    parser.expression(expr.program_);
    parser.skip_ws();
    if (parser.pos != text.size()) {
      throw ParseError("script: trailing input at position " + std::to_string(parser.pos) +
                       " in \"" + text + "\"");
    }
    return expr;
  }

  double eval(double k) const {
    std::vector<double> stack;
    stack.reserve(8);
    for (const Instr& ins : program_) {
      switch (ins.op) {
        case Op::PushConst:
          stack.push_back(ins.value);
          break;
        case Op::PushK:
          stack.push_back(k);
          break;
        case Op::Neg:
          stack.back() = -stack.back();
          break;
        case Op::Sin:
          stack.back() = std::sin(stack.back());
          break;
        case Op::Cos:
          stack.back() = std::cos(stack.back());
          break;
        default: {
          const double rhs = stack.back();
          stack.pop_back();
          double& lhs = stack.back();
          if (ins.op == Op::Add) lhs += rhs;
          else if (ins.op == Op::Sub) lhs -= rhs;
          else if (ins.op == Op::Mul) lhs *= rhs;
          else lhs /= rhs;
        }
      }
    }
    return stack.back();
  }

  const std::string& text() const { return text_; }

 private:
  enum class Op : std::uint8_t { PushConst, PushK, Add, Sub, Mul, Div, Neg, Sin, Cos };
  struct Instr {
    Op op;
    double value = 0.0;
  };

  struct Parser {
    const std::string& src;
    std::size_t pos;

    void skip_ws() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool eat(char c) {
      skip_ws();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
      throw ParseError("script: " + what + " at position " + std::to_string(pos) + " in \"" +
                       src + "\"");
    }

    void expression(std::vector<Instr>& out) {
      term(out);
      while (true) {
        if (eat('+')) {
          term(out);
          out.push_back({Op::Add});
        } else if (eat('-')) {
          term(out);
          out.push_back({Op::Sub});
        } else {
          return;
        }
      }
    }

    void term(std::vector<Instr>& out) {
      unary(out);
      while (true) {
        if (eat('*')) {
          unary(out);
          out.push_back({Op::Mul});
        } else if (eat('/')) {
          unary(out);
          out.push_back({Op::Div});
        } else {
          return;
        }
      }
    }

    void unary(std::vector<Instr>& out) {
      if (eat('-')) {
        unary(out);
        out.push_back({Op::Neg});
        return;
      }
      if (eat('+')) {
        unary(out);
        return;
      }
      primary(out);
    }

    void primary(std::vector<Instr>& out) {
      skip_ws();
      if (pos >= src.size()) fail("unexpected end of input");
      const char c = src[pos];
      if (c == '(') {
        ++pos;
        expression(out);
        if (!eat(')')) fail("expected ')'");
        return;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("invalid number");
        pos += static_cast<std::size_t>(end - begin);
        out.push_back({Op::PushConst, v});
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < src.size() && std::isalpha(static_cast<unsigned char>(src[pos]))) ++pos;
        const std::string name = src.substr(start, pos - start);
        if (name == "k") {
          out.push_back({Op::PushK});
          return;
        }
        if (name == "sin" || name == "cos") {
          if (!eat('(')) fail("expected '(' after " + name);
          expression(out);
          if (!eat(')')) fail("expected ')'");
          out.push_back({name == "sin" ? Op::Sin : Op::Cos});
          return;
        }
        pos = start;
        fail("unknown identifier \"" + name + "\"");
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };

  std::vector<Instr> program_;
  std::string text_;
};

}  // namespace safekernel::script
