#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "safekernel/script.hpp"

using safekernel::ParseError;
using safekernel::script::Expr;

TEST_CASE("scripts evaluate the bundled adversary expressions", "[script]") {
  const Expr first = Expr::parse("1.5*sin(k/5)");
  const Expr second = Expr::parse("k/25+1");
  REQUIRE(first.eval(0) == 0.0);
  REQUIRE(second.eval(0) == 1.0);
  REQUIRE(first.eval(10) == Catch::Approx(1.5 * std::sin(2.0)));
  REQUIRE(second.eval(10) == Catch::Approx(10.0 / 25.0 + 1.0));
}

TEST_CASE("scripts honor precedence and associativity", "[script]") {
  REQUIRE(Expr::parse("2+3*4").eval(0) == 14.0);
  REQUIRE(Expr::parse("(2+3)*4").eval(0) == 20.0);
  REQUIRE(Expr::parse("2-3-4").eval(0) == -5.0);
  REQUIRE(Expr::parse("12/3/2").eval(0) == 2.0);
  REQUIRE(Expr::parse("-k").eval(2) == -2.0);
  REQUIRE(Expr::parse("--k").eval(2) == 2.0);
  REQUIRE(Expr::parse("cos(0)").eval(99) == 1.0);
  REQUIRE(Expr::parse(" 1e2 + .5 ").eval(0) == 100.5);
  REQUIRE(Expr::parse("2*-k").eval(3) == -6.0);
}

TEST_CASE("script parse errors are loud", "[script]") {
  REQUIRE_THROWS_AS(Expr::parse("2+"), ParseError);
  REQUIRE_THROWS_AS(Expr::parse("foo(k)"), ParseError);
  REQUIRE_THROWS_AS(Expr::parse("sin k"), ParseError);
  REQUIRE_THROWS_AS(Expr::parse("(1+2"), ParseError);
  REQUIRE_THROWS_AS(Expr::parse("1+2)"), ParseError);
  REQUIRE_THROWS_AS(Expr::parse(""), ParseError);
  REQUIRE_THROWS_AS(Expr::parse("1 2"), ParseError);
}

TEST_CASE("scripts keep their source text", "[script]") {
  const Expr e = Expr::parse("1.5*sin(k/5)");
  REQUIRE(e.text() == "1.5*sin(k/5)");
}
