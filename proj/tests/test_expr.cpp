#include <catch2/catch_amalgamated.hpp>

#include "plateuc/expr.hpp"

using plateuc::Expression;

TEST_CASE("expression arithmetic and precedence") {
    CHECK(Expression("1 + 2*3")(0) == 7.0);
    CHECK(Expression("(1 + 2)*3")(0) == 9.0);
    CHECK(Expression("2^3^2")(0) == 512.0);  // right associative
    CHECK(Expression("-2^2")(0) == -4.0);
    CHECK(Expression("6/3/2")(0) == 1.0);
    CHECK(Expression("1e2 + 1.5e-1")(0) == Catch::Approx(100.15));
}

TEST_CASE("expression variables and functions") {
    Expression e("0.05*x^2");
    CHECK(e(2.0) == Catch::Approx(0.2));
    Expression f("sin(pi*x) + cos(0)");
    CHECK(f(0.5) == Catch::Approx(2.0));
    Expression g("exp(x1) * sqrt(x2)");
    CHECK(g(0.0, 4.0) == Catch::Approx(2.0));
    Expression h("x + 2*y");
    CHECK(h(1.0, 3.0) == Catch::Approx(7.0));
}

TEST_CASE("expression rejects malformed input") {
    CHECK_THROWS_AS(Expression("1 +"), plateuc::invalid_parameter);
    CHECK_THROWS_AS(Expression("foo(3)"), plateuc::invalid_parameter);
    CHECK_THROWS_AS(Expression("sin 3"), plateuc::invalid_parameter);
    CHECK_THROWS_AS(Expression("(1+2"), plateuc::invalid_parameter);
    CHECK_THROWS_AS(Expression("1 2"), plateuc::invalid_parameter);
}
