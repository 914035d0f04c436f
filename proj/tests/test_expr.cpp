#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "confcheck/expr.hpp"
#include "support.hpp"

using namespace confcheck;
using testing_support::P;

namespace {

const std::vector<std::string> kCoords = {"u", "r", "x", "y"};
const std::vector<std::string> kParams = {"lambda", "m"};

Expr E(const std::string& s) { return parse(s, kCoords, kParams); }

ChartPoint pt(double u, double r, double x, double y, double lambda = 0.7, double m = 1.0) {
  ChartPoint p;
  p.coordinates = {{"u", u}, {"r", r}, {"x", x}, {"y", y}};
  p.parameters = {{"lambda", lambda}, {"m", m}};
  return p;
}

// Expressions drawn from the metric corpus and their building blocks.
const std::vector<std::string> kCorpusExprs = {
    "exp(lambda*u)/(3*r)",
    "2*r^2*exp(-lambda*u)",
    "-(1 - 2*m/r)",
    "1/(1 - 2*m/r)",
    "r^2*sin(x)^2",
    "x^3 - 3*x*y^2",
    "x^4",
    "exp(2*u)",
    "sqrt(r)*cos(x*y) + log(r)",
    "(x^2 - y^2)/(1 + r^2)",
    "exp(40*x)",
};

ChartPoint randomPoint(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-0.9, 0.9), rr(1.2, 3.0);
  return pt(d(rng), rr(rng), d(rng), d(rng));
}

}  // namespace

TEST(ExprParse, PowerAndProduct) {
  Expr e = E("r^2 + 2*u");
  Expr expect = add({pow(coordinate("r"), Expr(2L)), mul({Expr(2L), coordinate("u")})});
  EXPECT_EQ(e, expect);
  EXPECT_DOUBLE_EQ(evalAt(e, pt(1.5, 3, 0, 0)), 12.0);
}

TEST(ExprParse, QuotientOverDeclaredSymbols) {
  Expr e = E("exp(lambda*u)/(6*r)");
  EXPECT_NEAR(evalAt(e, pt(0.5, 2, 0, 0)), std::exp(0.35) / 12, 1e-15);
  EXPECT_TRUE(e.dependsOn(coordinate("u")));
  EXPECT_TRUE(e.dependsOn(parameter("lambda")));
  EXPECT_FALSE(e.dependsOn(coordinate("x")));
}

TEST(ExprParse, TrailingOperatorReportsOffset) {
  try {
    E("2*");
    FAIL() << "expected a syntax error";
  } catch (const ParseError& err) {
    EXPECT_EQ(err.offset(), 2u);
  }
}

TEST(ExprParse, UndeclaredIdentifier) {
  try {
    E("r + q");
    FAIL();
  } catch (const ParseError& err) {
    EXPECT_EQ(err.offset(), 4u);
    EXPECT_NE(std::string(err.what()).find("undeclared"), std::string::npos);
  }
}

TEST(ExprParse, LiteralZeroDenominator) {
  EXPECT_THROW(E("r/0"), ParseError);
  EXPECT_THROW(E("r/(2-2)"), ParseError);
}

TEST(ExprParse, RightAssociativePowerAndUnaryMinus) {
  EXPECT_EQ(E("2^3^2"), Expr(512L));
  EXPECT_EQ(E("-2^2"), Expr(-4L));
  EXPECT_EQ(E("2^-1"), number(Rational(1, 2)));
}

TEST(ExprParse, ExactDecimalsAndRationals) {
  EXPECT_EQ(E("0.25"), number(Rational(1, 4)));
  EXPECT_EQ(E("1/3"), number(Rational(1, 3)));
  EXPECT_EQ(E("1.5e2"), Expr(150L));
  EXPECT_EQ(parseRational("-3/4"), Rational(-3, 4));
  EXPECT_THROW(parseRational("x"), ParseError);
}

TEST(ExprParse, UnbalancedParentheses) {
  EXPECT_THROW(E("(r + 1"), ParseError);
  EXPECT_THROW(E("r + 1)"), ParseError);
  EXPECT_THROW(E(""), ParseError);
  EXPECT_THROW(E("exp r"), ParseError);
}

TEST(ExprDiff, PowerRule) {
  EXPECT_EQ(diff(E("r^2"), coordinate("r")), E("2*r"));
}

TEST(ExprDiff, ChainRule) {
  EXPECT_EQ(diff(E("exp(lambda*u)"), coordinate("u")), E("lambda*exp(lambda*u)"));
}

TEST(ExprDiff, PythagoreanIdentityDerivativeVanishes) {
  Expr d = diff(E("sin(x)^2 + cos(x)^2"), coordinate("x"));
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) EXPECT_NEAR(evalAt(d, randomPoint(rng)), 0.0, 1e-12);
}

TEST(ExprDiff, RejectsNonCoordinate) {
  EXPECT_THROW(diff(E("lambda*u"), parameter("lambda")), std::invalid_argument);
}

TEST(ExprDiff, Linearity) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
  const Expr x = coordinate("x");
  for (std::size_t i = 0; i < kCorpusExprs.size(); ++i) {
    const Expr e1 = E(kCorpusExprs[i]);
    const Expr e2 = E(kCorpusExprs[(i + 3) % kCorpusExprs.size()]);
    const Rational a(num(rng), den(rng)), b(num(rng), den(rng));
    const Expr lhs = diff(number(a) * e1 + number(b) * e2, x);
    const Expr d1 = diff(e1, x), d2 = diff(e2, x);
    for (int k = 0; k < 10; ++k) {
      ChartPoint p = randomPoint(rng);
      const double want = a.get_d() * evalAt(d1, p) + b.get_d() * evalAt(d2, p);
      EXPECT_LE(testing_support::relErr(evalAt(lhs, p), want), 1e-10) << kCorpusExprs[i];
    }
  }
}

TEST(ExprDiff, ProductRule) {
  const Expr y = coordinate("y");
  const Expr e1 = E("x^3 - 3*x*y^2"), e2 = E("exp(lambda*u)/(3*r) + sin(y)");
  const Expr lhs = diff(e1 * e2, y);
  const Expr rhs = diff(e1, y) * e2 + e1 * diff(e2, y);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    ChartPoint p = randomPoint(rng);
    EXPECT_LE(testing_support::relErr(evalAt(lhs, p), evalAt(rhs, p)), 1e-10);
  }
}

TEST(ExprDiff, AgreesWithCentralDifferences) {
  std::mt19937_64 rng(17);
  const double h = 1e-6;
  for (const auto& text : kCorpusExprs) {
    const Expr e = E(text);
    for (const auto& c : kCoords) {
      const Expr d = diff(e, coordinate(c));
      for (int k = 0; k < 5; ++k) {
        ChartPoint p = randomPoint(rng);
        ChartPoint lo = p, hi = p;
        lo.coordinates[c] -= h;
        hi.coordinates[c] += h;
        const double fd = (evalAt(e, hi) - evalAt(e, lo)) / (2 * h);
        const double exact = evalAt(d, p);
        EXPECT_LE(std::abs(fd - exact), 1e-5 * std::max(1.0, std::abs(exact))) << text << " d/d" << c;
      }
    }
  }
}

TEST(ExprDiff, FourthOrderStaysCompact) {
  Expr e = E("exp(lambda*u)/(3*r)");
  const Expr r = coordinate("r");
  for (int k = 0; k < 4; ++k) e = diff(e, r);
  // d^4/dr^4 (1/r) = 24/r^5
  EXPECT_NEAR(evalAt(e, pt(0.2, 1.7, 0, 0)), std::exp(0.14) / 3 * 24 / std::pow(1.7, 5), 1e-12);
  EXPECT_LT(dagSize(e), 20u);
}

TEST(ExprSimplify, Cancellation) {
  const Expr e = E("exp(lambda*u)*r + sin(x)");
  EXPECT_TRUE(simplify(e - e).isZero());
  EXPECT_TRUE(E("2*(x+y) - 2*x - 2*y").isZero());
}

TEST(ExprSimplify, PythagoreanIdentityEvaluatesToOne) {
  const Expr e = simplify(E("sin(x)^2 + cos(x)^2"));
  std::mt19937_64 rng(23);
  for (int k = 0; k < 50; ++k) EXPECT_NEAR(evalAt(e, randomPoint(rng)), 1.0, 1e-12);
}

TEST(ExprSimplify, Idempotent) {
  for (const auto& text : kCorpusExprs) {
    const Expr e = E(text);
    EXPECT_EQ(simplify(simplify(e)), simplify(e)) << text;
    const Expr d = diff(diff(e, coordinate("r")), coordinate("x"));
    EXPECT_EQ(simplify(simplify(d)), simplify(d)) << text;
  }
}

TEST(ExprSimplify, CanonicalOrderIsDeterministic) {
  EXPECT_EQ(E("x*y + r"), E("r + y*x"));
  EXPECT_EQ(E("x*x*x"), E("x^3"));
  EXPECT_EQ(E("(x*y)^2"), E("x^2*y^2"));
  EXPECT_EQ(E("exp(log(r))"), coordinate("r"));
  EXPECT_EQ(toString(E("y + x")), toString(E("x + y")));
}

TEST(ExprSubstitute, ReplacesSymbols) {
  std::map<Expr, Expr, ExprLess> rep{{coordinate("x"), E("r + 1")}};
  EXPECT_EQ(substitute(E("x^2"), rep), E("(r+1)^2"));
}

TEST(ExprEval, Basics) {
  EXPECT_DOUBLE_EQ(evalAt(E("r^2"), pt(0, 3, 0, 0)), 9.0);
  EXPECT_DOUBLE_EQ(evalAt(E("exp(lambda*u)"), pt(0, 1, 0, 0, 5)), 1.0);
}

TEST(ExprEval, DomainErrors) {
  EXPECT_THROW(evalAt(E("1/(x-1)"), pt(0, 1, 1, 0)), DomainError);
  EXPECT_THROW(evalAt(E("log(x)"), pt(0, 1, -1, 0)), DomainError);
  EXPECT_THROW(evalAt(E("sqrt(x)"), pt(0, 1, -1, 0)), DomainError);
  ChartPoint unbound;
  EXPECT_THROW(evalAt(E("r"), unbound), DomainError);
}

TEST(ExprEval, TapeMatchesScalarEvaluation) {
  std::vector<Expr> roots;
  for (const auto& text : kCorpusExprs) roots.push_back(E(text));
  Tape tape(roots);
  std::mt19937_64 rng(29);
  for (int k = 0; k < 20; ++k) {
    ChartPoint p = randomPoint(rng);
    auto v = tape.evaluate(p);
    for (std::size_t i = 0; i < roots.size(); ++i) EXPECT_DOUBLE_EQ(v[i], evalAt(roots[i], p));
  }
}
