#include <lnared/expr.hpp>

#include <doctest.h>

using namespace lnared;

namespace {

// 3 / (1 + p^2) with p as species 0.
Expr hill_expr() {
  return Expr::divide(
      Expr::number(3.0),
      Expr::add(Expr::number(1.0),
                Expr::power(Expr::species("p", 0), 2.0)));
}

Vector sv(double v) {
  Vector x(1);
  x[0] = v;
  return x;
}

const Vector no_params = Vector(0);

}  // namespace

TEST_CASE("hill rate evaluates at characteristic points") {
  const Expr e = hill_expr();
  CHECK(e.eval(sv(0.0), no_params) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(e.eval(sv(1.0), no_params) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("mass-action rate and its derivative") {
  // 4 * m with m as species 0
  const Expr e = Expr::multiply(Expr::number(4.0), Expr::species("m", 0));
  CHECK(e.eval(sv(2.0), no_params) == doctest::Approx(8.0));
  const Expr d = e.derivative(0);
  REQUIRE(d.is_number());
  CHECK(d.number_value() == 4.0);
}

TEST_CASE("hill derivative matches the closed form") {
  // d/dp 3/(1+p^2) = -6p / (1+p^2)^2; at p = 1 this is -1.5.
  const Expr d = hill_expr().derivative(0);
  CHECK(d.eval(sv(1.0), no_params) == doctest::Approx(-1.5).epsilon(1e-14));
  CHECK(d.eval(sv(0.0), no_params) == doctest::Approx(0.0));
}

TEST_CASE("division by zero and negative sqrt are reported") {
  const Expr div = Expr::divide(Expr::number(1.0), Expr::species("x", 0));
  CHECK_THROWS_AS(div.eval(sv(0.0), no_params), NumericalError);
  const Expr root = Expr::sqrt(Expr::species("x", 0));
  CHECK_THROWS_AS(root.eval(sv(-1.0), no_params), NumericalError);
  CHECK(root.eval(sv(4.0), no_params) == doctest::Approx(2.0));
}

TEST_CASE("derivative of unreferenced species is zero") {
  const Expr e = hill_expr();
  const Expr d = e.derivative(5);
  REQUIRE(d.is_number());
  CHECK(d.number_value() == 0.0);
}

TEST_CASE("constant folding keeps derivative trees small") {
  // d/dx (x * x) = 1*x + x*1 should fold to x + x.
  const Expr x = Expr::species("x", 0);
  const Expr d = Expr::multiply(x, x).derivative(0);
  CHECK(d.eval(sv(3.0), no_params) == doctest::Approx(6.0));
  CHECK(d.kind() == Expr::Kind::Add);
}

TEST_CASE("remap_species moves references") {
  const Expr e = Expr::multiply(Expr::species("a", 0), Expr::species("b", 1));
  const Expr r = e.remap_species({1, 0});
  Vector x(2);
  x << 5.0, 7.0;
  // After the swap, "a" reads index 1 and "b" index 0.
  CHECK(r.eval(x, no_params) == doctest::Approx(35.0));
  CHECK(r.child(0).ref_index() == 1);
  CHECK(r.child(1).ref_index() == 0);
}

TEST_CASE("power with negative base and integer exponent") {
  const Expr e = Expr::power(Expr::species("x", 0), 3.0);
  CHECK(e.eval(sv(-2.0), no_params) == doctest::Approx(-8.0));
  // Non-integer exponent of a negative base is a domain fault.
  const Expr frac = Expr::power(Expr::species("x", 0), 0.5);
  CHECK_THROWS_AS(frac.eval(sv(-2.0), no_params), NumericalError);
}
