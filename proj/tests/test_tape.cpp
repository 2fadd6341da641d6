#include <cmath>
#include <vector>

#include "doctest.h"
#include "pesgen/tape.hpp"

using pesgen::ad::Tape;

namespace {

/// A composite scalar touching every op:
/// f(x, y, z) = tanh(x*y + sin(z)) + exp(-x^2) / sqrt(y) + cos(z) - y/x.
double reference_f(double x, double y, double z) {
  return std::tanh(x * y + std::sin(z)) + std::exp(-x * x) / std::sqrt(y) + std::cos(z) - y / x;
}

struct Built {
  Tape tape;
  int x, y, z, out;
};

Built build_f(double xv, double yv, double zv) {
  Built b;
  b.x = b.tape.input(xv);
  b.y = b.tape.input(yv);
  b.z = b.tape.input(zv);
  const int xy = b.tape.mul(b.x, b.y);
  const int arg = b.tape.add(xy, b.tape.sin(b.z));
  const int t1 = b.tape.tanh(arg);
  const int t2 = b.tape.div(b.tape.exp(b.tape.neg(b.tape.square(b.x))), b.tape.sqrt(b.y));
  // fma(a, b, c) = a*b + c exercises the three-operand node.
  const int t12 = b.tape.fma(b.tape.constant(1.0), t1, t2);
  const int t3 = b.tape.sub(t12, b.tape.div(b.y, b.x));
  b.out = b.tape.add(t3, b.tape.cos(b.z));
  return b;
}

}  // namespace

TEST_CASE("values are computed eagerly and match the reference") {
  const double x = 0.8, y = 1.7, z = -0.4;
  Built b = build_f(x, y, z);
  CHECK(b.tape.value(b.out) == doctest::Approx(reference_f(x, y, z)).epsilon(1e-14));
}

TEST_CASE("backward matches central finite differences on all inputs") {
  const double x = 0.8, y = 1.7, z = -0.4;
  Built b = build_f(x, y, z);
  std::vector<double> adj;
  b.tape.backward(b.out, adj);

  const double h = 1e-6;
  const double dx = (reference_f(x + h, y, z) - reference_f(x - h, y, z)) / (2 * h);
  const double dy = (reference_f(x, y + h, z) - reference_f(x, y - h, z)) / (2 * h);
  const double dz = (reference_f(x, y, z + h) - reference_f(x, y, z - h)) / (2 * h);
  CHECK(adj[std::size_t(b.x)] == doctest::Approx(dx).epsilon(1e-7));
  CHECK(adj[std::size_t(b.y)] == doctest::Approx(dy).epsilon(1e-7));
  CHECK(adj[std::size_t(b.z)] == doctest::Approx(dz).epsilon(1e-7));
}

TEST_CASE("append_gradient emits first derivatives as nodes") {
  const double x = 0.8, y = 1.7, z = -0.4;
  Built b = build_f(x, y, z);
  std::vector<double> adj;
  b.tape.backward(b.out, adj);
  const auto grads = b.tape.append_gradient(b.out, {b.x, b.y, b.z});
  REQUIRE(grads.size() == 3);
  CHECK(b.tape.value(grads[0]) == doctest::Approx(adj[std::size_t(b.x)]).epsilon(1e-13));
  CHECK(b.tape.value(grads[1]) == doctest::Approx(adj[std::size_t(b.y)]).epsilon(1e-13));
  CHECK(b.tape.value(grads[2]) == doctest::Approx(adj[std::size_t(b.z)]).epsilon(1e-13));
}

TEST_CASE("double backward: second derivatives of x^3 and x^2 y") {
  {
    // f = x^3, f' = 3x^2, f'' = 6x.
    Tape t;
    const int x = t.input(1.3);
    const int f = t.mul(t.square(x), x);
    const auto g = t.append_gradient(f, {x});
    CHECK(t.value(g[0]) == doctest::Approx(3 * 1.3 * 1.3).epsilon(1e-14));
    std::vector<double> adj;
    t.backward(g[0], adj);
    CHECK(adj[std::size_t(x)] == doctest::Approx(6 * 1.3).epsilon(1e-13));
  }
  {
    // f = x^2 y: d2f/dxdy = 2x, d2f/dx2 = 2y.
    Tape t;
    const int x = t.input(0.7);
    const int y = t.input(-1.1);
    const int f = t.mul(t.square(x), y);
    const auto g = t.append_gradient(f, {x});
    std::vector<double> adj;
    t.backward(g[0], adj);
    CHECK(adj[std::size_t(x)] == doctest::Approx(2 * -1.1).epsilon(1e-13));
    CHECK(adj[std::size_t(y)] == doctest::Approx(2 * 0.7).epsilon(1e-13));
  }
}

TEST_CASE("double backward through transcendental ops") {
  // f = tanh(sin(x) * exp(x)); check d2f/dx2 against finite differences of
  // the tape's own first derivative.
  auto first = [](double xv) {
    Tape t;
    const int x = t.input(xv);
    const int f = t.tanh(t.mul(t.sin(x), t.exp(x)));
    std::vector<double> adj;
    t.backward(f, adj);
    return adj[std::size_t(x)];
  };
  const double x0 = 0.35, h = 1e-6;
  const double want = (first(x0 + h) - first(x0 - h)) / (2 * h);

  Tape t;
  const int x = t.input(x0);
  const int f = t.tanh(t.mul(t.sin(x), t.exp(x)));
  const auto g = t.append_gradient(f, {x});
  std::vector<double> adj;
  t.backward(g[0], adj);
  CHECK(adj[std::size_t(x)] == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("independent inputs get zero gradients") {
  Tape t;
  const int x = t.input(2.0);
  const int y = t.input(5.0);  // never used by f
  const int f = t.square(x);
  std::vector<double> adj;
  t.backward(f, adj);
  CHECK(adj[std::size_t(y)] == 0.0);
  const auto g = t.append_gradient(f, {y});
  CHECK(t.value(g[0]) == 0.0);
}

TEST_CASE("clear keeps the tape reusable") {
  Tape t;
  const int x = t.input(3.0);
  (void)t.square(x);
  CHECK(t.size() == 2);
  t.clear();
  CHECK(t.size() == 0);
  const int y = t.input(4.0);
  const int f = t.square(y);
  CHECK(t.value(f) == 16.0);
}
