#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "vortexlab/sphere_grid.hpp"

using namespace vortexlab;
using Catch::Approx;

TEST_CASE("gauss-legendre nodes integrate polynomials exactly", "[grid]") {
  std::vector<double> x, w;
  gauss_legendre(12, x, w);
  for (int p = 0; p <= 23; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], p);
    const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
    CHECK(s == Approx(exact).margin(1e-14));
  }
}

TEST_CASE("grid shape and weights", "[grid]") {
  const SphereGrid g(63);
  CHECK(g.n_theta() == 64);
  CHECK(g.n_phi() == 128);
  double total = 0.0;
  for (double w : g.weights()) total += w;
  CHECK(std::abs(total - 4 * kPi) / (4 * kPi) < 1e-12);
  for (int i = 0; i < g.n_theta(); ++i) {
    CHECK(g.theta(i) > 0.0);
    CHECK(g.theta(i) < kPi);
  }
  CHECK_THROWS_AS(SphereGrid(10, 10, 40), PreconditionError);
  CHECK_THROWS_AS(SphereGrid(10, 11, 20), PreconditionError);
}

TEST_CASE("harmonics are orthonormal under the grid quadrature", "[grid]") {
  const auto g = make_grid(15);
  std::vector<GridFunction> ys;
  std::vector<std::pair<int, int>> lm;
  for (int l = 0; l <= 15; ++l)
    for (int m = -l; m <= l; ++m) {
      ys.push_back(GridFunction::from_function(
          g, [l, m](double t, double p) { return real_spherical_harmonic(l, m, t, p); }));
      lm.emplace_back(l, m);
    }
  double worst = 0.0;
  for (std::size_t a = 0; a < ys.size(); ++a)
    for (std::size_t b = a; b < ys.size(); ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < g->size(); ++k) s += ys[a][k] * ys[b][k] * g->weights()[k];
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("transform reproduces the pointwise harmonics", "[grid]") {
  const auto g = make_grid(20);
  for (auto [l, m] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {2, 1}, {5, -3}, {20, 20}, {20, -7}}) {
    const GridFunction viaT = harmonic(g, l, m);
    double err = 0.0;
    for (int i = 0; i < g->n_theta(); ++i)
      for (int j = 0; j < g->n_phi(); ++j)
        err = std::max(err, std::abs(viaT[g->node(i, j)] -
                                     real_spherical_harmonic(l, m, g->theta(i), g->phi(j))));
    CHECK(err < 1e-12);
  }
  CHECK(real_spherical_harmonic(1, 0, 0.3, 1.0) == Approx(std::sqrt(3.0 / (4 * kPi)) * std::cos(0.3)));
}

TEST_CASE("analysis inverts synthesis on band-limited data", "[grid]") {
  const auto g = make_grid(31);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> c(g->num_coeffs());
  for (auto& v : c) v = nd(rng);
  const GridFunction f = synthesize(g, c);
  const auto back = analyze(f);
  double err = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) err = std::max(err, std::abs(back[k] - c[k]));
  CHECK(err < 1e-12);
}

TEST_CASE("point evaluation matches synthesis at nodes", "[grid]") {
  const auto g = make_grid(12);
  std::vector<double> c(g->num_coeffs(), 0.0);
  c[g->index(3, -2)] = 0.7;
  c[g->index(7, 4)] = -1.1;
  const GridFunction f = synthesize(g, c);
  for (std::size_t k : {std::size_t{0}, std::size_t{37}, g->size() - 1})
    CHECK(g->evaluate(c, g->node_theta(k), g->node_phi(k)) == Approx(f[k]).margin(1e-13));
}

TEST_CASE("grid functions reject mismatched grids", "[grid]") {
  const auto a = make_grid(8);
  const auto b = make_grid(8);
  GridFunction f(a, 1.0), h(b, 2.0);
  CHECK_THROWS_AS(f += h, DimensionError);
  CHECK_THROWS_AS(GridFunction(a, std::vector<double>(3)), DimensionError);
}
