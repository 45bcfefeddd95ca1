#include "catch_amalgamated.hpp"

#include <unsupported/Eigen/Polynomials>

#include <algorithm>
#include <cmath>
#include <random>

#include "vortexlab/bundle.hpp"

using namespace vortexlab;
using Catch::Approx;

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

/// 4 pi j! (n-j)! / (n+1)!: L2 norm squared of z0^{n-j} z1^j on the round sphere.
double beta_gram(int n, int j) { return 4 * kPi * factorial(j) * factorial(n - j) / factorial(n + 1); }

/// Same integral by a dense midpoint rule in theta, independent of the grid.
double dense_gram(int n, int j) {
  const int N = 200000;
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    const double t = kPi * (i + 0.5) / N;
    s += std::pow(std::cos(t / 2), 2 * (n - j)) * std::pow(std::sin(t / 2), 2 * j) * std::sin(t);
  }
  return 2 * kPi * s * kPi / N;
}

}  // namespace

TEST_CASE("constant_curvature_weight", "[bundle]") {
  const auto g = make_grid(63);
  const SurfaceMetric round = SurfaceMetric::round(g);
  for (int n : {0, 1, 2, 5}) {
    const GridFunction w = constant_curvature_weight(round, n).w();
    for (double v : w.values()) CHECK(v == 0.0);
  }
  const SurfaceMetric bumped(g, {HarmonicTerm{1, 0, 0.3}});
  const GridFunction w0 = constant_curvature_weight(bumped, 0).w();
  for (double v : w0.values()) CHECK(v == 0.0);

  for (int n : {1, 3}) {
    const auto h = constant_curvature_weight(bumped, n);
    CHECK(h.curvature_error() <= 1e-7 * (2 * kPi * n / bumped.area() + 1));
    CHECK(h.total_curvature() == Approx(2 * kPi * n).epsilon(1e-8));
    CHECK(std::abs(integrate(h.w(), bumped)) < 1e-9);
  }
  CHECK_THROWS_AS(constant_curvature_weight(round, -1), PreconditionError);
}

TEST_CASE("gram_matrix", "[bundle]") {
  const auto g = make_grid(63);
  const SurfaceMetric round = SurfaceMetric::round(g);
  CHECK(std::abs(gram_matrix(constant_curvature_weight(round, 0))(0, 0) - 4 * kPi) < 1e-12);
  for (int n : {1, 2, 4}) {
    const Eigen::MatrixXcd M = gram_matrix(constant_curvature_weight(round, n));
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) {
        const double expect = j == k ? beta_gram(n, j) : 0.0;
        CHECK(std::abs(M(j, k) - expect) < 1e-12);
      }
    for (int j = 0; j <= n; ++j) CHECK(beta_gram(n, j) == Approx(dense_gram(n, j)).epsilon(1e-9));
  }
  CHECK(beta_gram(1, 0) == Approx(2 * kPi));
  CHECK(beta_gram(2, 1) == Approx(2 * kPi / 3));
  CHECK(beta_gram(2, 0) == Approx(4 * kPi / 3));

  SECTION("hermitian positive definite on a bumped metric") {
    const SurfaceMetric m(g, {HarmonicTerm{1, 0, 0.3}, HarmonicTerm{2, 2, 0.2}});
    const Eigen::MatrixXcd M = gram_matrix(constant_curvature_weight(m, 3));
    CHECK((M - M.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(M).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("section_from_divisor", "[bundle]") {
  const auto g = make_grid(63);
  const SurfaceMetric round = SurfaceMetric::round(g);

  const auto h1 = constant_curvature_weight(round, 1);
  const Section s1 = section_from_divisor(Divisor::single(Vec3::UnitZ()), h1);
  CHECK(std::abs(s1.coeffs(0)) < 1e-15);
  CHECK(std::abs(s1.coeffs(1) - 1.0 / std::sqrt(2 * kPi)) < 1e-12);

  const auto h2 = constant_curvature_weight(round, 2);
  const Section s2 = section_from_divisor(Divisor::single(Vec3::UnitZ(), 2), h2);
  CHECK(std::abs(s2.coeffs(0)) + std::abs(s2.coeffs(1)) < 1e-15);
  CHECK(s2.coeffs(2).imag() == 0.0);
  CHECK(s2.coeffs(2).real() > 0.0);

  CHECK_THROWS_AS(section_from_divisor(Divisor::single(Vec3::UnitZ()), h2), PreconditionError);

  SECTION("roots recover the divisor") {
    const SurfaceMetric bumped(g, {HarmonicTerm{1, 0, 0.3}});
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + trial % 4;
      const auto h = constant_curvature_weight(bumped, n);
      const Divisor d = Divisor::random(n, rng);
      const Section s = section_from_divisor(d, h);
      CHECK(l2_norm(h.gram(), s) == Approx(1.0).epsilon(1e-10));
      // affine polynomial a_0 + a_1 z + ... in z = z1 / z0 = tan(theta/2) e^{i phi}
      Eigen::PolynomialSolver<cdouble, Eigen::Dynamic> solver;
      solver.compute(s.coeffs);
      std::vector<Vec3> found;
      for (Eigen::Index k = 0; k < solver.roots().size(); ++k) {
        const cdouble z = solver.roots()(k);
        const double th = 2 * std::atan(std::abs(z)), ph = std::arg(z);
        found.push_back(unit_vector(th, ph));
      }
      for (const auto& p : d.points()) {
        double best = 1e9;
        for (const auto& q : found) best = std::min(best, (p.position - q).norm());
        CHECK(best < 1e-8);
      }
    }
  }

  SECTION("permutation of divisor points leaves the section unchanged") {
    const auto h3 = constant_curvature_weight(round, 3);
    std::mt19937_64 rng(4);
    const Divisor d = Divisor::random(3, rng);
    std::vector<DivisorPoint> pts(d.points().begin(), d.points().end());
    std::reverse(pts.begin(), pts.end());
    const Section a = section_from_divisor(d, h3);
    const Section b = section_from_divisor(Divisor(pts), h3);
    CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("evaluate_norm", "[bundle]") {
  const auto g = make_grid(63);
  const SurfaceMetric round = SurfaceMetric::round(g);
  const auto h0 = constant_curvature_weight(round, 0);
  const GridFunction n0 = evaluate_norm(section_from_divisor(Divisor(), h0), h0);
  for (double v : n0.values())
    CHECK(v == Approx(1.0 / (4 * kPi)).epsilon(1e-13));

  const auto h1 = constant_curvature_weight(round, 1);
  const GridFunction n1 = evaluate_norm(section_from_divisor(Divisor::single(Vec3::UnitZ()), h1), h1);
  double err = 0.0, grid_max = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k) {
    const double expect = std::pow(std::sin(g->node_theta(k) / 2), 2) / (2 * kPi);
    err = std::max(err, std::abs(n1[k] - expect));
    grid_max = std::max(grid_max, n1[k]);
  }
  CHECK(err < 1e-14);
  CHECK(grid_max == Approx(1.0 / (2 * kPi)).epsilon(1e-3));

  SECTION("integral matches the gram quadratic form") {
    const SurfaceMetric m(g, {HarmonicTerm{1, 0, 0.3}});
    const auto h = constant_curvature_weight(m, 3);
    Eigen::VectorXcd c(4);
    c << cdouble(0.3, -1), cdouble(2, 0.5), cdouble(-0.7, 0.1), cdouble(0.2, 0.9);
    const Section s(c);
    CHECK(integrate(evaluate_norm(s, h), m) == Approx(l2_inner(h.gram(), s, s).real()).epsilon(1e-10));
  }

  SECTION("rotating the divisor rotates the norm field") {
    const auto h2 = constant_curvature_weight(round, 2);
    std::mt19937_64 rng(8);
    const Divisor d = Divisor::random(2, rng);
    const Eigen::Matrix3d R =
        Eigen::AngleAxisd(0.9, Vec3(1, 2, -0.5).normalized()).toRotationMatrix();
    const Section a = section_from_divisor(d, h2);
    const Section b = section_from_divisor(d.rotated(R), h2);
    double worst = 0.0;
    for (std::size_t k = 0; k < g->size(); k += 7) {
      const Vec3 x = unit_vector(g->node_theta(k), g->node_phi(k));
      worst = std::max(worst, std::abs(h2.norm_squared_at(a, x) - h2.norm_squared_at(b, R * x)));
    }
    CHECK(worst < 1e-8);
  }

  SECTION("well conditioned at both poles") {
    const auto h3 = constant_curvature_weight(round, 3);
    const Section s = section_from_divisor(Divisor::single(-Vec3::UnitZ(), 3), h3);
    CHECK(h3.norm_squared_at(s, -Vec3::UnitZ()) < 1e-30);
    CHECK(h3.norm_squared_at(s, Vec3::UnitZ()) == Approx(4.0 / (4 * kPi)).epsilon(1e-12));
  }
}

TEST_CASE("sup_norm_alpha", "[bundle]") {
  const auto g = make_grid(63);
  const SurfaceMetric round = SurfaceMetric::round(g);
  CHECK(sup_norm_alpha(constant_curvature_weight(round, 0), 100).alpha ==
        Approx(1.0 / std::sqrt(4 * kPi)).epsilon(1e-12));
  const auto h1 = constant_curvature_weight(round, 1);
  const AlphaEstimate a1 = sup_norm_alpha(h1, 200);
  CHECK(a1.alpha == Approx(1.0 / std::sqrt(2 * kPi)).epsilon(0.01));
  CHECK(a1.l_max == 63);

  const SurfaceMetric m(g, {HarmonicTerm{1, 0, 0.3}});
  const auto h2 = constant_curvature_weight(m, 2);
  double prev = 0.0;
  for (int samples : {100, 200, 400, 800}) {
    const double a = sup_norm_alpha(h2, samples).alpha;
    CHECK(a >= prev);
    prev = a;
  }
  CHECK_THROWS_AS(sup_norm_alpha(h1, 99), PreconditionError);
}

TEST_CASE("divisor validation", "[bundle]") {
  CHECK_THROWS_AS(Divisor({DivisorPoint{Vec3::Zero(), 1}}), PreconditionError);
  CHECK_THROWS_AS(Divisor({DivisorPoint{Vec3::UnitX(), 0}}), PreconditionError);
  const Divisor d({DivisorPoint{Vec3(0, 0, 3), 2}, DivisorPoint{Vec3(1, 1, 0), 1}});
  CHECK(d.degree() == 3);
  for (const auto& p : d.points()) CHECK(p.position.norm() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("homogeneous coordinate derivative", "[bundle]") {
  // central differences along great circles through points in both hemispheres
  for (const Vec3& p : {unit_vector(0.4, 1.0), unit_vector(2.5, -2.0), unit_vector(1.5, 0.3)}) {
    const Vec3 t = p.cross(Vec3(0.3, -0.2, 1.0)).normalized();
    const double h = 1e-6;
    const auto zp = homogeneous_coordinates(std::cos(h) * p + std::sin(h) * t);
    const auto zm = homogeneous_coordinates(std::cos(h) * p - std::sin(h) * t);
    const auto dz = homogeneous_coordinates_derivative(p, t);
    for (int c = 0; c < 2; ++c) CHECK(std::abs((zp[c] - zm[c]) / (2 * h) - dz[c]) < 1e-8);
  }
}
