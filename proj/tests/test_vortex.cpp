#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "vortexlab/vortex.hpp"

using namespace vortexlab;
using Catch::Approx;

namespace {

double c0(const GridFunction& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Longitudinal variance: largest spread of f along any latitude ring.
double ring_spread(const GridFunction& f) {
  const auto& g = f.grid();
  double worst = 0.0;
  for (int i = 0; i < g.n_theta(); ++i) {
    double lo = INFINITY, hi = -INFINITY;
    for (int j = 0; j < g.n_phi(); ++j) {
      lo = std::min(lo, f[g.node(i, j)]);
      hi = std::max(hi, f[g.node(i, j)]);
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

/// Damped fixed point for the round sphere: (Delta + k) u_{j+1} = k u_j + eps/4pi - eps |phihat|^2 e^{u_j},
/// inverted diagonally in the harmonic basis.
GridFunction picard_round(const GridFunction& phi2, double eps) {
  const auto g = phi2.grid_ptr();
  double kappa = 0.0;
  for (double v : phi2.values()) kappa = std::max(kappa, eps * v);
  GridFunction u(g, 0.0), rhs(g);
  for (int it = 0; it < 2000; ++it) {
    for (std::size_t k = 0; k < u.size(); ++k)
      rhs[k] = kappa * u[k] + eps / (4 * kPi) - eps * phi2[k] * std::exp(u[k]);
    auto c = analyze(rhs);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double l = g->degree(k);
      c[k] /= l * (l + 1) + kappa;
    }
    const GridFunction next = synthesize(g, c);
    double step = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) step = std::max(step, std::abs(next[k] - u[k]));
    u = next;
    if (step < 1e-15) break;
  }
  return u;
}

struct Case {
  SurfaceMetric metric;
  HermitianStructure h;
};

}  // namespace

TEST_CASE("solve_vortex basic cases", "[vortex]") {
  const auto g = make_grid(63);
  const SurfaceMetric round = SurfaceMetric::round(g);

  SECTION("n = 0 has u = 0") {
    const auto h = constant_curvature_weight(round, 0);
    for (double eps : {0.9, 0.3, 0.01}) {
      const auto s = solve_vortex(Divisor(), eps, h);
      CHECK(c0(s.u) < 1e-14);
      CHECK(s.tau == Approx(eps / (4 * kPi)));
    }
  }

  SECTION("north pole vortex against an independent fixed-point iteration") {
    const auto h = constant_curvature_weight(round, 1);
    const auto s = solve_vortex(Divisor::single(Vec3::UnitZ()), 0.1, h);
    const GridFunction u_ref = picard_round(s.section_norm2, 0.1);
    CHECK(std::abs(c0(s.u) - c0(u_ref)) < 1e-7);
    double diff = 0.0;
    for (std::size_t k = 0; k < s.u.size(); ++k) diff = std::max(diff, std::abs(s.u[k] - u_ref[k]));
    CHECK(diff < 1e-7);
    CHECK(ring_spread(s.u) < 1e-9);
    CHECK(s.residual <= 1e-9);
    CHECK(s.last_step <= 1e-10);
  }

  SECTION("preconditions") {
    const auto h = constant_curvature_weight(round, 1);
    CHECK_THROWS_AS(solve_vortex(Divisor::single(Vec3::UnitZ()), 0.0, h), PreconditionError);
    CHECK_THROWS_AS(solve_vortex(Divisor::single(Vec3::UnitZ()), 1.0, h), PreconditionError);
    CHECK_THROWS_AS(solve_vortex(Divisor::single(Vec3::UnitZ(), 2), 0.1, h), PreconditionError);
  }

  SECTION("Newton stagnation is reported") {
    const auto h = constant_curvature_weight(round, 1);
    NewtonOptions opts;
    opts.max_iter = 1;
    CHECK_THROWS_AS(solve_vortex(Divisor::single(Vec3::UnitX()), 0.9, h, opts), ConvergenceError);
  }
}

TEST_CASE("vortex invariants over metrics, degrees and divisors", "[vortex]") {
  const auto g = make_grid(63);
  std::vector<SurfaceMetric> metrics{SurfaceMetric::round(g), SurfaceMetric(g, {HarmonicTerm{1, 0, 0.3}})};
  std::mt19937_64 rng(2024);
  for (const auto& m : metrics) {
    for (int n : {1, 2, 3}) {
      const auto h = constant_curvature_weight(m, n);
      for (int trial = 0; trial < 2; ++trial) {
        const Divisor d = Divisor::random(n, rng);
        for (double eps : {0.9, 0.4, 0.025}) {
          const auto s = solve_vortex(d, eps, h);
          INFO("n = " << n << " eps = " << eps);
          CHECK(s.residual <= 1e-9);
          CHECK(s.bradlow_residual <= 1e-8);
          // energy saturates the topological bound
          CHECK(std::abs(energy(s, h) - kPi * s.tau * n) <= 1e-6 * kPi * s.tau * n);
          const auto f = reconstruct_fields(s, h);
          CHECK(std::abs(integrate(f.magnetic, m) - 2 * kPi * n) < 1e-8);
          GridFunction second(g);
          for (std::size_t k = 0; k < second.size(); ++k)
            second[k] = f.magnetic[k] - 0.5 * (s.tau - f.phi_norm[k] * f.phi_norm[k]);
          CHECK(detail::g_l2_norm(second, m) <= 1e-8);
          // the maximum principle bound on u
          const double mean = integrate(s.u, m) / m.area();
          double spread = 0.0;
          for (double v : s.u.values()) spread = std::max(spread, std::abs(v - mean));
          CHECK(pseudo_vortex_deviation(s, h).u_c0 <= 2 * spread);
          // residual decreases monotonically once damping applies
          for (std::size_t i = 1; i < s.residual_history.size(); ++i)
            CHECK(s.residual_history[i] <= s.residual_history[i - 1] * (1 + 1e-12) + 1e-14);
        }
      }
    }
  }
}

TEST_CASE("pseudo-vortex deviation scales linearly in eps", "[vortex]") {
  const auto g = make_grid(63);
  const SurfaceMetric round = SurfaceMetric::round(g);
  const auto h0 = constant_curvature_weight(round, 0);
  const auto d0 = pseudo_vortex_deviation(solve_vortex(Divisor(), 0.2, h0), h0);
  CHECK(d0.field_dev + d0.curvature_dev + d0.u_c0 == 0.0);

  const auto h = constant_curvature_weight(round, 1);
  const Divisor north = Divisor::single(Vec3::UnitZ());
  const auto a = pseudo_vortex_deviation(solve_vortex(north, 0.2, h), h);
  const auto b = pseudo_vortex_deviation(solve_vortex(north, 0.1, h), h);
  CHECK(a.field_dev / b.field_dev == Approx(2.0).epsilon(0.25));
  CHECK(a.u_c0 / b.u_c0 == Approx(2.0).epsilon(0.25));

  SECTION("u_c0 / eps is nearly constant over the default sweep") {
    const SurfaceMetric m(g, {HarmonicTerm{1, 0, 0.3}});
    const auto h2 = constant_curvature_weight(m, 2);
    std::mt19937_64 rng(1);
    const Divisor d = Divisor::random(2, rng);
    double lo = INFINITY, hi = 0.0;
    for (double eps : {0.4, 0.2, 0.1, 0.05, 0.025}) {
      const double r = pseudo_vortex_deviation(solve_vortex(d, eps, h2), h2).u_c0 / eps;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    CHECK((hi - lo) / hi <= 0.3);
  }
}

TEST_CASE("solution depends continuously on the divisor", "[vortex]") {
  const auto g = make_grid(63);
  const SurfaceMetric m(g, {HarmonicTerm{1, 0, 0.3}});
  const auto h = constant_curvature_weight(m, 2);
  const Divisor a = Divisor::from_angles(std::vector<std::array<double, 3>>{{1.0, 0.5, 1}, {2.0, -1.0, 1}});
  const Divisor b = Divisor::from_angles(std::vector<std::array<double, 3>>{{1.0 + 1e-4, 0.5, 1}, {2.0, -1.0, 1}});
  const auto sa = solve_vortex(a, 0.4, h), sb = solve_vortex(b, 0.4, h);
  double diff = 0.0;
  for (std::size_t k = 0; k < sa.u.size(); ++k) diff = std::max(diff, std::abs(sa.u[k] - sb.u[k]));
  CHECK(diff <= 1e-2);
}
