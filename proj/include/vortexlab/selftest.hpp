#pragma once

/// \file
/// Closed-form checks run by `vortexlab selftest`: exact identities that any
/// build must reproduce at a small resolution.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vortexlab/bundle.hpp"
#include "vortexlab/experiment.hpp"
#include "vortexlab/moduli_metric.hpp"
#include "vortexlab/spectral.hpp"
#include "vortexlab/surface_metric.hpp"
#include "vortexlab/vortex.hpp"

namespace vortexlab {

struct SelftestResult {
  std::string name;
  bool passed = false;
  double error = 0.0;
  std::string message;
};

inline std::vector<SelftestResult> run_selftest(int l_max = 15) {
  const GridPtr g = make_grid(l_max);
  const SurfaceMetric round = SurfaceMetric::round(g);
  const GridFunction one = GridFunction::from_function(g, [](double, double) { return 1.0; });
  const GridFunction y10 = harmonic(g, 1, 0);

  std::vector<SelftestResult> out;
  auto check = [&](const std::string& name, double tol, const std::function<double()>& err) {
    SelftestResult r{name};
    try {
      r.error = err();
      r.passed = r.error <= tol;
    } catch (const std::exception& e) {
      r.message = e.what();
      r.error = INFINITY;
    }
    out.push_back(r);
  };
  auto max_diff = [](const GridFunction& a, const GridFunction& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
  };

  check("integrate: round area is 4 pi", 1e-12, [&] { return std::abs(integrate(one, round) - 4 * kPi); });
  check("integrate: Y10 has zero mean", 1e-13, [&] { return std::abs(integrate(y10, round)); });
  check("laplace_beltrami: Y10 eigenvalue 2", 1e-12,
        [&] { return max_diff(laplace_beltrami(y10, round), y10 * 2.0); });
  check("laplace_beltrami: constants are harmonic", 1e-12,
        [&] { return max_diff(laplace_beltrami(one * 3.0, round), one * 0.0); });
  check("solve_poisson: 2 Y10 -> Y10", 1e-12, [&] { return max_diff(solve_poisson(y10 * 2.0, round), y10); });
  check("solve_poisson: 0 -> 0", 0.0, [&] { return max_diff(solve_poisson(one * 0.0, round), one * 0.0); });
  check("solve_poisson: 6 Y20 + 2 Y11 -> Y20 + Y11", 1e-12, [&] {
    return max_diff(solve_poisson(harmonic(g, 2, 0, 6.0) + harmonic(g, 1, 1, 2.0), round),
                    harmonic(g, 2, 0) + harmonic(g, 1, 1));
  });
  check("solve_helmholtz: a = 1, b = 3 Y10 -> Y10", 1e-10,
        [&] { return max_diff(solve_helmholtz(one, y10 * 3.0, round), y10); });
  check("solve_helmholtz: a = 1, b = c -> c", 1e-10,
        [&] { return max_diff(solve_helmholtz(one, one * 0.7, round), one * 0.7); });
  check("first_eigenvalue: round sphere is 2", 1e-8, [&] { return std::abs(round.lambda1() - 2.0) / 2.0; });
  check("first_eigenvalue: rho = c scales by e^{-2c}", 1e-8, [&] {
    const SurfaceMetric m(g, {HarmonicTerm{0, 0, 0.3 * std::sqrt(4 * kPi)}});
    return std::abs(first_eigenvalue(m) - 2.0 * std::exp(-0.6)) / 2.0;
  });
  check("norms: f = 1 on the round sphere", 1e-12, [&] {
    const Norms n = norms(one, round);
    return std::abs(n.l2 - std::sqrt(4 * kPi)) + std::abs(n.h1 - std::sqrt(4 * kPi)) + std::abs(n.c0 - 1.0);
  });
  check("norms: Y10 has h1^2 = 3 l2^2", 1e-12, [&] {
    const Norms n = norms(y10, round);
    return std::abs(n.h1 * n.h1 - 3.0 * n.l2 * n.l2);
  });

  check("constant_curvature_weight: round sphere has w = 0", 1e-12, [&] {
    const auto h = constant_curvature_weight(round, 3);
    return max_diff(h.w(), one * 0.0);
  });
  check("gram_matrix: n = 0 is [4 pi]", 1e-12, [&] {
    return std::abs(gram_matrix(constant_curvature_weight(round, 0))(0, 0) - cdouble(4 * kPi));
  });
  check("section_from_divisor: double root at the north pole is a multiple of (0, 0, 1)", 1e-12, [&] {
    const auto h = constant_curvature_weight(round, 2);
    const Section s = section_from_divisor(Divisor::single(Vec3::UnitZ(), 2), h);
    return std::abs(s.coeffs(0)) + std::abs(s.coeffs(1)) + std::abs(s.coeffs(2) - std::abs(s.coeffs(2)));
  });
  check("evaluate_norm: n = 0 constant section is 1 / 4 pi", 1e-12, [&] {
    const auto h = constant_curvature_weight(round, 0);
    return max_diff(evaluate_norm(section_from_divisor(Divisor(), h), h), one * (1.0 / (4 * kPi)));
  });
  check("sup_norm_alpha: n = 0 gives 1 / sqrt(4 pi)", 1e-12, [&] {
    return std::abs(sup_norm_alpha(constant_curvature_weight(round, 0), 100).alpha - 1.0 / std::sqrt(4 * kPi));
  });

  check("solve_vortex: n = 0 gives u = 0", 1e-12, [&] {
    const auto h = constant_curvature_weight(round, 0);
    return max_diff(solve_vortex(Divisor(), 0.3, h).u, one * 0.0);
  });
  check("reconstruct_fields: n = 0 has no field strength and |phi| = sqrt(eps / 4 pi)", 1e-12, [&] {
    const auto h = constant_curvature_weight(round, 0);
    const auto f = reconstruct_fields(solve_vortex(Divisor(), 0.3, h), h);
    return max_diff(f.magnetic, one * 0.0) + max_diff(f.phi_norm, one * std::sqrt(0.3 / (4 * kPi)));
  });
  check("pseudo_vortex_deviation: n = 0 is zero", 1e-12, [&] {
    const auto h = constant_curvature_weight(round, 0);
    const auto d = pseudo_vortex_deviation(solve_vortex(Divisor(), 0.3, h), h);
    return d.field_dev + d.curvature_dev + d.u_c0;
  });

  check("horizontal_basis: n = 2 frame has 4 directions", 0.0, [&] {
    const auto h = constant_curvature_weight(round, 2);
    const Section s = section_from_divisor(Divisor::single(Vec3::UnitX(), 2), h);
    return std::abs(static_cast<double>(horizontal_basis(s, h.gram()).directions.size()) - 4.0);
  });
  check("horizontal_lift: vertical direction is rejected", 0.0, [&] {
    const auto h = constant_curvature_weight(round, 1);
    const Section s = section_from_divisor(Divisor::single(Vec3::UnitZ()), h);
    try {
      horizontal_lift(horizontal_basis(s, h.gram()), s);
    } catch (const DegenerateDirectionError&) {
      return 0.0;
    }
    return 1.0;
  });
  check("horizontal_lift: removes phihat and i phihat parts", 1e-12, [&] {
    const auto h = constant_curvature_weight(round, 2);
    const Section s = section_from_divisor(Divisor::single(Vec3::UnitY(), 2), h);
    const TangentFrame f = horizontal_basis(s, h.gram());
    const Section v = f.directions[0] + s * cdouble(0.5, 0.3);
    return (horizontal_lift(f, v).coeffs - f.directions[0].coeffs).cwiseAbs().maxCoeff();
  });
  check("fs_metric_coeff: vertical 0, horizontal unit 1", 1e-12, [&] {
    const auto h = constant_curvature_weight(round, 1);
    const Section s = section_from_divisor(Divisor::single(Vec3::UnitZ()), h);
    const TangentFrame f = horizontal_basis(s, h.gram());
    return std::abs(fs_metric_coeff(s, s, h.gram())) +
           std::abs(fs_metric_coeff(s, f.directions[0], h.gram()) - 1.0);
  });
  check("lax_milgram_check: b = 0 gives v = 0", 0.0, [&] {
    const auto r = lax_milgram_check(one, one * 0.0, round);
    return r.lhs + (r.satisfied ? 0.0 : 1.0);
  });
  check("lax_milgram_check: a = 1, b = 3 Y10", 1e-10, [&] {
    const auto r = lax_milgram_check(one, y10 * 3.0, round);
    return std::abs(r.lhs - std::sqrt(3.0)) + (r.satisfied ? 0.0 : 1.0);
  });

  check("fs_spectrum: n = 1 clusters 8 x 3 and 24 x 5", 0.0, [&] {
    const auto r = fs_spectrum(1, 2);
    return std::abs(r.clusters[1].mean - 8) + std::abs(r.clusters[1].degeneracy - 3) +
           std::abs(r.clusters[2].mean - 24) + std::abs(r.clusters[2].degeneracy - 5);
  });
  check("fs_spectrum: n = 2, k = 1 is 12 x 8", 0.0, [&] {
    const auto r = fs_spectrum(2, 1);
    return std::abs(r.clusters[1].mean - 12) + std::abs(r.clusters[1].degeneracy - 8);
  });
  check("ratio_bounds: eps = 0 gives (1, 1)", 0.0, [&] {
    const auto b = ratio_bounds(2.0, 0.0, 1);
    return std::abs(b.lower - 1) + std::abs(b.upper - 1);
  });
  check("fit_convergence_order: dev = eps has slope 1", 1e-12, [&] {
    const auto f = fit_convergence_order({{0.4, 0.4}, {0.2, 0.2}, {0.1, 0.1}, {0.05, 0.05}});
    return std::abs(f.slope - 1) + std::abs(f.r_squared - 1);
  });
  check("fit_convergence_order: dev = 3 eps^2", 1e-12, [&] {
    const auto f = fit_convergence_order({{0.4, 0.48}, {0.2, 0.12}, {0.1, 0.03}, {0.05, 0.0075}});
    return std::abs(f.slope - 2) + std::abs(f.intercept - std::log(3.0));
  });
  return out;
}

}  // namespace vortexlab
