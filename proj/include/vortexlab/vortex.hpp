#pragma once

/// \file
/// Vortices from the scalar reduction phi = sqrt(eps) e^{u/2} phihat_D:
///   Delta u - eps/|Sigma| + eps |phihat_D|^2 e^u = 0,
/// solved by damped Newton; field reconstruction and the pseudo-vortex
/// deviation statistics.

#include <algorithm>
#include <cmath>
#include <vector>

#include "vortexlab/bundle.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/surface_metric.hpp"

namespace vortexlab {

struct NewtonOptions {
  int max_iter = 50;
  double residual_tol = 1e-9;  // L2 norm of the equation residual
  double step_tol = 1e-10;     // C0 norm of the last Newton step
  SolverOptions linear;
};

struct VortexSolution {
  Divisor divisor;
  double eps = 0.0;
  double tau = 0.0;  // (4 pi n + eps) / |Sigma|
  GridFunction u;
  std::vector<double> u_coeffs;
  Section section;          // phihat_D
  GridFunction section_norm2;  // |phihat_D|_h^2
  double residual = 0.0;
  int newton_iters = 0;
  double last_step = 0.0;
  /// |int eps |phihat|^2 e^u dA_g - eps| / eps, i.e. relative error of ||phi||^2 = eps.
  double bradlow_residual = 0.0;
  std::vector<double> residual_history;
};

namespace detail {

/// Residual Delta_g u - eps/|Sigma| + eps |phihat|^2 e^u at the nodes.
inline GridFunction vortex_residual(const SurfaceMetric& m, std::span<const double> u_coeffs,
                                    const GridFunction& u, const GridFunction& phi2, double eps) {
  const auto& grid = m.grid();
  std::vector<double> du(u_coeffs.size());
  for (std::size_t k = 0; k < du.size(); ++k) {
    const double l = grid.degree(k);
    du[k] = l * (l + 1.0) * u_coeffs[k];
  }
  GridFunction f = synthesize(m.grid_ptr(), du);
  const auto e2 = m.conformal_factor();
  const double c = eps / m.area();
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = f[k] / e2[k] - c + eps * phi2[k] * std::exp(u[k]);
  return f;
}

}  // namespace detail

/// Solves the scalar vortex equation for divisor d by Newton iteration from
/// u = 0, each step a Helmholtz solve with a = eps |phihat|^2 e^u, with
/// Armijo backtracking on the L2 residual.
inline VortexSolution solve_vortex(const Divisor& d, double eps, const HermitianStructure& h,
                                   const NewtonOptions& options = {}) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("solve_vortex: eps must lie in (0, 1)");
  if (d.degree() != h.degree())
    throw PreconditionError("solve_vortex: divisor degree does not match bundle degree");
  const SurfaceMetric& m = h.metric();
  const auto& grid = m.grid();
  const int n = h.degree();

  VortexSolution s{d, eps, (4.0 * kPi * n + eps) / m.area(), GridFunction(m.grid_ptr()),
                   std::vector<double>(grid.num_coeffs(), 0.0), section_from_divisor(d, h),
                   GridFunction(m.grid_ptr())};
  s.section_norm2 = evaluate_norm(s.section, h);

  GridFunction f = detail::vortex_residual(m, s.u_coeffs, s.u, s.section_norm2, eps);
  double fnorm = detail::g_l2_norm(f, m);
  s.residual_history.push_back(fnorm);
  double last_step = fnorm > options.residual_tol ? INFINITY : 0.0;
  int it = 0;
  while (!(fnorm <= options.residual_tol && last_step <= options.step_tol)) {
    if (it >= options.max_iter)
      throw ConvergenceError("solve_vortex: Newton iteration stagnated", fnorm, it);
    ++it;
    GridFunction a(m.grid_ptr());
    GridFunction rhs(m.grid_ptr());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = eps * s.section_norm2[k] * std::exp(s.u[k]);
      rhs[k] = -f[k];
    }
    const HelmholtzReport step = solve_helmholtz_report(a, rhs, m, options.linear);
    double t = 1.0;
    std::vector<double> trial_c(s.u_coeffs.size());
    GridFunction trial_u(m.grid_ptr());
    GridFunction trial_f(m.grid_ptr());
    double trial_norm = fnorm;
    for (int halvings = 0;; ++halvings) {
      for (std::size_t k = 0; k < trial_c.size(); ++k) trial_c[k] = s.u_coeffs[k] + t * step.coeffs[k];
      grid.synthesize(trial_c, trial_u.values());
      trial_f = detail::vortex_residual(m, trial_c, trial_u, s.section_norm2, eps);
      trial_norm = detail::g_l2_norm(trial_f, m);
      // near the roundoff floor the residual cannot decrease; accept full steps there
      if (trial_norm <= (1.0 - 1e-4 * t) * fnorm || fnorm <= options.residual_tol) break;
      if (halvings >= 30) throw ConvergenceError("solve_vortex: line search failed", fnorm, it);
      t *= 0.5;
    }
    double step_c0 = 0.0;
    for (std::size_t k = 0; k < trial_u.size(); ++k)
      step_c0 = std::max(step_c0, std::abs(trial_u[k] - s.u[k]));
    s.u_coeffs = trial_c;
    s.u = trial_u;
    f = trial_f;
    fnorm = trial_norm;
    last_step = step_c0;
    s.residual_history.push_back(fnorm);
  }
  s.residual = fnorm;
  s.newton_iters = it;
  s.last_step = last_step;

  GridFunction density(m.grid_ptr());
  for (std::size_t k = 0; k < density.size(); ++k)
    density[k] = eps * s.section_norm2[k] * std::exp(s.u[k]);
  s.bradlow_residual = std::abs(integrate(density, m) - eps) / eps;
  return s;
}

struct ReconstructedFields {
  GridFunction phi_norm;  // |phi|_h = sqrt(eps) e^{u/2} |phihat|_h
  GridFunction magnetic;  // *F_A = 2 pi n / |Sigma| + Delta u / 2
};

inline ReconstructedFields reconstruct_fields(const VortexSolution& s, const HermitianStructure& h) {
  const SurfaceMetric& m = h.metric();
  ReconstructedFields out{GridFunction(m.grid_ptr()), GridFunction(m.grid_ptr())};
  const GridFunction lap_u = laplace_beltrami(s.u, m);
  const double flux_density = 2.0 * kPi * h.degree() / m.area();
  for (std::size_t k = 0; k < out.phi_norm.size(); ++k) {
    out.phi_norm[k] = std::sqrt(s.eps * std::exp(s.u[k]) * s.section_norm2[k]);
    out.magnetic[k] = flux_density + 0.5 * lap_u[k];
  }
  return out;
}

/// E = int (|d_A phi|^2/2 + (*F_A)^2/2 + (tau - |phi|^2)^2/8) dA_g.
/// For a holomorphic section |d_A phi|^2 = |phi|^2 *F_A - Delta|phi|^2 / 2,
/// so only the reconstructed |phi|^2 and *F_A enter; the second vortex
/// equation is not assumed.
inline double energy(const VortexSolution& s, const HermitianStructure& h) {
  const SurfaceMetric& m = h.metric();
  const ReconstructedFields f = reconstruct_fields(s, h);
  GridFunction phi2(m.grid_ptr());
  for (std::size_t k = 0; k < phi2.size(); ++k) phi2[k] = f.phi_norm[k] * f.phi_norm[k];
  const GridFunction lap_phi2 = laplace_beltrami(phi2, m);
  GridFunction density(m.grid_ptr());
  for (std::size_t k = 0; k < density.size(); ++k) {
    const double b = f.magnetic[k];
    const double grad2 = phi2[k] * b - 0.5 * lap_phi2[k];
    const double pot = s.tau - phi2[k];
    density[k] = 0.5 * grad2 + 0.5 * b * b + 0.125 * pot * pot;
  }
  return integrate(density, m);
}

struct PseudoVortexDeviation {
  double field_dev = 0.0;      // max |e^{u/2} - 1| |phihat|_h
  double curvature_dev = 0.0;  // max |Delta u| / 2 = max |*F_A - *F_Ahat|
  double u_c0 = 0.0;           // max |u|
};

inline PseudoVortexDeviation pseudo_vortex_deviation(const VortexSolution& s,
                                                     const HermitianStructure& h) {
  const GridFunction lap_u = laplace_beltrami(s.u, h.metric());
  PseudoVortexDeviation d;
  for (std::size_t k = 0; k < s.u.size(); ++k) {
    d.field_dev = std::max(d.field_dev,
                           std::abs(std::exp(0.5 * s.u[k]) - 1.0) * std::sqrt(s.section_norm2[k]));
    d.curvature_dev = std::max(d.curvature_dev, 0.5 * std::abs(lap_u[k]));
    d.u_c0 = std::max(d.u_c0, std::abs(s.u[k]));
  }
  return d;
}

}  // namespace vortexlab
