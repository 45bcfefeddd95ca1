#pragma once

/// \file
/// The n = 1 moduli space M_1 = CP^1 as a conformal sphere: the g_eps and
/// Fubini-Study conformal factors over a moduli grid, Laplace-Beltrami spectra
/// on M_1, the closed-form Fubini-Study spectrum of CP^n and the two-sided
/// eigenvalue-ratio bounds.
///
/// Conformal factors are stored relative to the round unit sphere of
/// divisor positions: g = w g_round. In the stereographic chart zeta of the
/// moduli sphere, g = Phi |dzeta|^2 with Phi = 4 w / (1 + |zeta|^2)^2.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vortexlab/bundle.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/moduli_metric.hpp"
#include "vortexlab/parallel.hpp"
#include "vortexlab/sphere_grid.hpp"
#include "vortexlab/surface_metric.hpp"
#include "vortexlab/vortex.hpp"

namespace vortexlab {

struct EigenCluster {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  int degeneracy = 0;
};

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending, with multiplicity
  std::vector<EigenCluster> clusters;
};

/// Groups ascending eigenvalues whose consecutive relative gap is below rel_gap.
inline std::vector<EigenCluster> cluster_eigenvalues(const std::vector<double>& ev,
                                                     double rel_gap = 1e-2) {
  std::vector<EigenCluster> out;
  for (double v : ev) {
    if (!out.empty()) {
      auto& c = out.back();
      const double scale = std::max({std::abs(c.max), std::abs(v), 1e-300});
      if (std::abs(v - c.max) <= rel_gap * scale || (c.max == 0.0 && std::abs(v) <= 1e-8)) {
        c.mean = (c.mean * c.degeneracy + v) / (c.degeneracy + 1);
        c.max = v;
        ++c.degeneracy;
        continue;
      }
    }
    out.push_back({v, v, v, 1});
  }
  return out;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Eigenvalue 4k(n+k) of the Fubini-Study Laplacian on CP^n.
inline double fs_eigenvalue(int n, int k) { return 4.0 * k * (n + k); }

/// Multiplicity of fs_eigenvalue(n, k): dimension of the degree-(k, k)
/// harmonic polynomials on C^{n+1}, (n + 2k)/n * binom(n+k-1, k)^2.
inline int fs_degeneracy(int n, int k) {
  if (k == 0) return 1;
  const double b = binomial(n + k - 1, k);
  return static_cast<int>(std::llround((n + 2.0 * k) / n * b * b));
}

inline SpectrumReport fs_spectrum(int n, int k_max) {
  if (n < 1) throw PreconditionError("fs_spectrum: n must be at least 1");
  if (k_max < 1) throw PreconditionError("fs_spectrum: k_max must be at least 1");
  SpectrumReport r;
  for (int k = 0; k <= k_max; ++k) {
    const double lam = fs_eigenvalue(n, k);
    const int d = fs_degeneracy(n, k);
    r.eigenvalues.insert(r.eigenvalues.end(), static_cast<std::size_t>(d), lam);
    r.clusters.push_back({lam, lam, lam, d});
  }
  return r;
}

struct RatioBounds {
  double lower = 1.0;
  double upper = 1.0;
};

/// (1 - C eps)^n / (1 + C eps)^{n+1} <= lambda_k(g_eps) / lambda_k(g_0)
///   <= (1 + C eps)^n / (1 - C eps)^{n+1}.
inline RatioBounds ratio_bounds(double C, double eps, int n) {
  if (!(C > 0.0)) throw PreconditionError("ratio_bounds: C must be positive");
  if (!(eps >= 0.0)) throw PreconditionError("ratio_bounds: eps must be nonnegative");
  if (n < 1) throw PreconditionError("ratio_bounds: n must be at least 1");
  if (C * eps >= 1.0) throw DomainError("ratio_bounds: eps must be below 1/C");
  const double p = 1.0 + C * eps, q = 1.0 - C * eps;
  return {std::pow(q, n) / std::pow(p, n + 1), std::pow(p, n) / std::pow(q, n + 1)};
}

/// A conformal metric w g_round on the moduli sphere of n = 1 divisors.
struct ModuliMetricField {
  GridPtr moduli_grid;
  double eps = 0.0;  // 0 for the Fubini-Study field
  GridFunction w;    // round-relative conformal factor of g_eps
  GridFunction Phi;  // conformal factor in the stereographic chart zeta
  GridFunction anisotropy_field;
  double anisotropy = 0.0;  // max over nodes
  GridFunction w_fs;        // the same construction for g_0
  GridFunction deviation;   // ||G_eps - I||_2 per node
  double max_deviation = 0.0;
  double max_newton_residual = 0.0;
  double max_bradlow_residual = 0.0;
  double max_linear_residual = 0.0;
  bool discretization_failure = false;  // anisotropy above 1e-2

  /// int w dA_round: the volume of g_eps (g_eps = g / eps).
  double volume() const { return integrate_round(w); }
  double volume_fs() const { return integrate_round(w_fs); }

  /// Field from a prescribed factor, e.g. the Fubini-Study w = 1/4.
  static ModuliMetricField from_factor(GridFunction w, double eps = 0.0) {
    const GridPtr g = w.grid_ptr();
    ModuliMetricField f{g, eps, w, GridFunction(g), GridFunction(g), 0.0, w, GridFunction(g)};
    f.Phi = chart_factor(w);
    return f;
  }

  static GridFunction chart_factor(const GridFunction& w) {
    GridFunction phi(w.grid_ptr());
    const auto& grid = w.grid();
    for (std::size_t k = 0; k < phi.size(); ++k) {
      // |zeta|^2 = tan^2(theta/2) for the projection from the south pole
      const double t = std::tan(0.5 * grid.node_theta(k));
      const double s = 1.0 + t * t;
      phi[k] = 4.0 * w[k] / (s * s);
    }
    return phi;
  }

 private:
  static double integrate_round(const GridFunction& f) {
    double s = 0.0;
    const auto& wts = f.grid().weights();
    for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * wts[k];
    return s;
  }
};

namespace detail {

/// Orthonormal round tangents (e_theta, e_phi) at a moduli node.
inline std::array<Vec3, 2> round_tangents(double theta, double phi) {
  return {Vec3(std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta)),
          Vec3(-std::sin(phi), std::cos(phi), 0.0)};
}

/// Unit-norm velocity of phihat_D when the single divisor point moves along t,
/// in the phase of `base`, before horizontal projection.
inline Section section_velocity(const Divisor& d, const Section& base, const Vec3& t,
                                const Eigen::MatrixXcd& gram) {
  const Section p(divisor_polynomial(d));
  const double norm = l2_norm(gram, p);
  Eigen::Index j = 0;
  p.coeffs.cwiseAbs().maxCoeff(&j);
  const cdouble ratio = base.coeffs(j) * norm / p.coeffs(j);
  const cdouble phase = ratio / std::abs(ratio);
  return Section(divisor_polynomial_derivative(d, 0, t) * (phase / norm));
}

struct ConformalParts {
  double w = 0.0;
  double anisotropy = 0.0;
};

inline ConformalParts conformal_parts(const Eigen::Matrix2d& M) {
  const double w = 0.5 * (M(0, 0) + M(1, 1));
  const double off = std::hypot(0.5 * (M(0, 0) - M(1, 1)), 0.5 * (M(0, 1) + M(1, 0)));
  return {w, off / w};
}

}  // namespace detail

/// g_0 on the moduli sphere of n = 1 divisors directly from the projective
/// quadratic form of the path D(t) -> P_D, with off-diagonals by polarization.
inline ModuliMetricField fs_moduli_field(const HermitianStructure& h, const GridPtr& moduli_grid) {
  if (h.degree() != 1) throw PreconditionError("fs_moduli_field: bundle degree must be 1");
  GridFunction w(moduli_grid);
  GridFunction aniso(moduli_grid);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double th = moduli_grid->node_theta(k), ph = moduli_grid->node_phi(k);
    const Divisor d = Divisor::single(unit_vector(th, ph));
    const Section p(divisor_polynomial(d));
    const auto t = detail::round_tangents(th, ph);
    const Section d0(divisor_polynomial_derivative(d, 0, t[0]));
    const Section d1(divisor_polynomial_derivative(d, 0, t[1]));
    Eigen::Matrix2d M;
    M(0, 0) = fs_metric_coeff(p, d0, h.gram());
    M(1, 1) = fs_metric_coeff(p, d1, h.gram());
    M(0, 1) = M(1, 0) =
        0.25 * (fs_metric_coeff(p, d0 + d1, h.gram()) - fs_metric_coeff(p, d0 - d1, h.gram()));
    const auto parts = detail::conformal_parts(M);
    w[k] = parts.w;
    aniso[k] = parts.anisotropy;
  }
  ModuliMetricField f = ModuliMetricField::from_factor(w, 0.0);
  f.anisotropy_field = aniso;
  f.anisotropy = *std::max_element(aniso.values().begin(), aniso.values().end());
  f.discretization_failure = f.anisotropy > 1e-2;
  return f;
}

/// g_eps on the moduli sphere of n = 1 divisors: one vortex and one metric
/// assembly per moduli node, with the node's round tangents carried into the
/// horizontal frame.
inline ModuliMetricField moduli_metric_field(double eps, const SurfaceMetric& m,
                                             const HermitianStructure& h,
                                             const GridPtr& moduli_grid, int threads = 1,
                                             const NewtonOptions& options = {}) {
  if (h.degree() != 1) throw PreconditionError("moduli_metric_field: bundle degree must be 1");
  if (!h.metric().same_state(m))
    throw PreconditionError("moduli_metric_field: hermitian structure belongs to another metric");
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("moduli_metric_field: eps must lie in (0, 1)");
  const std::size_t nodes = moduli_grid->size();
  struct NodeResult {
    Eigen::Matrix2d M, M0;
    double deviation, residual, bradlow, linear;
  };
  std::vector<NodeResult> res(nodes);
  parallel_for(nodes, threads, [&](std::size_t k) {
    const double th = moduli_grid->node_theta(k), ph = moduli_grid->node_phi(k);
    const Divisor d = Divisor::single(unit_vector(th, ph));
    const VortexSolution s = solve_vortex(d, eps, h, options);
    const TangentFrame frame = horizontal_basis(s.section, h.gram());
    const MetricSample sample = assemble_metric(s, frame, h, options.linear);
    const auto t = detail::round_tangents(th, ph);
    Eigen::Matrix2d X;
    for (int a = 0; a < 2; ++a) {
      const Section v = horizontal_lift(frame, detail::section_velocity(d, s.section, t[a], h.gram()));
      X.col(a) = frame.coordinates(v);
    }
    res[k] = {X.transpose() * sample.G_eps * X, X.transpose() * X, sample.deviation, s.residual,
              s.bradlow_residual, sample.linear_residual_max};
  });

  GridFunction w(moduli_grid), w0(moduli_grid), aniso(moduli_grid), dev(moduli_grid);
  ModuliMetricField f = ModuliMetricField::from_factor(GridFunction(moduli_grid), eps);
  for (std::size_t k = 0; k < nodes; ++k) {
    const auto parts = detail::conformal_parts(res[k].M);
    w[k] = parts.w;
    aniso[k] = parts.anisotropy;
    w0[k] = detail::conformal_parts(res[k].M0).w;
    dev[k] = res[k].deviation;
    f.max_deviation = std::max(f.max_deviation, res[k].deviation);
    f.max_newton_residual = std::max(f.max_newton_residual, res[k].residual);
    f.max_bradlow_residual = std::max(f.max_bradlow_residual, res[k].bradlow);
    f.max_linear_residual = std::max(f.max_linear_residual, res[k].linear);
  }
  f.w = w;
  f.Phi = ModuliMetricField::chart_factor(w);
  f.w_fs = w0;
  f.anisotropy_field = aniso;
  f.anisotropy = *std::max_element(aniso.values().begin(), aniso.values().end());
  f.deviation = dev;
  f.discretization_failure = f.anisotropy > 1e-2;
  return f;
}

/// Lowest eigenvalues of Delta_g on (M_1, w g_round) through cluster k_max,
/// i.e. the first (k_max + 1)^2 with multiplicity.
inline SpectrumReport laplace_spectrum(const ModuliMetricField& f, int k_max, int basis_degree = 12) {
  if (k_max < 1) throw PreconditionError("laplace_spectrum: k_max must be at least 1");
  for (double v : f.w.values())
    if (!(v > 0.0)) throw PreconditionError("laplace_spectrum: conformal factor must be positive");
  if (basis_degree < k_max + 2) basis_degree = k_max + 2;
  const Eigen::VectorXd ev =
      detail::weighted_laplace_spectrum(f.moduli_grid ? *f.moduli_grid : f.w.grid(), f.w.values(),
                                        basis_degree);
  const auto count = static_cast<Eigen::Index>((k_max + 1) * (k_max + 1));
  if (ev.size() < count) throw ConvergenceError("laplace_spectrum: basis too small", 0.0, 0);
  SpectrumReport r;
  r.eigenvalues.assign(ev.data(), ev.data() + count);
  r.clusters = cluster_eigenvalues(r.eigenvalues);
  return r;
}

}  // namespace vortexlab
