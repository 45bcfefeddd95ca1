#pragma once

/// \file
/// Conformal metrics e^{2 rho} g_round on the two-sphere and the elliptic
/// operators they induce: quadrature, Laplace-Beltrami (positive spectrum),
/// Poisson and Helmholtz solves, the first nonzero eigenvalue and the
/// L2 / H1 / C0 norms.

#include <Eigen/Dense>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "vortexlab/errors.hpp"
#include "vortexlab/sphere_grid.hpp"

namespace vortexlab {

class SurfaceMetric;
double first_eigenvalue(const SurfaceMetric& m, int basis_degree = 16);

/// The metric e^{2 rho} g_round on S^2. Cheap to copy; all copies share the
/// same immutable state.
class SurfaceMetric {
 public:
  /// rho given by its real spherical-harmonic expansion.
  SurfaceMetric(GridPtr grid, std::vector<HarmonicTerm> rho_terms)
      : SurfaceMetric(from_harmonics(grid, rho_terms), rho_terms) {}

  /// rho given by its nodal values.
  explicit SurfaceMetric(GridFunction rho) : SurfaceMetric(std::move(rho), {}) {}

  static SurfaceMetric round(GridPtr grid) { return SurfaceMetric(GridFunction(std::move(grid))); }

  const SphereGrid& grid() const noexcept { return state_->rho.grid(); }
  const GridPtr& grid_ptr() const noexcept { return state_->rho.grid_ptr(); }
  const GridFunction& rho() const noexcept { return state_->rho; }
  std::span<const HarmonicTerm> rho_terms() const noexcept { return state_->terms; }

  /// e^{2 rho} at each node.
  std::span<const double> conformal_factor() const noexcept { return state_->e2rho; }
  /// Node weights of dA_g = e^{2 rho} dA_round.
  std::span<const double> area_weights() const noexcept { return state_->area_weights; }

  double area() const noexcept { return state_->area; }

  /// First nonzero eigenvalue of Delta_g, computed on first use.
  double lambda1() const {
    std::call_once(state_->lambda1_once, [this] { state_->lambda1 = first_eigenvalue(*this); });
    return state_->lambda1;
  }

  bool same_grid(const GridFunction& f) const noexcept { return f.grid_ptr() == grid_ptr(); }
  bool same_state(const SurfaceMetric& o) const noexcept { return state_ == o.state_; }

 private:
  struct State {
    GridFunction rho;
    std::vector<HarmonicTerm> terms;
    std::vector<double> e2rho;
    std::vector<double> area_weights;
    double area = 0.0;
    std::once_flag lambda1_once;
    double lambda1 = 0.0;
    explicit State(GridFunction r) : rho(std::move(r)) {}
  };

  SurfaceMetric(GridFunction rho, std::vector<HarmonicTerm> terms)
      : state_(std::make_shared<State>(std::move(rho))) {
    state_->terms = std::move(terms);
    const auto& grid = state_->rho.grid();
    state_->e2rho.resize(grid.size());
    state_->area_weights.resize(grid.size());
    double area = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      state_->e2rho[k] = std::exp(2.0 * state_->rho[k]);
      state_->area_weights[k] = state_->e2rho[k] * grid.weights()[k];
      area += state_->area_weights[k];
    }
    state_->area = area;
  }

  std::shared_ptr<State> state_;
};

namespace detail {

inline void require_grid(const GridFunction& f, const SurfaceMetric& m) {
  if (f.grid_ptr() != m.grid_ptr())
    throw DimensionError("grid function is not defined on the metric's grid");
}

inline void require_grid(const ComplexGridFunction& f, const SurfaceMetric& m) {
  if (f.grid_ptr() != m.grid_ptr())
    throw DimensionError("grid function is not defined on the metric's grid");
}

inline GridFunction real_part(const ComplexGridFunction& f) {
  GridFunction out(f.grid_ptr());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k].real();
  return out;
}

inline GridFunction imag_part(const ComplexGridFunction& f) {
  GridFunction out(f.grid_ptr());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k].imag();
  return out;
}

/// sum_k l(l+1) c_k^2: the round Dirichlet energy, which is conformally
/// invariant and therefore equals int |df|_g^2 dA_g.
inline double dirichlet_energy(const SphereGrid& grid, std::span<const double> c) {
  double e = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double l = grid.degree(k);
    e += l * (l + 1.0) * c[k] * c[k];
  }
  return e;
}

inline double dirichlet_pairing(const SphereGrid& grid, std::span<const double> a,
                                std::span<const double> b) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double l = grid.degree(k);
    e += l * (l + 1.0) * a[k] * b[k];
  }
  return e;
}

inline double g_l2_norm(const GridFunction& f, const SurfaceMetric& m) {
  double s = 0.0;
  const auto w = m.area_weights();
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * f[k] * w[k];
  return std::sqrt(s);
}

}  // namespace detail

/// int_Sigma f dA_g.
inline double integrate(const GridFunction& f, const SurfaceMetric& m) {
  detail::require_grid(f, m);
  const auto w = m.area_weights();
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * w[k];
  return s;
}

inline std::complex<double> integrate(const ComplexGridFunction& f, const SurfaceMetric& m) {
  detail::require_grid(f, m);
  const auto w = m.area_weights();
  std::complex<double> s{0.0, 0.0};
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * w[k];
  return s;
}

/// Delta_g f = e^{-2 rho} Delta_round f, with Delta = delta d >= 0.
inline GridFunction laplace_beltrami(const GridFunction& f, const SurfaceMetric& m) {
  detail::require_grid(f, m);
  const auto& grid = m.grid();
  auto c = analyze(f);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double l = grid.degree(k);
    c[k] *= l * (l + 1.0);
  }
  GridFunction out = synthesize(m.grid_ptr(), c);
  const auto e2 = m.conformal_factor();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= e2[k];
  return out;
}

inline ComplexGridFunction laplace_beltrami(const ComplexGridFunction& f, const SurfaceMetric& m) {
  detail::require_grid(f, m);
  const GridFunction re = laplace_beltrami(detail::real_part(f), m);
  const GridFunction im = laplace_beltrami(detail::imag_part(f), m);
  ComplexGridFunction out(m.grid_ptr());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {re[k], im[k]};
  return out;
}

/// Unique g-mean-zero v with Delta_g v = b. The round-form equation
/// Delta_round v = e^{2 rho} b is diagonal in the harmonic basis.
inline GridFunction solve_poisson(const GridFunction& b, const SurfaceMetric& m) {
  detail::require_grid(b, m);
  const double norm_b = detail::g_l2_norm(b, m);
  if (norm_b == 0.0) return GridFunction(m.grid_ptr());
  const double mean = integrate(b, m);
  if (std::abs(mean) > 1e-9 * norm_b * std::sqrt(m.area()))
    throw SolvabilityError("solve_poisson: right-hand side has nonzero integral " +
                           std::to_string(mean));
  const auto& grid = m.grid();
  GridFunction rhs = b;
  const auto e2 = m.conformal_factor();
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] *= e2[k];
  auto c = analyze(rhs);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double l = grid.degree(k);
    c[k] = l == 0 ? 0.0 : c[k] / (l * (l + 1.0));
  }
  GridFunction v = synthesize(m.grid_ptr(), c);
  const double shift = integrate(v, m) / m.area();
  for (auto& x : v.values()) x -= shift;
  return v;
}

/// Iteration controls for the preconditioned conjugate-gradient solver.
struct SolverOptions {
  double rel_tol = 1e-12;  // on the Galerkin residual, relative to the right-hand side
  int max_iter = 0;        // 0 selects 10 l_max
};

struct HelmholtzReport {
  GridFunction solution;
  std::vector<double> coeffs;  // harmonic coefficients of the solution
  double residual = 0.0;       // ||Delta_g v + a v - b||_{L2} / max(||b||_{L2}, eps)
  /// Same residual after projection onto degree <= l_max. Differs from
  /// `residual` only when a v is not band-limited (e.g. a with a kink).
  double galerkin_residual = 0.0;
  int iterations = 0;
};

namespace detail {

/// Preconditioned CG for (D + P diag(atilde) P) x = f in coefficient space,
/// where D = diag(l(l+1)) and P is the quadrature projection. The system is
/// the round-form Galerkin discretization of Delta_round x + atilde x = f.
inline int galerkin_cg(const SphereGrid& grid, std::span<const double> atilde,
                       std::span<const double> f, std::span<double> x, double rel_tol,
                       int max_iter, double& final_residual) {
  const std::size_t nc = grid.num_coeffs();
  double abar = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) abar += atilde[k] * grid.weights()[k];
  abar /= 4.0 * kPi;
  std::vector<double> diag(nc), r(nc), z(nc), p(nc), q(nc), work(grid.size());
  for (std::size_t k = 0; k < nc; ++k) {
    const double l = grid.degree(k);
    diag[k] = l * (l + 1.0);
  }
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    grid.synthesize(in, work);
    for (std::size_t k = 0; k < work.size(); ++k) work[k] *= atilde[k];
    grid.analyze(work, out);
    for (std::size_t k = 0; k < nc; ++k) out[k] += diag[k] * in[k];
  };
  auto dot = [nc](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < nc; ++k) s += a[k] * b[k];
    return s;
  };
  const double norm_f = std::sqrt(dot(f, f));
  std::fill(x.begin(), x.end(), 0.0);
  if (norm_f == 0.0) {
    final_residual = 0.0;
    return 0;
  }
  std::copy(f.begin(), f.end(), r.begin());
  for (std::size_t k = 0; k < nc; ++k) z[k] = r[k] / (diag[k] + abar);
  p = z;
  double rz = dot(r, z);
  double rnorm = norm_f;
  for (int it = 1; it <= max_iter; ++it) {
    apply(p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t k = 0; k < nc; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    rnorm = std::sqrt(dot(r, r));
    if (rnorm <= rel_tol * norm_f) {
      final_residual = rnorm / norm_f;
      return it;
    }
    for (std::size_t k = 0; k < nc; ++k) z[k] = r[k] / (diag[k] + abar);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < nc; ++k) p[k] = z[k] + beta * p[k];
  }
  throw ConvergenceError("solve_helmholtz: conjugate gradient did not converge", rnorm / norm_f,
                         max_iter);
}

}  // namespace detail

/// Solves Delta_g v + a v = b for a >= 0 with positive integral.
inline HelmholtzReport solve_helmholtz_report(const GridFunction& a, const GridFunction& b,
                                              const SurfaceMetric& m,
                                              const SolverOptions& options = {}) {
  detail::require_grid(a, m);
  detail::require_grid(b, m);
  for (double v : a.values())
    if (!(v >= 0.0)) throw PreconditionError("solve_helmholtz: coefficient a must be nonnegative");
  if (!(integrate(a, m) > 0.0))
    throw PreconditionError("solve_helmholtz: coefficient a must have positive integral");
  const auto& grid = m.grid();
  const auto e2 = m.conformal_factor();
  std::vector<double> atilde(grid.size()), rhs(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    atilde[k] = a[k] * e2[k];
    rhs[k] = b[k] * e2[k];
  }
  std::vector<double> f(grid.num_coeffs()), x(grid.num_coeffs());
  grid.analyze(rhs, f);
  const int max_iter = options.max_iter > 0 ? options.max_iter : 10 * std::max(grid.l_max(), 1);
  double galerkin_res = 0.0;
  const int iters = detail::galerkin_cg(grid, atilde, f, x, options.rel_tol, max_iter, galerkin_res);

  HelmholtzReport rep{synthesize(m.grid_ptr(), x), x, 0.0, galerkin_res, iters};
  // nodal residual of the g-form equation
  std::vector<double> dx(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double l = grid.degree(k);
    dx[k] = l * (l + 1.0) * x[k];
  }
  GridFunction res = synthesize(m.grid_ptr(), dx);
  for (std::size_t k = 0; k < res.size(); ++k)
    res[k] = res[k] / e2[k] + a[k] * rep.solution[k] - b[k];
  rep.residual = detail::g_l2_norm(res, m) / std::max(detail::g_l2_norm(b, m), DBL_EPSILON);
  return rep;
}

inline GridFunction solve_helmholtz(const GridFunction& a, const GridFunction& b,
                                    const SurfaceMetric& m) {
  return solve_helmholtz_report(a, b, m).solution;
}

namespace detail {

/// Eigenvalues of Delta_round psi = lambda w psi, Rayleigh-Ritz in the
/// harmonics of degree <= basis_degree, ascending.
inline Eigen::VectorXd weighted_laplace_spectrum(const SphereGrid& grid,
                                                 std::span<const double> weight,
                                                 int basis_degree) {
  basis_degree = std::min(basis_degree, grid.l_max());
  std::vector<std::size_t> basis;
  for (std::size_t k = 0; k < grid.num_coeffs(); ++k)
    if (grid.degree(k) <= basis_degree) basis.push_back(k);
  const auto nb = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd stiffness = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd mass(nb, nb);
  std::vector<double> c(grid.num_coeffs(), 0.0), values(grid.size()), proj(grid.num_coeffs());
  for (Eigen::Index j = 0; j < nb; ++j) {
    std::fill(c.begin(), c.end(), 0.0);
    c[basis[j]] = 1.0;
    grid.synthesize(c, values);
    for (std::size_t k = 0; k < values.size(); ++k) values[k] *= weight[k];
    grid.analyze(values, proj);
    for (Eigen::Index i = 0; i < nb; ++i) mass(i, j) = proj[basis[i]];
    const double l = grid.degree(basis[j]);
    stiffness(j, j) = l * (l + 1.0);
  }
  mass = 0.5 * (mass + mass.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(stiffness, mass,
                                                                    Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("generalized eigensolver failed", 0.0, 0);
  return solver.eigenvalues();
}

}  // namespace detail

/// Smallest positive eigenvalue of Delta_g, from Delta_round f = lambda e^{2 rho} f.
inline double first_eigenvalue(const SurfaceMetric& m, int basis_degree) {
  if (m.grid().l_max() < 1) throw PreconditionError("first_eigenvalue: need l_max >= 1");
  const auto ev = detail::weighted_laplace_spectrum(m.grid(), m.conformal_factor(), basis_degree);
  return ev(1);
}

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;
  double c0 = 0.0;
};

inline Norms norms(const GridFunction& f, const SurfaceMetric& m) {
  detail::require_grid(f, m);
  Norms n;
  const double l2sq = std::pow(detail::g_l2_norm(f, m), 2);
  const auto c = analyze(f);
  n.l2 = std::sqrt(l2sq);
  n.h1 = std::sqrt(l2sq + detail::dirichlet_energy(m.grid(), c));
  for (double v : f.values()) n.c0 = std::max(n.c0, std::abs(v));
  return n;
}

inline Norms norms(const ComplexGridFunction& f, const SurfaceMetric& m) {
  const Norms re = norms(detail::real_part(f), m);
  const Norms im = norms(detail::imag_part(f), m);
  Norms n;
  n.l2 = std::hypot(re.l2, im.l2);
  n.h1 = std::hypot(re.h1, im.h1);
  for (const auto& v : f.values()) n.c0 = std::max(n.c0, std::abs(v));
  return n;
}

}  // namespace vortexlab
