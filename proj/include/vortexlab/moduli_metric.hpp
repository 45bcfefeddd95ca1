#pragma once

/// \file
/// The L2 and Fubini-Study metrics on the vortex moduli space at a point.
///
/// A tangent vector is a horizontal section velocity psi = d(phihat)/dt,
/// Re<psi, phihat> = Re<psi, i phihat> = 0. Its gauge-orthogonal field
/// velocity is fixed by two driven equations with a = eps |phihat|^2 e^u:
///   Delta chidot + a chidot = -eps e^u Re h(i phihat, psi)
///   Delta udot   + a udot   = -2 eps e^u Re h(phihat, psi)
/// and the L2 metric is
///   g(psi, psi) = eps int e^u { |psi|^2 + Re h(psi, phihat) udot
///                 + 2 Re h(psi, i phihat) chidot + |phihat|^2 (udot^2/4 + chidot^2) }
///                 + ||d udot||^2 / 4 + ||d chidot||^2.
/// The Fubini-Study value on the same vector is ||psi||^2.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "vortexlab/bundle.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/surface_metric.hpp"
#include "vortexlab/vortex.hpp"

namespace vortexlab {

/// Real-orthonormal basis of the horizontal space at `base`.
struct TangentFrame {
  Section base;
  std::vector<Section> directions;  // psi_1, i psi_1, psi_2, i psi_2, ...
  Eigen::MatrixXcd gram;

  /// Real coordinates Re<psi_i, v> of a section velocity in this frame.
  Eigen::VectorXd coordinates(const Section& v) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(directions.size()));
    for (std::size_t i = 0; i < directions.size(); ++i)
      x(static_cast<Eigen::Index>(i)) = l2_inner(gram, directions[i], v).real();
    return x;
  }
};

/// Gram-Schmidt over the real span of {e_j, i e_j} against {phihat, i phihat}.
inline TangentFrame horizontal_basis(const Section& phi_hat, const Eigen::MatrixXcd& gram) {
  const int n = phi_hat.degree();
  if (gram.rows() != n + 1 || gram.cols() != n + 1)
    throw DimensionError("horizontal_basis: gram matrix size does not match section degree");
  if (std::abs(l2_norm(gram, phi_hat) - 1.0) > 1e-8)
    throw PreconditionError("horizontal_basis: base section must have unit L2 norm");
  auto re_inner = [&](const Section& a, const Section& b) { return l2_inner(gram, a, b).real(); };

  std::vector<Section> basis{phi_hat, phi_hat * cdouble(0.0, 1.0)};
  TangentFrame frame{phi_hat, {}, gram};
  for (int j = 0; j <= n && static_cast<int>(frame.directions.size()) < 2 * n; ++j) {
    for (const cdouble unit : {cdouble(1.0, 0.0), cdouble(0.0, 1.0)}) {
      Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n + 1);
      c(j) = unit;
      Section v(c);
      const double start = std::sqrt(re_inner(v, v));
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) v = v - b * cdouble(re_inner(v, b), 0.0);
      const double norm = std::sqrt(std::max(0.0, re_inner(v, v)));
      if (norm <= 1e-8 * start) continue;
      v.coeffs /= norm;
      basis.push_back(v);
      frame.directions.push_back(v);
    }
  }
  if (static_cast<int>(frame.directions.size()) != 2 * n)
    throw NumericError("horizontal_basis: rank deficient gram matrix");
  return frame;
}

/// Horizontal projection of a coefficient-space velocity: removes its
/// components along phihat and i phihat.
inline Section horizontal_lift(const TangentFrame& frame, const Section& coeff_dir) {
  if (coeff_dir.degree() != frame.base.degree())
    throw DimensionError("horizontal_lift: direction degree does not match frame");
  const double start = l2_norm(frame.gram, coeff_dir);
  const cdouble along = l2_inner(frame.gram, coeff_dir, frame.base);
  Section v = coeff_dir - frame.base * along;
  const double norm = l2_norm(frame.gram, v);
  if (!(norm > 1e-10 * start))
    throw DegenerateDirectionError("horizontal_lift: direction is vertical");
  return v;
}

struct LinearizedResponse {
  GridFunction u_dot;
  GridFunction chi_dot;
  GridFunction a;
  GridFunction b_u;
  GridFunction b_chi;
  std::vector<double> u_dot_coeffs;
  std::vector<double> chi_dot_coeffs;
  double residual_u = 0.0;
  double residual_chi = 0.0;  // residual of the gauge-orthogonality equation
};

namespace detail {

struct PointwisePairings {
  GridFunction re_h_base_dir;   // Re h(phihat, psi)
  GridFunction re_h_ibase_dir;  // Re h(i phihat, psi)
};

inline PointwisePairings pairings(const Section& base, const Section& dir,
                                  const HermitianStructure& h) {
  const ComplexGridFunction p = fibre_product(base, dir, h);
  PointwisePairings out{GridFunction(p.grid_ptr()), GridFunction(p.grid_ptr())};
  for (std::size_t k = 0; k < p.size(); ++k) {
    out.re_h_base_dir[k] = p[k].real();
    // h(i s, t) = i h(s, t)
    out.re_h_ibase_dir[k] = -p[k].imag();
  }
  return out;
}

}  // namespace detail

inline LinearizedResponse solve_linearized(const VortexSolution& s, const Section& dir,
                                           const HermitianStructure& h,
                                           const SolverOptions& options = {}) {
  h.require_degree(dir);
  const SurfaceMetric& m = h.metric();
  const auto pr = detail::pairings(s.section, dir, h);
  LinearizedResponse r{GridFunction(m.grid_ptr()), GridFunction(m.grid_ptr()),
                       GridFunction(m.grid_ptr()), GridFunction(m.grid_ptr()),
                       GridFunction(m.grid_ptr())};
  for (std::size_t k = 0; k < r.a.size(); ++k) {
    const double eu = std::exp(s.u[k]);
    r.a[k] = s.eps * s.section_norm2[k] * eu;
    r.b_u[k] = -2.0 * s.eps * eu * pr.re_h_base_dir[k];
    r.b_chi[k] = -s.eps * eu * pr.re_h_ibase_dir[k];
  }
  const HelmholtzReport ru = solve_helmholtz_report(r.a, r.b_u, m, options);
  const HelmholtzReport rc = solve_helmholtz_report(r.a, r.b_chi, m, options);
  r.u_dot = ru.solution;
  r.u_dot_coeffs = ru.coeffs;
  r.residual_u = ru.residual;
  r.chi_dot = rc.solution;
  r.chi_dot_coeffs = rc.coeffs;
  r.residual_chi = rc.residual;
  return r;
}

struct MetricSample {
  Divisor divisor;
  double eps = 0.0;
  Eigen::MatrixXd G_eps;      // g / eps in the frame, symmetrized
  Eigen::MatrixXd G_leading;  // int e^u Re h(psi_i, psi_j): the term without udot, chidot
  double deviation = 0.0;     // ||G_eps - I||_2
  double asymmetry = 0.0;     // max |raw_ij - raw_ji| / eps before symmetrization
  double gauge_residual_max = 0.0;
  double linear_residual_max = 0.0;
  std::vector<std::pair<double, double>> diagonal;  // (g_eps(v,v), g_0(v,v)) per frame vector
  std::vector<Eigen::VectorXd> u_dot_coeffs;  // per direction, for reuse
  std::vector<Eigen::VectorXd> chi_dot_coeffs;

  Eigen::VectorXd eigenvalues() const {
    if (G_eps.rows() == 0) return {};
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G_eps, Eigen::EigenvaluesOnly).eigenvalues();
  }
};

/// Assembles g_eps = g / eps on the frame. Every entry is the direct
/// bilinear form B(i, j), which is symmetric only because udot, chidot solve
/// their equations; the reported asymmetry measures that.
inline MetricSample assemble_metric(const VortexSolution& s, const TangentFrame& frame,
                                    const HermitianStructure& h, const SolverOptions& options = {}) {
  if (frame.base.coeffs.size() != s.section.coeffs.size() ||
      (frame.base.coeffs - s.section.coeffs).cwiseAbs().maxCoeff() > 1e-10)
    throw PreconditionError("assemble_metric: frame is not based at the solution's section");
  const SurfaceMetric& m = h.metric();
  const auto& grid = m.grid();
  const std::size_t nd = frame.directions.size();
  const auto aw = m.area_weights();
  const std::size_t nn = grid.size();

  std::vector<LinearizedResponse> resp;
  std::vector<detail::PointwisePairings> pair;
  std::vector<ComplexGridFunction> vals;
  resp.reserve(nd);
  for (const auto& dir : frame.directions) {
    resp.push_back(solve_linearized(s, dir, h, options));
    pair.push_back(detail::pairings(s.section, dir, h));
    vals.push_back(h.values(dir));
  }
  std::vector<double> eu(nn);
  for (std::size_t k = 0; k < nn; ++k) eu[k] = std::exp(s.u[k]);
  const auto wt = h.weight();

  MetricSample out{s.divisor, s.eps};
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(nd));
  out.G_leading.resize(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < nd; ++i) {
    out.gauge_residual_max = std::max(out.gauge_residual_max, resp[i].residual_chi);
    out.linear_residual_max =
        std::max({out.linear_residual_max, resp[i].residual_chi, resp[i].residual_u});
    for (std::size_t j = 0; j < nd; ++j) {
      double bulk = 0.0, lead = 0.0;
      for (std::size_t k = 0; k < nn; ++k) {
        const double hij = (vals[i][k] * std::conj(vals[j][k])).real() * wt[k];
        const double cross = resp[j].u_dot[k] * pair[i].re_h_base_dir[k] +
                             2.0 * resp[j].chi_dot[k] * pair[i].re_h_ibase_dir[k];
        const double quad = s.section_norm2[k] * (0.25 * resp[i].u_dot[k] * resp[j].u_dot[k] +
                                                  resp[i].chi_dot[k] * resp[j].chi_dot[k]);
        bulk += eu[k] * (hij + cross + quad) * aw[k];
        lead += eu[k] * hij * aw[k];
      }
      const double grad = 0.25 * detail::dirichlet_pairing(grid, resp[i].u_dot_coeffs,
                                                           resp[j].u_dot_coeffs) +
                          detail::dirichlet_pairing(grid, resp[i].chi_dot_coeffs,
                                                    resp[j].chi_dot_coeffs);
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.eps * bulk + grad;
      out.G_leading(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = lead;
    }
  }
  out.asymmetry = nd == 0 ? 0.0 : (raw - raw.transpose()).cwiseAbs().maxCoeff() / s.eps;
  out.G_eps = 0.5 * (raw + raw.transpose()) / s.eps;
  out.deviation = 0.0;
  if (nd > 0) {
    const Eigen::VectorXd ev = out.eigenvalues();
    out.deviation = std::max(std::abs(ev.minCoeff() - 1.0), std::abs(ev.maxCoeff() - 1.0));
  }
  for (std::size_t i = 0; i < nd; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.diagonal.emplace_back(out.G_eps(ii, ii), l2_inner(frame.gram, frame.directions[i],
                                                           frame.directions[i]).real());
    out.u_dot_coeffs.emplace_back(Eigen::Map<const Eigen::VectorXd>(
        resp[i].u_dot_coeffs.data(), static_cast<Eigen::Index>(resp[i].u_dot_coeffs.size())));
    out.chi_dot_coeffs.emplace_back(Eigen::Map<const Eigen::VectorXd>(
        resp[i].chi_dot_coeffs.data(), static_cast<Eigen::Index>(resp[i].chi_dot_coeffs.size())));
  }
  return out;
}

/// Fubini-Study quadratic form of the path psi(t) through psi with velocity
/// psidot: (||psidot||^2 ||psi||^2 - |<psidot, psi>|^2) / ||psi||^4.
inline double fs_metric_coeff(const Section& psi, const Section& psi_dot,
                              const Eigen::MatrixXcd& gram) {
  const double n2 = l2_inner(gram, psi, psi).real();
  if (!(n2 > 0.0)) throw PreconditionError("fs_metric_coeff: psi must be nonzero");
  const double d2 = l2_inner(gram, psi_dot, psi_dot).real();
  const double cross = std::norm(l2_inner(gram, psi_dot, psi));
  return (d2 * n2 - cross) / (n2 * n2);
}

struct LaxMilgramResult {
  double lhs = 0.0;  // ||v||_{H1}
  double rhs = 0.0;  // the a priori bound
  bool satisfied = false;
  double constant = 0.0;  // (1 + 1/lambda_1) max{1, sqrt|M|}
  double residual = 0.0;
};

/// Solves Delta v + a v = b and compares ||v||_{H1} with the Lax-Milgram bound
///   C { (1 + ||a||/int a)(||b|| + ||a||/int a |int b|) + |int b| / int a }.
inline LaxMilgramResult lax_milgram_check(const GridFunction& a, const GridFunction& b,
                                          const SurfaceMetric& m) {
  const HelmholtzReport rep = solve_helmholtz_report(a, b, m);
  LaxMilgramResult r;
  r.residual = rep.residual;
  r.lhs = norms(rep.solution, m).h1;
  const double int_a = integrate(a, m);
  const double int_b = integrate(b, m);
  const double norm_a = detail::g_l2_norm(a, m);
  const double norm_b = detail::g_l2_norm(b, m);
  r.constant = (1.0 + 1.0 / m.lambda1()) * std::max(1.0, std::sqrt(m.area()));
  const double ratio = norm_a / int_a;
  r.rhs = r.constant * ((1.0 + ratio) * (norm_b + ratio * std::abs(int_b)) + std::abs(int_b) / int_a);
  r.satisfied = r.lhs <= r.rhs * (1.0 + 1e-6);
  return r;
}

}  // namespace vortexlab
