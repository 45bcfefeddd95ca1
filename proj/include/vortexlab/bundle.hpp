#pragma once

/// \file
/// The degree-n line bundle over S^2: divisors, holomorphic sections as
/// homogeneous polynomials in (z0, z1) = (cos(theta/2), sin(theta/2) e^{i phi}),
/// and the constant-curvature hermitian structure |s|_h^2 = |P(z0, z1)|^2 e^{-2w}.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vortexlab/errors.hpp"
#include "vortexlab/sphere_grid.hpp"
#include "vortexlab/surface_metric.hpp"

namespace vortexlab {

using cdouble = std::complex<double>;
using Vec3 = Eigen::Vector3d;

inline Vec3 unit_vector(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

/// Homogeneous coordinates (z0, z1) of a point on S^2 with |z0|^2 + |z1|^2 = 1.
/// The overall phase is chosen per hemisphere so both components stay
/// well conditioned at either pole.
inline std::array<cdouble, 2> homogeneous_coordinates(const Vec3& p) {
  const double x = p.x(), y = p.y(), z = p.z();
  if (z >= 0.0) {
    const double s = std::sqrt(2.0 * (1.0 + z));
    return {cdouble(std::sqrt(0.5 * (1.0 + z)), 0.0), cdouble(x, y) / s};
  }
  const double r = std::sqrt(2.0 * (1.0 - z));
  return {cdouble(x, -y) / r, cdouble(std::sqrt(0.5 * (1.0 - z)), 0.0)};
}

/// Derivative of homogeneous_coordinates(p) along the tangent vector t at p,
/// in the same hemisphere gauge.
inline std::array<cdouble, 2> homogeneous_coordinates_derivative(const Vec3& p, const Vec3& t) {
  const double x = p.x(), y = p.y(), z = p.z();
  if (z >= 0.0) {
    const double p0 = std::sqrt(0.5 * (1.0 + z));
    const double s = std::sqrt(2.0 * (1.0 + z));
    return {cdouble(t.z() / (4.0 * p0), 0.0),
            cdouble(t.x(), t.y()) / s - cdouble(x, y) * (t.z() / (s * s * s))};
  }
  const double q1 = std::sqrt(0.5 * (1.0 - z));
  const double r = std::sqrt(2.0 * (1.0 - z));
  return {cdouble(t.x(), -t.y()) / r + cdouble(x, -y) * (t.z() / (r * r * r)),
          cdouble(-t.z() / (4.0 * q1), 0.0)};
}

struct DivisorPoint {
  Vec3 position;
  int multiplicity = 1;
};

/// Effective divisor: points of S^2 with positive multiplicities.
class Divisor {
 public:
  Divisor() = default;

  explicit Divisor(std::vector<DivisorPoint> points) : points_(std::move(points)) {
    for (auto& p : points_) {
      if (p.multiplicity < 1) throw PreconditionError("Divisor: multiplicities must be positive");
      const double norm = p.position.norm();
      if (!(norm > 0.0) || !std::isfinite(norm))
        throw PreconditionError("Divisor: point must be a nonzero finite vector");
      p.position /= norm;
    }
  }

  /// (theta, phi, multiplicity) triples.
  static Divisor from_angles(std::span<const std::array<double, 3>> triples) {
    std::vector<DivisorPoint> pts;
    for (const auto& t : triples)
      pts.push_back({unit_vector(t[0], t[1]), static_cast<int>(t[2])});
    return Divisor(std::move(pts));
  }

  static Divisor single(const Vec3& p, int multiplicity = 1) {
    return Divisor({DivisorPoint{p, multiplicity}});
  }

  /// n independent uniform points.
  template <typename Rng>
  static Divisor random(int n, Rng& rng) {
    std::vector<DivisorPoint> pts;
    for (int k = 0; k < n; ++k) {
      const double u = uniform01(rng), v = uniform01(rng);
      const double z = 2.0 * u - 1.0;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      pts.push_back({Vec3(r * std::cos(2.0 * kPi * v), r * std::sin(2.0 * kPi * v), z), 1});
    }
    return Divisor(std::move(pts));
  }

  int degree() const noexcept {
    int n = 0;
    for (const auto& p : points_) n += p.multiplicity;
    return n;
  }
  std::span<const DivisorPoint> points() const noexcept { return points_; }

  Divisor rotated(const Eigen::Matrix3d& r) const {
    std::vector<DivisorPoint> pts = points_;
    for (auto& p : pts) p.position = r * p.position;
    return Divisor(std::move(pts));
  }

  /// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine.
  template <typename Rng>
  static double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

 private:
  std::vector<DivisorPoint> points_;
};

/// Holomorphic section P(z0, z1) = sum_j a_j z0^{n-j} z1^j. In the affine
/// chart z = z1/z0 this is the polynomial a_0 + a_1 z + ... + a_n z^n.
struct Section {
  Eigen::VectorXcd coeffs;

  Section() = default;
  explicit Section(Eigen::VectorXcd c) : coeffs(std::move(c)) {}

  int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
  bool is_zero() const noexcept { return coeffs.size() == 0 || coeffs.cwiseAbs().maxCoeff() == 0.0; }

  Section operator+(const Section& o) const { return Section(coeffs + o.coeffs); }
  Section operator-(const Section& o) const { return Section(coeffs - o.coeffs); }
  Section operator*(cdouble s) const { return Section(coeffs * s); }
  friend Section operator*(cdouble s, const Section& x) { return x * s; }
};

/// <s, t>_{L2} = a^T M conj(b) for the Gram matrix M_{jk} = <e_j, e_k>.
inline cdouble l2_inner(const Eigen::MatrixXcd& gram, const Section& s, const Section& t) {
  return s.coeffs.transpose() * gram * t.coeffs.conjugate();
}

inline double l2_norm(const Eigen::MatrixXcd& gram, const Section& s) {
  return std::sqrt(std::max(0.0, l2_inner(gram, s, s).real()));
}

/// Constant-curvature hermitian structure on the degree-n bundle over a
/// conformal sphere. Holds the weight correction w, the monomial basis at
/// every node and the L2 Gram matrix of that basis.
class HermitianStructure {
 public:
  HermitianStructure(SurfaceMetric metric, int degree, GridFunction w)
      : metric_(std::move(metric)), degree_(degree), w_(std::move(w)) {
    if (degree < 0) throw PreconditionError("HermitianStructure: degree must be nonnegative");
    detail::require_grid(w_, metric_);
    const auto& grid = metric_.grid();
    w_coeffs_ = analyze(w_);
    weight_.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) weight_[k] = std::exp(-2.0 * w_[k]);
    monomials_.resize(static_cast<Eigen::Index>(grid.size()), degree + 1);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto z = homogeneous_coordinates(unit_vector(grid.node_theta(k), grid.node_phi(k)));
      for (int j = 0; j <= degree; ++j)
        monomials_(static_cast<Eigen::Index>(k), j) = std::pow(z[0], degree - j) * std::pow(z[1], j);
    }
    // M_{jk} = int e_j conj(e_k) e^{-2w} dA_g
    const auto aw = metric_.area_weights();
    Eigen::VectorXd wts(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) wts(static_cast<Eigen::Index>(k)) = aw[k] * weight_[k];
    gram_ = (monomials_.transpose() * wts.asDiagonal() * monomials_.conjugate()).eval();
    gram_ = 0.5 * (gram_ + gram_.adjoint()).eval();

    const GridFunction lap_w = laplace_beltrami(w_, metric_);
    const double target = 2.0 * kPi * degree_ / metric_.area();
    const auto e2 = metric_.conformal_factor();
    curvature_error_ = 0.0;
    GridFunction curv(metric_.grid_ptr());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      curv[k] = 0.5 * degree_ / e2[k] - lap_w[k];
      curvature_error_ = std::max(curvature_error_, std::abs(curv[k] - target));
    }
    total_curvature_ = integrate(curv, metric_);
  }

  int degree() const noexcept { return degree_; }
  const SurfaceMetric& metric() const noexcept { return metric_; }
  const GridFunction& w() const noexcept { return w_; }
  /// e^{-2w} at each node.
  std::span<const double> weight() const noexcept { return weight_; }
  const Eigen::MatrixXcd& gram() const noexcept { return gram_; }
  /// Node-by-basis matrix of z0^{n-j} z1^j.
  const Eigen::MatrixXcd& monomials() const noexcept { return monomials_; }

  /// sup over nodes of |*F_h - 2 pi n / |Sigma||.
  double curvature_error() const noexcept { return curvature_error_; }
  /// int *F_h dA_g; equals 2 pi n.
  double total_curvature() const noexcept { return total_curvature_; }

  /// P(z0, z1) at every node (no hermitian weight applied).
  ComplexGridFunction values(const Section& s) const {
    require_degree(s);
    const Eigen::VectorXcd v = monomials_ * s.coeffs;
    return ComplexGridFunction(metric_.grid_ptr(), std::vector<cdouble>(v.data(), v.data() + v.size()));
  }

  /// |s|_h^2 at an arbitrary point of the sphere.
  double norm_squared_at(const Section& s, const Vec3& p) const {
    require_degree(s);
    const auto z = homogeneous_coordinates(p.normalized());
    cdouble val{0.0, 0.0};
    for (int j = 0; j <= degree_; ++j) val += s.coeffs(j) * std::pow(z[0], degree_ - j) * std::pow(z[1], j);
    const double theta = std::acos(std::clamp(p.normalized().z(), -1.0, 1.0));
    const double phi = std::atan2(p.y(), p.x());
    const double w = metric_.grid().evaluate(w_coeffs_, theta, phi);
    return std::norm(val) * std::exp(-2.0 * w);
  }

  void require_degree(const Section& s) const {
    if (s.degree() != degree_)
      throw DimensionError("section degree " + std::to_string(s.degree()) +
                           " does not match bundle degree " + std::to_string(degree_));
  }

 private:
  SurfaceMetric metric_;
  int degree_;
  GridFunction w_;
  std::vector<double> w_coeffs_;
  std::vector<double> weight_;
  Eigen::MatrixXcd monomials_;
  Eigen::MatrixXcd gram_;
  double curvature_error_ = 0.0;
  double total_curvature_ = 0.0;
};

/// Hermitian structure of constant Chern curvature 2 pi n / |Sigma|. The
/// round weight |P|^2 has curvature density e^{-2 rho} n / 2; the mean-zero
/// correction w solves Delta_g w = e^{-2 rho} n/2 - 2 pi n / |Sigma|.
inline HermitianStructure constant_curvature_weight(const SurfaceMetric& m, int n) {
  if (n < 0) throw PreconditionError("constant_curvature_weight: degree must be nonnegative");
  GridFunction rhs(m.grid_ptr());
  const double target = 2.0 * kPi * n / m.area();
  const auto e2 = m.conformal_factor();
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = 0.5 * n / e2[k] - target;
  // int e^{-2 rho} dA_g = 4 pi exactly; drop the quadrature roundoff
  const double drift = integrate(rhs, m) / m.area();
  for (auto& x : rhs.values()) x -= drift;
  if (detail::g_l2_norm(rhs, m) <= 1e-13 * n * std::sqrt(m.area()))
    rhs = GridFunction(m.grid_ptr());
  GridFunction w = solve_poisson(rhs, m);
  return HermitianStructure(m, n, std::move(w));
}

inline Eigen::MatrixXcd gram_matrix(const HermitianStructure& h) { return h.gram(); }

/// Unnormalized coefficients of prod_k (p1_k z0 - p0_k z1) over the divisor
/// points (with multiplicity): the polynomial vanishes exactly on the divisor.
inline Eigen::VectorXcd divisor_polynomial(const Divisor& d) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Ones(1);
  for (const auto& pt : d.points()) {
    const auto z = homogeneous_coordinates(pt.position);
    for (int r = 0; r < pt.multiplicity; ++r) {
      Eigen::VectorXcd next = Eigen::VectorXcd::Zero(c.size() + 1);
      for (Eigen::Index j = 0; j < c.size(); ++j) {
        next(j) += c(j) * z[1];
        next(j + 1) -= c(j) * z[0];
      }
      c = std::move(next);
    }
  }
  return c;
}

/// Derivative of divisor_polynomial(d) when point `index` moves along the
/// tangent vector t (every copy of a repeated point moves together).
inline Eigen::VectorXcd divisor_polynomial_derivative(const Divisor& d, std::size_t index,
                                                      const Vec3& t) {
  const auto pts = d.points();
  if (index >= pts.size()) throw PreconditionError("divisor_polynomial_derivative: bad index");
  // product rule over the linear factors
  std::vector<std::array<cdouble, 2>> factors, dfactors;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto z = homogeneous_coordinates(pts[i].position);
    const auto dz = i == index ? homogeneous_coordinates_derivative(pts[i].position, t)
                               : std::array<cdouble, 2>{cdouble{}, cdouble{}};
    for (int r = 0; r < pts[i].multiplicity; ++r) {
      factors.push_back({z[1], -z[0]});
      dfactors.push_back({dz[1], -dz[0]});
    }
  }
  const auto n = static_cast<Eigen::Index>(factors.size());
  Eigen::VectorXcd total = Eigen::VectorXcd::Zero(n + 1);
  for (Eigen::Index skip = 0; skip < n; ++skip) {
    if (dfactors[skip][0] == cdouble{} && dfactors[skip][1] == cdouble{}) continue;
    Eigen::VectorXcd c = Eigen::VectorXcd::Ones(1);
    for (Eigen::Index f = 0; f < n; ++f) {
      const auto& fac = f == skip ? dfactors[f] : factors[f];
      Eigen::VectorXcd next = Eigen::VectorXcd::Zero(c.size() + 1);
      for (Eigen::Index j = 0; j < c.size(); ++j) {
        next(j) += c(j) * fac[0];
        next(j + 1) += c(j) * fac[1];
      }
      c = std::move(next);
    }
    total += c;
  }
  return total;
}

/// Multiplies by the unit complex number that makes the largest-magnitude
/// coefficient (lowest index on ties) real and positive.
inline Section apply_phase_convention(Section s) {
  if (s.coeffs.size() == 0) return s;
  const double maxabs = s.coeffs.cwiseAbs().maxCoeff();
  if (maxabs == 0.0) return s;
  Eigen::Index pick = 0;
  for (Eigen::Index j = 0; j < s.coeffs.size(); ++j)
    if (std::abs(s.coeffs(j)) >= maxabs * (1.0 - 1e-12)) {
      pick = j;
      break;
    }
  const cdouble phase = std::conj(s.coeffs(pick)) / std::abs(s.coeffs(pick));
  s.coeffs *= phase;
  return s;
}

/// Unit-L2-norm holomorphic section vanishing exactly on d, in the fixed
/// phase convention.
inline Section section_from_divisor(const Divisor& d, const HermitianStructure& h) {
  if (d.degree() != h.degree())
    throw PreconditionError("section_from_divisor: divisor degree " + std::to_string(d.degree()) +
                            " does not match bundle degree " + std::to_string(h.degree()));
  Section s(divisor_polynomial(d));
  s.coeffs /= l2_norm(h.gram(), s);
  return apply_phase_convention(std::move(s));
}

/// |s|_h^2 at every node.
inline GridFunction evaluate_norm(const Section& s, const HermitianStructure& h) {
  const ComplexGridFunction p = h.values(s);
  GridFunction out(h.metric().grid_ptr());
  const auto wt = h.weight();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(p[k]) * wt[k];
  return out;
}

/// Pointwise fibre product h(s, t) = P_s conj(P_t) e^{-2w}.
inline ComplexGridFunction fibre_product(const Section& s, const Section& t,
                                         const HermitianStructure& h) {
  const ComplexGridFunction ps = h.values(s);
  const ComplexGridFunction pt = h.values(t);
  ComplexGridFunction out(h.metric().grid_ptr());
  const auto wt = h.weight();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = ps[k] * std::conj(pt[k]) * wt[k];
  return out;
}

struct AlphaEstimate {
  double alpha = 0.0;  // lower bound on sup |s|_h over unit sections
  int l_max = 0;       // resolution of the grid the maximum was taken over
};

/// Empirical lower bound on alpha = sup{|s(x)|_h : ||s||_{L2} = 1}. The
/// candidates are the monomials, the sections vanishing to order n at each
/// of the six coordinate poles, and `samples` random unit sections drawn
/// from a fixed-seed stream, so the estimate is monotone in `samples`.
inline AlphaEstimate sup_norm_alpha(const HermitianStructure& h, int samples,
                                    std::uint64_t seed = 20240601) {
  if (samples < 100) throw PreconditionError("sup_norm_alpha: need at least 100 samples");
  const int n = h.degree();
  std::vector<Section> candidates;
  for (int j = 0; j <= n; ++j) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n + 1);
    c(j) = 1.0;
    candidates.emplace_back(c);
  }
  if (n > 0) {
    const std::array<Vec3, 6> axes{Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(),
                                   -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
    for (const auto& a : axes) candidates.emplace_back(divisor_polynomial(Divisor::single(a, n)));
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXcd c(n + 1);
    for (int j = 0; j <= n; ++j) {
      // Box-Muller on the fixed stream
      const double u1 = 1.0 - Divisor::uniform01(rng), u2 = Divisor::uniform01(rng);
      const double r = std::sqrt(-2.0 * std::log(u1));
      c(j) = cdouble(r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2));
    }
    candidates.emplace_back(c);
  }
  double best = 0.0;
  const auto wt = h.weight();
  for (auto& cand : candidates) {
    const double norm = l2_norm(h.gram(), cand);
    if (norm == 0.0) continue;
    const Eigen::VectorXcd v = h.monomials() * (cand.coeffs / norm);
    for (Eigen::Index k = 0; k < v.size(); ++k)
      best = std::max(best, std::norm(v(k)) * wt[static_cast<std::size_t>(k)]);
  }
  return {std::sqrt(best), h.metric().grid().l_max()};
}

}  // namespace vortexlab
