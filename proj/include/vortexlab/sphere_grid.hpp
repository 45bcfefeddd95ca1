#pragma once

/// \file
/// Gauss-Legendre x uniform-longitude grid on the unit sphere, the real
/// spherical-harmonic transform on it, and scalar fields sampled on it.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vortexlab/errors.hpp"

namespace vortexlab {

inline constexpr double kPi = std::numbers::pi;

/// Gauss-Legendre nodes on [-1, 1], returned in decreasing order of x so
/// that the matching colatitudes increase from the north pole.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw PreconditionError("gauss_legendre: need at least one node");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      // one more evaluation at the converged root for the weight
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Orthonormal associated Legendre functions Pbar_l^m(cos theta), without the
/// Condon-Shortley phase, such that Pbar_l^m(cos theta) e^{i m phi} has unit
/// L2 norm on the sphere. `out` is laid out m-major: for each m the values
/// for l = m..l_max are contiguous, starting at offset sum_{m'<m}(l_max+1-m').
inline void normalized_legendre(int l_max, double x, double s, double* out) {
  std::size_t off = 0;
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= l_max; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    double* p = out + off;
    p[0] = pmm;
    if (m < l_max) p[1] = std::sqrt(2.0 * m + 3.0) * x * pmm;
    for (int l = m + 2; l <= l_max; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) /
                                 (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      p[l - m] = a * (x * p[l - m - 1] - b * p[l - m - 2]);
    }
    off += static_cast<std::size_t>(l_max + 1 - m);
  }
}

}  // namespace detail

/// Real orthonormal spherical harmonic Y_{l,m}: m > 0 carries sqrt(2) cos(m phi),
/// m < 0 carries sqrt(2) sin(|m| phi). Y_{1,0} = sqrt(3/4pi) cos(theta).
inline double real_spherical_harmonic(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  if (l < 0 || am > l) throw PreconditionError("real_spherical_harmonic: need |m| <= l");
  std::vector<double> p(static_cast<std::size_t>(l + 1) * (l + 2) / 2);
  detail::normalized_legendre(l, std::cos(theta), std::sin(theta), p.data());
  std::size_t off = 0;
  for (int mm = 0; mm < am; ++mm) off += static_cast<std::size_t>(l + 1 - mm);
  const double plm = p[off + (l - am)];
  if (m == 0) return plm;
  if (m > 0) return std::sqrt(2.0) * plm * std::cos(am * phi);
  return std::sqrt(2.0) * plm * std::sin(am * phi);
}

/// Pseudospectral grid: n_theta Gauss-Legendre colatitudes times n_phi
/// equispaced longitudes, with a real spherical-harmonic transform truncated
/// at degree l_max. Nodes are stored theta-major (row-major over
/// (theta, phi)). Instances are immutable and may be shared across threads.
class SphereGrid {
 public:
  explicit SphereGrid(int l_max) : SphereGrid(l_max, l_max + 1, 2 * (l_max + 1)) {}

  SphereGrid(int l_max, int n_theta, int n_phi)
      : l_max_(l_max), n_theta_(n_theta), n_phi_(n_phi) {
    if (l_max < 0) throw PreconditionError("SphereGrid: l_max must be nonnegative");
    if (n_theta < l_max + 1)
      throw PreconditionError("SphereGrid: n_theta must be at least l_max + 1");
    if (n_phi < 2 * l_max + 2)
      throw PreconditionError("SphereGrid: n_phi must exceed 2 l_max");
    std::vector<double> x, w;
    gauss_legendre(n_theta, x, w);
    theta_.resize(n_theta);
    sin_theta_.resize(n_theta);
    cos_theta_ = x;
    ring_weight_.resize(n_theta);
    for (int i = 0; i < n_theta; ++i) {
      theta_[i] = std::acos(x[i]);
      sin_theta_[i] = std::sqrt((1.0 - x[i]) * (1.0 + x[i]));
      ring_weight_[i] = w[i] * 2.0 * kPi / n_phi;
    }
    phi_.resize(n_phi);
    for (int j = 0; j < n_phi; ++j) phi_[j] = 2.0 * kPi * j / n_phi;
    weights_.resize(size());
    for (int i = 0; i < n_theta; ++i)
      for (int j = 0; j < n_phi; ++j) weights_[node(i, j)] = ring_weight_[i];

    // coefficient layout: m-major, cosine block then sine block per m
    coeff_cos_offset_.resize(l_max + 1);
    coeff_sin_offset_.resize(l_max + 1);
    std::size_t off = 0;
    for (int m = 0; m <= l_max; ++m) {
      coeff_cos_offset_[m] = off;
      off += static_cast<std::size_t>(l_max + 1 - m);
      if (m > 0) {
        coeff_sin_offset_[m] = off;
        off += static_cast<std::size_t>(l_max + 1 - m);
      }
    }
    degree_.resize(off);
    for (int m = 0; m <= l_max; ++m)
      for (int l = m; l <= l_max; ++l) {
        degree_[index(l, m)] = l;
        if (m > 0) degree_[index(l, -m)] = l;
      }

    // Legendre table laid out [m][ring][l - m]
    legendre_offset_.resize(l_max + 1);
    std::size_t total = 0;
    for (int m = 0; m <= l_max; ++m) {
      legendre_offset_[m] = total;
      total += static_cast<std::size_t>(n_theta) * (l_max + 1 - m);
    }
    legendre_.resize(total);
    std::vector<double> ring(static_cast<std::size_t>(l_max + 1) * (l_max + 2) / 2);
    for (int i = 0; i < n_theta; ++i) {
      detail::normalized_legendre(l_max, cos_theta_[i], sin_theta_[i], ring.data());
      std::size_t roff = 0;
      for (int m = 0; m <= l_max; ++m) {
        const std::size_t len = static_cast<std::size_t>(l_max + 1 - m);
        std::copy_n(ring.begin() + roff, len,
                    legendre_.begin() + legendre_offset_[m] + i * len);
        roff += len;
      }
    }

    const int n_freq = n_phi / 2 + 1;
    std::vector<double> rbuf(size());
    std::vector<fftw_complex> cbuf(static_cast<std::size_t>(n_theta) * n_freq);
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_many_dft_r2c(1, &n_phi_, n_theta, rbuf.data(), nullptr, 1, n_phi,
                                      cbuf.data(), nullptr, 1, n_freq,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_many_dft_c2r(1, &n_phi_, n_theta, cbuf.data(), nullptr, 1, n_freq,
                                       rbuf.data(), nullptr, 1, n_phi,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  SphereGrid(const SphereGrid&) = delete;
  SphereGrid& operator=(const SphereGrid&) = delete;

  ~SphereGrid() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  int l_max() const noexcept { return l_max_; }
  int n_theta() const noexcept { return n_theta_; }
  int n_phi() const noexcept { return n_phi_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_theta_) * n_phi_; }
  std::size_t num_coeffs() const noexcept { return degree_.size(); }

  std::size_t node(int i_theta, int j_phi) const noexcept {
    return static_cast<std::size_t>(i_theta) * n_phi_ + j_phi;
  }
  double theta(int i_theta) const { return theta_[i_theta]; }
  double phi(int j_phi) const { return phi_[j_phi]; }
  double cos_theta(int i_theta) const { return cos_theta_[i_theta]; }
  double sin_theta(int i_theta) const { return sin_theta_[i_theta]; }
  double node_theta(std::size_t k) const { return theta_[k / n_phi_]; }
  double node_phi(std::size_t k) const { return phi_[k % n_phi_]; }

  /// Quadrature weights of the round unit sphere (sum 4 pi).
  std::span<const double> weights() const noexcept { return weights_; }

  /// Position of Y_{l,m} in a coefficient vector.
  std::size_t index(int l, int m) const {
    const int am = std::abs(m);
    if (l < 0 || l > l_max_ || am > l) throw PreconditionError("SphereGrid::index out of range");
    return (m >= 0 ? coeff_cos_offset_[am] : coeff_sin_offset_[am]) + (l - am);
  }
  /// Degree l of the harmonic stored at coefficient position k.
  int degree(std::size_t k) const { return degree_[k]; }

  /// Quadrature projection onto the harmonics of degree <= l_max.
  void analyze(std::span<const double> values, std::span<double> coeffs) const {
    check_sizes(values.size(), coeffs.size());
    const int n_freq = n_phi_ / 2 + 1;
    thread_local std::vector<double> rbuf;
    thread_local std::vector<std::complex<double>> cbuf;
    rbuf.assign(values.begin(), values.end());
    cbuf.resize(static_cast<std::size_t>(n_theta_) * n_freq);
    fftw_execute_dft_r2c(forward_, rbuf.data(),
                         reinterpret_cast<fftw_complex*>(cbuf.data()));
    std::fill(coeffs.begin(), coeffs.end(), 0.0);
    const double sqrt2 = std::sqrt(2.0);
    for (int m = 0; m <= l_max_; ++m) {
      const std::size_t len = static_cast<std::size_t>(l_max_ + 1 - m);
      double* cc = coeffs.data() + coeff_cos_offset_[m];
      double* cs = m > 0 ? coeffs.data() + coeff_sin_offset_[m] : nullptr;
      for (int i = 0; i < n_theta_; ++i) {
        const std::complex<double> f = cbuf[static_cast<std::size_t>(i) * n_freq + m];
        const double scale = ring_weight_[i] * (m > 0 ? sqrt2 : 1.0);
        const double re = f.real() * scale;
        const double im = -f.imag() * scale;
        const double* p = legendre_.data() + legendre_offset_[m] + i * len;
        for (std::size_t k = 0; k < len; ++k) cc[k] += p[k] * re;
        if (cs)
          for (std::size_t k = 0; k < len; ++k) cs[k] += p[k] * im;
      }
    }
  }

  /// Evaluates a coefficient vector at every node.
  void synthesize(std::span<const double> coeffs, std::span<double> values) const {
    check_sizes(values.size(), coeffs.size());
    const int n_freq = n_phi_ / 2 + 1;
    thread_local std::vector<std::complex<double>> cbuf;
    cbuf.assign(static_cast<std::size_t>(n_theta_) * n_freq, {0.0, 0.0});
    const double half_sqrt2 = std::sqrt(2.0) / 2.0;
    for (int m = 0; m <= l_max_; ++m) {
      const std::size_t len = static_cast<std::size_t>(l_max_ + 1 - m);
      const double* cc = coeffs.data() + coeff_cos_offset_[m];
      const double* cs = m > 0 ? coeffs.data() + coeff_sin_offset_[m] : nullptr;
      for (int i = 0; i < n_theta_; ++i) {
        const double* p = legendre_.data() + legendre_offset_[m] + i * len;
        double a = 0.0, b = 0.0;
        for (std::size_t k = 0; k < len; ++k) a += p[k] * cc[k];
        if (cs)
          for (std::size_t k = 0; k < len; ++k) b += p[k] * cs[k];
        cbuf[static_cast<std::size_t>(i) * n_freq + m] =
            m == 0 ? std::complex<double>(a, 0.0)
                   : std::complex<double>(a * half_sqrt2, -b * half_sqrt2);
      }
    }
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(cbuf.data()),
                         values.data());
  }

  /// Evaluates a coefficient vector at an arbitrary point.
  double evaluate(std::span<const double> coeffs, double theta, double phi) const {
    if (coeffs.size() != num_coeffs()) throw DimensionError("evaluate: coefficient count");
    std::vector<double> p(static_cast<std::size_t>(l_max_ + 1) * (l_max_ + 2) / 2);
    detail::normalized_legendre(l_max_, std::cos(theta), std::sin(theta), p.data());
    double sum = 0.0;
    std::size_t off = 0;
    for (int m = 0; m <= l_max_; ++m) {
      const std::size_t len = static_cast<std::size_t>(l_max_ + 1 - m);
      double a = 0.0, b = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        a += p[off + k] * coeffs[coeff_cos_offset_[m] + k];
        if (m > 0) b += p[off + k] * coeffs[coeff_sin_offset_[m] + k];
      }
      sum += m == 0 ? a : std::sqrt(2.0) * (a * std::cos(m * phi) + b * std::sin(m * phi));
      off += len;
    }
    return sum;
  }

 private:
  void check_sizes(std::size_t n_values, std::size_t n_coeffs) const {
    if (n_values != size() || n_coeffs != num_coeffs())
      throw DimensionError("SphereGrid transform: size mismatch");
  }

  int l_max_;
  int n_theta_;
  int n_phi_;
  std::vector<double> theta_, cos_theta_, sin_theta_, ring_weight_, phi_, weights_;
  std::vector<std::size_t> coeff_cos_offset_, coeff_sin_offset_, legendre_offset_;
  std::vector<int> degree_;
  std::vector<double> legendre_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

inline GridPtr make_grid(int l_max) { return std::make_shared<const SphereGrid>(l_max); }

/// Scalar samples, one per node of a shared grid.
template <typename T>
class BasicGridFunction {
 public:
  using value_type = T;

  explicit BasicGridFunction(GridPtr grid, T fill = T{})
      : grid_(std::move(grid)), values_(grid_->size(), fill) {}

  BasicGridFunction(GridPtr grid, std::vector<T> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size())
      throw DimensionError("GridFunction: value count " + std::to_string(values_.size()) +
                           " does not match node count " + std::to_string(grid_->size()));
  }

  /// Samples f(theta, phi) at every node.
  static BasicGridFunction from_function(GridPtr grid,
                                         const std::function<T(double, double)>& f) {
    BasicGridFunction out(grid);
    for (int i = 0; i < grid->n_theta(); ++i)
      for (int j = 0; j < grid->n_phi(); ++j)
        out.values_[grid->node(i, j)] = f(grid->theta(i), grid->phi(j));
    return out;
  }

  const SphereGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const T> values() const noexcept { return values_; }
  std::span<T> values() noexcept { return values_; }
  T& operator[](std::size_t k) { return values_[k]; }
  const T& operator[](std::size_t k) const { return values_[k]; }

  bool same_grid(const BasicGridFunction& o) const noexcept { return grid_ == o.grid_; }

  BasicGridFunction& operator+=(const BasicGridFunction& o) {
    require_same(o);
    for (std::size_t k = 0; k < size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  BasicGridFunction& operator-=(const BasicGridFunction& o) {
    require_same(o);
    for (std::size_t k = 0; k < size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  BasicGridFunction& operator*=(T s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  friend BasicGridFunction operator+(BasicGridFunction a, const BasicGridFunction& b) {
    return a += b;
  }
  friend BasicGridFunction operator-(BasicGridFunction a, const BasicGridFunction& b) {
    return a -= b;
  }
  friend BasicGridFunction operator*(BasicGridFunction a, T s) { return a *= s; }
  friend BasicGridFunction operator*(T s, BasicGridFunction a) { return a *= s; }

  void require_same(const BasicGridFunction& o) const {
    if (!same_grid(o)) throw DimensionError("GridFunction: operands live on different grids");
  }

 private:
  GridPtr grid_;
  std::vector<T> values_;
};

using GridFunction = BasicGridFunction<double>;
using ComplexGridFunction = BasicGridFunction<std::complex<double>>;

/// One real spherical-harmonic term (l, m, coefficient).
struct HarmonicTerm {
  int l = 0;
  int m = 0;
  double value = 0.0;
};

inline std::vector<double> analyze(const GridFunction& f) {
  std::vector<double> c(f.grid().num_coeffs());
  f.grid().analyze(f.values(), c);
  return c;
}

inline GridFunction synthesize(const GridPtr& grid, std::span<const double> coeffs) {
  GridFunction f(grid);
  grid->synthesize(coeffs, f.values());
  return f;
}

/// Band-limited field sum_k value_k Y_{l_k, m_k}.
inline GridFunction from_harmonics(const GridPtr& grid, std::span<const HarmonicTerm> terms) {
  std::vector<double> c(grid->num_coeffs(), 0.0);
  for (const auto& t : terms) c[grid->index(t.l, t.m)] += t.value;
  return synthesize(grid, c);
}

inline GridFunction harmonic(const GridPtr& grid, int l, int m, double scale = 1.0) {
  const HarmonicTerm t{l, m, scale};
  return from_harmonics(grid, std::span<const HarmonicTerm>(&t, 1));
}

}  // namespace vortexlab
