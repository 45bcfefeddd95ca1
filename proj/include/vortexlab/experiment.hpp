#pragma once

/// \file
/// Experiment configuration, the eps sweeps behind each CLI subcommand,
/// log-log convergence fits and the CSV / JSON writers.

#include "json.hpp"

#include <algorithm>
#include <cfloat>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vortexlab/bundle.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/moduli_metric.hpp"
#include "vortexlab/parallel.hpp"
#include "vortexlab/spectral.hpp"
#include "vortexlab/surface_metric.hpp"
#include "vortexlab/vortex.hpp"

namespace vortexlab {

using json = nlohmann::json;

struct ExperimentConfig {
  int n = 1;
  std::vector<HarmonicTerm> rho_coeffs;
  std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05, 0.025};
  int l_max = 63;
  int moduli_samples = 24;  // colatitudes of the n = 1 moduli grid (longitudes: twice that)
  std::optional<int> random_divisors = 5;
  std::vector<std::vector<std::array<double, 3>>> explicit_divisors;
  bool adversarial = false;  // add coincident and antipodal divisors
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  json options = json::object();

  json to_json() const {
    json j;
    j["n"] = n;
    j["rho_coeffs"] = json::array();
    for (const auto& t : rho_coeffs) j["rho_coeffs"].push_back({t.l, t.m, t.value});
    j["eps_list"] = eps_list;
    j["l_max"] = l_max;
    j["moduli_samples"] = moduli_samples;
    if (random_divisors) {
      j["divisor_spec"] = "random:" + std::to_string(*random_divisors);
    } else {
      j["divisor_spec"] = json::array();
      for (const auto& d : explicit_divisors) {
        json pts = json::array();
        for (const auto& p : d) pts.push_back({p[0], p[1], p[2]});
        j["divisor_spec"].push_back(pts);
      }
    }
    j["adversarial"] = adversarial;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["options"] = options;
    return j;
  }

  /// FNV-1a of the canonical JSON form, as 16 hex digits. Where the output
  /// goes is not part of what was computed.
  std::string hash() const {
    json j = to_json();
    j.erase("output_dir");
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : j.dump()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  template <typename T>
  T option(const std::string& key, T fallback) const {
    if (!options.contains(key)) return fallback;
    try {
      return options.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("options." + key, e.what());
    }
  }
};

namespace detail {

inline const json& require_field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(key, "missing required field");
  return j.at(key);
}

template <typename T>
T get_field(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  static const std::vector<std::string> known{"n",    "rho_coeffs", "eps_list",   "l_max",
                                              "moduli_samples", "divisor_spec", "adversarial",
                                              "seed", "output_dir", "options"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(key, "unknown field");

  ExperimentConfig c;
  c.n = detail::get_field<int>(detail::require_field(j, "n"), "n");
  if (c.n < 0) throw ConfigError("n", "must be nonnegative");
  if (j.contains("l_max")) c.l_max = detail::get_field<int>(j.at("l_max"), "l_max");
  if (c.l_max < 4) throw ConfigError("l_max", "must be at least 4");

  if (j.contains("rho_coeffs")) {
    const auto& r = j.at("rho_coeffs");
    if (!r.is_array()) throw ConfigError("rho_coeffs", "must be a list of [l, m, value]");
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string field = "rho_coeffs[" + std::to_string(i) + "]";
      if (!r[i].is_array() || r[i].size() != 3) throw ConfigError(field, "must be [l, m, value]");
      HarmonicTerm t{detail::get_field<int>(r[i][0], field), detail::get_field<int>(r[i][1], field),
                     detail::get_field<double>(r[i][2], field)};
      if (t.l < 0 || std::abs(t.m) > t.l) throw ConfigError(field, "needs 0 <= |m| <= l");
      if (t.l > c.l_max) throw ConfigError(field, "degree exceeds l_max");
      if (!std::isfinite(t.value)) throw ConfigError(field, "value must be finite");
      c.rho_coeffs.push_back(t);
    }
  }

  if (j.contains("eps_list")) {
    c.eps_list = detail::get_field<std::vector<double>>(j.at("eps_list"), "eps_list");
    if (c.eps_list.empty()) throw ConfigError("eps_list", "must not be empty");
    for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
      if (!(c.eps_list[i] > 0.0 && c.eps_list[i] < 1.0))
        throw ConfigError("eps_list", "entries must lie in (0, 1)");
      if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1]))
        throw ConfigError("eps_list", "must be strictly decreasing");
    }
  }

  if (j.contains("moduli_samples")) {
    c.moduli_samples = detail::get_field<int>(j.at("moduli_samples"), "moduli_samples");
    if (c.moduli_samples < 4) throw ConfigError("moduli_samples", "must be at least 4");
  }

  if (j.contains("divisor_spec")) {
    const auto& d = j.at("divisor_spec");
    if (d.is_string()) {
      const std::string s = d.get<std::string>();
      const std::string prefix = "random:";
      if (s.rfind(prefix, 0) != 0) throw ConfigError("divisor_spec", "string form must be random:<count>");
      try {
        std::size_t used = 0;
        const int count = std::stoi(s.substr(prefix.size()), &used);
        if (used != s.size() - prefix.size() || count < 1) throw std::invalid_argument("count");
        c.random_divisors = count;
      } catch (const std::exception&) {
        throw ConfigError("divisor_spec", "random:<count> needs a positive integer count");
      }
    } else if (d.is_array()) {
      c.random_divisors.reset();
      for (std::size_t i = 0; i < d.size(); ++i) {
        const std::string field = "divisor_spec[" + std::to_string(i) + "]";
        if (!d[i].is_array()) throw ConfigError(field, "must be a list of [theta, phi, multiplicity]");
        std::vector<std::array<double, 3>> pts;
        int degree = 0;
        for (const auto& p : d[i]) {
          if (!p.is_array() || p.size() != 3) throw ConfigError(field, "points are [theta, phi, multiplicity]");
          std::array<double, 3> t{detail::get_field<double>(p[0], field),
                                  detail::get_field<double>(p[1], field),
                                  detail::get_field<double>(p[2], field)};
          if (t[2] < 1 || t[2] != std::floor(t[2]))
            throw ConfigError(field, "multiplicity must be a positive integer");
          degree += static_cast<int>(t[2]);
          pts.push_back(t);
        }
        if (degree != c.n) throw ConfigError(field, "multiplicities must sum to n");
        c.explicit_divisors.push_back(std::move(pts));
      }
    } else {
      throw ConfigError("divisor_spec", "must be random:<count> or a list of divisors");
    }
  }

  if (j.contains("adversarial")) c.adversarial = detail::get_field<bool>(j.at("adversarial"), "adversarial");
  if (j.contains("seed")) c.seed = detail::get_field<std::uint64_t>(j.at("seed"), "seed");
  if (j.contains("output_dir")) c.output_dir = detail::get_field<std::string>(j.at("output_dir"), "output_dir");
  if (j.contains("options")) {
    if (!j.at("options").is_object()) throw ConfigError("options", "must be an object");
    c.options = j.at("options");
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// The divisors a config names, in a fixed order: explicit or seeded random
/// ones first, then (if requested) the coincident and antipodal clusters.
inline std::vector<Divisor> config_divisors(const ExperimentConfig& c) {
  std::vector<Divisor> out;
  if (c.n == 0) return {Divisor()};
  if (c.random_divisors) {
    std::mt19937_64 rng(c.seed);
    for (int i = 0; i < *c.random_divisors; ++i) out.push_back(Divisor::random(c.n, rng));
  } else {
    for (const auto& d : c.explicit_divisors) out.push_back(Divisor::from_angles(d));
  }
  if (c.adversarial) {
    const Vec3 p = unit_vector(0.7, 0.3);
    out.push_back(Divisor::single(p, c.n));
    if (c.n >= 2) {
      std::vector<DivisorPoint> pts{{p, c.n / 2 + c.n % 2}, {-p, c.n / 2}};
      out.push_back(Divisor(std::move(pts)));
    }
  }
  return out;
}

struct ConvergenceFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;  // (log eps, log dev)
};

/// Least-squares line through (log eps, log dev).
inline ConvergenceFit fit_convergence_order(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 4) throw PreconditionError("fit_convergence_order: need at least 4 points");
  ConvergenceFit f;
  for (const auto& [e, d] : pts) {
    if (!(e > 0.0) || !(d > 0.0))
      throw PreconditionError("fit_convergence_order: eps and deviation must be positive");
    f.points.emplace_back(std::log(e), std::log(d));
  }
  const double n = static_cast<double>(f.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : f.points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : f.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw PreconditionError("fit_convergence_order: eps values must differ");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

/// The metric and hermitian structure a config describes.
struct Setup {
  GridPtr grid;
  SurfaceMetric metric;
  HermitianStructure h;
};

inline Setup make_setup(const ExperimentConfig& c) {
  GridPtr g = make_grid(c.l_max);
  SurfaceMetric m(g, c.rho_coeffs);
  HermitianStructure h = constant_curvature_weight(m, c.n);
  return {g, m, std::move(h)};
}

inline std::string error_code(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const DegenerateDirectionError*>(&e)) return "degenerate_direction";
  if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
  return "error";
}

/// One (divisor, eps) cell of a sweep.
struct SampleRecord {
  std::size_t divisor_id = 0;
  double eps = 0.0;
  std::string status = "ok";
  std::string message;
  // vortex
  double residual = 0.0;
  int newton_iters = 0;
  double bradlow_residual = 0.0;
  double energy_rel_error = 0.0;
  double flux_error = 0.0;
  PseudoVortexDeviation pseudo;
  double second_equation = 0.0;  // ||*F_A - (tau - |phi|^2)/2||_L2
  // metric
  double deviation = 0.0;
  double min_eig = 1.0;
  double max_eig = 1.0;
  double gauge_residual_max = 0.0;
  double asymmetry = 0.0;
  double leading_deviation = 0.0;  // ||G_leading - G_eps||_2
  Eigen::MatrixXd G_eps;
};

inline SampleRecord compute_sample(const Divisor& d, std::size_t id, double eps, const Setup& s,
                                   bool with_metric) {
  SampleRecord r;
  r.divisor_id = id;
  r.eps = eps;
  try {
    const VortexSolution v = solve_vortex(d, eps, s.h);
    r.residual = v.residual;
    r.newton_iters = v.newton_iters;
    r.bradlow_residual = v.bradlow_residual;
    const int n = s.h.degree();
    r.energy_rel_error = std::abs(energy(v, s.h) - kPi * v.tau * n) / (kPi * v.tau * std::max(n, 1));
    const ReconstructedFields f = reconstruct_fields(v, s.h);
    r.flux_error = std::abs(integrate(f.magnetic, s.metric) - 2.0 * kPi * n);
    GridFunction second(s.grid);
    for (std::size_t k = 0; k < second.size(); ++k)
      second[k] = f.magnetic[k] - 0.5 * (v.tau - f.phi_norm[k] * f.phi_norm[k]);
    r.second_equation = detail::g_l2_norm(second, s.metric);
    r.pseudo = pseudo_vortex_deviation(v, s.h);
    if (with_metric && n > 0) {
      const TangentFrame frame = horizontal_basis(v.section, s.h.gram());
      const MetricSample m = assemble_metric(v, frame, s.h);
      r.deviation = m.deviation;
      const Eigen::VectorXd ev = m.eigenvalues();
      r.min_eig = ev.minCoeff();
      r.max_eig = ev.maxCoeff();
      r.gauge_residual_max = m.gauge_residual_max;
      r.asymmetry = m.asymmetry;
      r.leading_deviation =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m.G_leading - m.G_eps, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .cwiseAbs()
              .maxCoeff();
      r.G_eps = m.G_eps;
    } else {
      r.G_eps.resize(0, 0);
    }
  } catch (const Error& e) {
    r.status = error_code(e);
    r.message = e.what();
  }
  return r;
}

/// All (divisor, eps) cells, divisor-major.
inline std::vector<SampleRecord> compute_samples(const ExperimentConfig& c, const Setup& s,
                                                 bool with_metric, int threads) {
  const auto divisors = config_divisors(c);
  const std::size_t ne = c.eps_list.size();
  std::vector<SampleRecord> rows(divisors.size() * ne);
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    rows[i] = compute_sample(divisors[i / ne], i / ne, c.eps_list[i % ne], s, with_metric);
  });
  return rows;
}

/// Deviations at or below this are treated as exact zeros when fitting.
inline constexpr double kDeviationFloor = 1e-12;

struct SweepResult {
  std::vector<SampleRecord> rows;
  std::vector<std::optional<ConvergenceFit>> per_divisor;  // empty when deviations vanish
  std::optional<ConvergenceFit> pooled;  // per-eps mean deviation over all divisors
  std::vector<double> pooled_mean;       // per eps
  bool any_failed = false;
};

inline SweepResult run_sweep(const ExperimentConfig& c, int threads = 1) {
  const Setup s = make_setup(c);
  SweepResult out;
  out.rows = compute_samples(c, s, true, threads);
  const std::size_t ne = c.eps_list.size();
  const std::size_t nd = out.rows.size() / ne;
  for (const auto& r : out.rows) out.any_failed |= r.status != "ok";

  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<std::pair<double, double>> pts;
    bool usable = ne >= 4;
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& r = out.rows[d * ne + e];
      if (r.status != "ok" || !(r.deviation > kDeviationFloor)) usable = false;
      pts.emplace_back(r.eps, r.deviation);
    }
    out.per_divisor.push_back(usable ? std::optional(fit_convergence_order(pts)) : std::nullopt);
  }
  std::vector<std::pair<double, double>> pooled;
  for (std::size_t e = 0; e < ne; ++e) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t d = 0; d < nd; ++d) {
      const auto& r = out.rows[d * ne + e];
      if (r.status != "ok") continue;
      sum += r.deviation;
      ++count;
    }
    const double mean = count ? sum / count : 0.0;
    out.pooled_mean.push_back(mean);
    pooled.emplace_back(c.eps_list[e], mean);
  }
  const bool pooled_ok = ne >= 4 && std::all_of(pooled.begin(), pooled.end(), [](const auto& p) {
                           return p.second > kDeviationFloor;
                         });
  if (pooled_ok) out.pooled = fit_convergence_order(pooled);
  return out;
}

/// Random band-limited field: Gaussian coefficients up to degree l_rand with
/// amplitude 1/(1+l).
template <typename Rng>
GridFunction random_band_limited(const GridPtr& grid, int l_rand, Rng& rng) {
  std::vector<double> c(grid->num_coeffs(), 0.0);
  for (int l = 0; l <= std::min(l_rand, grid->l_max()); ++l)
    for (int m = -l; m <= l; ++m) {
      const double u1 = 1.0 - Divisor::uniform01(rng), u2 = Divisor::uniform01(rng);
      c[grid->index(l, m)] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2) / (1.0 + l);
    }
  return synthesize(grid, c);
}

struct LaxMilgramRecord {
  std::string metric;
  int instance = 0;
  LaxMilgramResult result;
};

/// `instances` random (a, b) pairs with a = f^2 on each metric.
inline std::vector<LaxMilgramRecord> run_laxmilgram(const std::vector<std::pair<std::string, SurfaceMetric>>& metrics,
                                                    int instances, std::uint64_t seed, int threads = 1) {
  std::vector<LaxMilgramRecord> out(metrics.size() * static_cast<std::size_t>(instances));
  for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
    const auto& m = metrics[mi].second;
    m.lambda1();
    // draw sequentially so the instances do not depend on the thread count
    std::mt19937_64 rng(seed + mi);
    std::vector<std::pair<GridFunction, GridFunction>> data;
    for (int i = 0; i < instances; ++i) {
      GridFunction f = random_band_limited(m.grid_ptr(), 4, rng);
      for (auto& v : f.values()) v *= v;
      data.emplace_back(std::move(f), random_band_limited(m.grid_ptr(), 6, rng));
    }
    parallel_for(static_cast<std::size_t>(instances), threads, [&](std::size_t i) {
      out[mi * instances + i] = {metrics[mi].first, static_cast<int>(i),
                                 lax_milgram_check(data[i].first, data[i].second, m)};
    });
  }
  return out;
}

struct SpectrumRow {
  double eps = 0.0;
  int k = 0;  // eigenvalue index with multiplicity
  int cluster = 0;
  double lambda_eps = 0.0;
  double lambda_fs = 0.0;
  double ratio = 0.0;
  RatioBounds bounds;
  bool within = false;
};

/// Slack on within_bounds for the Rayleigh-Ritz discretization error of the ratio.
inline constexpr double kRatioSlack = 1e-9;

struct SpectrumResult {
  std::vector<ModuliMetricField> fields;  // per eps
  ModuliMetricField fs;
  SpectrumReport fs_computed;
  std::vector<SpectrumReport> spectra;  // per eps
  double C = 0.0;                       // max over nodes and eps of deviation / eps
  std::vector<SpectrumRow> rows;
  std::vector<double> max_ratio_dev;  // per eps, over k <= k_max clusters
  bool all_within = true;
};

inline SpectrumResult run_spectrum(const ExperimentConfig& c, int threads = 1) {
  if (c.n != 1) throw ConfigError("n", "the spectrum experiment needs n = 1");
  const Setup s = make_setup(c);
  const int k_max = c.option<int>("k_max", 3);
  const int basis = c.option<int>("basis_degree", 12);
  if (k_max < 1) throw ConfigError("options.k_max", "must be at least 1");
  const int nt = c.moduli_samples;
  const GridPtr mg = std::make_shared<const SphereGrid>(nt - 1, nt, 2 * nt);
  SpectrumResult out{{}, fs_moduli_field(s.h, mg)};
  out.fs_computed = laplace_spectrum(out.fs, k_max, basis);
  for (double eps : c.eps_list) {
    out.fields.push_back(moduli_metric_field(eps, s.metric, s.h, mg, threads));
    out.spectra.push_back(laplace_spectrum(out.fields.back(), k_max, basis));
    out.C = std::max(out.C, out.fields.back().max_deviation / eps);
  }
  const double C = std::max(out.C, DBL_EPSILON);
  const SpectrumReport ref = fs_spectrum(1, k_max);
  for (std::size_t e = 0; e < c.eps_list.size(); ++e) {
    const double eps = c.eps_list[e];
    const RatioBounds b = ratio_bounds(C, eps, 1);
    double worst = 0.0;
    for (std::size_t k = 1; k < ref.eigenvalues.size(); ++k) {
      SpectrumRow row{eps, static_cast<int>(k), static_cast<int>(std::floor(std::sqrt(k))),
                      out.spectra[e].eigenvalues[k], ref.eigenvalues[k]};
      row.ratio = row.lambda_eps / row.lambda_fs;
      row.bounds = b;
      row.within = row.ratio >= b.lower - kRatioSlack && row.ratio <= b.upper + kRatioSlack;
      out.all_within &= row.within;
      worst = std::max(worst, std::abs(row.ratio - 1.0));
      out.rows.push_back(row);
    }
    out.max_ratio_dev.push_back(worst);
  }
  return out;
}

// ---- output ----

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns,
            std::string config_hash, int l_max)
      : out_(path), hash_(std::move(config_hash)), l_max_(l_max), width_(columns.size()) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << "config_hash,l_max";
    for (const auto& c : columns) out_ << ',' << c;
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw DimensionError("CsvWriter: row width does not match header");
    out_ << hash_ << ',' << l_max_;
    for (const auto& c : cells) out_ << ',' << c;
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::string hash_;
  int l_max_;
  std::size_t width_;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Little-endian float64 dump in node order, plus a JSON sidecar.
inline void write_field_dump(const std::filesystem::path& stem, const GridFunction& f,
                             const std::string& description) {
  std::ofstream out(stem.string() + ".bin", std::ios::binary);
  if (!out) throw Error("cannot write " + stem.string() + ".bin");
  for (double v : f.values()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  const auto& g = f.grid();
  json side{{"file", stem.filename().string() + ".bin"},
            {"description", description},
            {"dtype", "float64"},
            {"endianness", "little"},
            {"order", "row-major, theta outer, phi inner"},
            {"n_theta", g.n_theta()},
            {"n_phi", g.n_phi()},
            {"l_max", g.l_max()},
            {"theta_nodes", std::vector<double>(g.n_theta())},
            {"phi_nodes", std::vector<double>(g.n_phi())}};
  for (int i = 0; i < g.n_theta(); ++i) side["theta_nodes"][i] = g.theta(i);
  for (int j = 0; j < g.n_phi(); ++j) side["phi_nodes"][j] = g.phi(j);
  write_json(stem.string() + ".json", side);
}

inline json divisor_json(const Divisor& d) {
  json pts = json::array();
  for (const auto& p : d.points()) {
    const double th = std::acos(std::clamp(p.position.z(), -1.0, 1.0));
    const double ph = std::atan2(p.position.y(), p.position.x());
    pts.push_back({th, ph, p.multiplicity});
  }
  return pts;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

inline json fit_json(const std::optional<ConvergenceFit>& f) {
  if (!f) return nullptr;
  json pts = json::array();
  for (const auto& [x, y] : f->points) pts.push_back({x, y});
  return {{"slope", f->slope}, {"intercept", f->intercept}, {"r_squared", f->r_squared}, {"points", pts}};
}

/// Column documentation written next to the data.
inline json csv_schema() {
  const json prov = {{"config_hash", "FNV-1a 64-bit hash of the canonical config JSON"},
                     {"l_max", "spherical-harmonic truncation degree of the domain grid"}};
  json s;
  s["metric_samples.csv"] = prov;
  s["metric_samples.csv"].update({{"eps", "Bradlow parameter"},
                                  {"divisor_id", "index into the config's divisor list"},
                                  {"status", "ok or an error code"},
                                  {"deviation", "spectral norm of G_eps - I in the horizontal frame"},
                                  {"min_eig", "smallest eigenvalue of G_eps"},
                                  {"max_eig", "largest eigenvalue of G_eps"},
                                  {"gauge_residual_max", "largest relative residual of the gauge-orthogonality solve"}});
  s["sweep.csv"] = s["metric_samples.csv"];
  s["sweep.csv"].update({{"residual", "final L2 residual of the scalar vortex equation"},
                         {"newton_iters", "Newton iterations"},
                         {"bradlow_residual", "| ||phi||^2 - eps | / eps"},
                         {"energy_rel_error", "|E - pi tau n| / (pi tau n)"},
                         {"field_dev", "max |e^{u/2} - 1| |phihat|"},
                         {"curvature_dev", "max |Delta u| / 2"},
                         {"u_c0", "max |u|"},
                         {"asymmetry", "max |B_ij - B_ji| / eps of the unsymmetrized metric"}});
  s["spectrum.csv"] = prov;
  s["spectrum.csv"].update({{"eps", "Bradlow parameter"},
                            {"k", "eigenvalue index counted with multiplicity (0 is the constant mode)"},
                            {"lambda_eps", "eigenvalue of the Laplacian of (M_1, g_eps)"},
                            {"lambda_fs", "closed-form Fubini-Study eigenvalue with the same index"},
                            {"ratio", "lambda_eps / lambda_fs"},
                            {"bound_lower", "lower ratio bound with the fitted C"},
                            {"bound_upper", "upper ratio bound with the fitted C"},
                            {"within_bounds", "1 if the ratio lies in the bounds up to 1e-9"}});
  s["laxmilgram.csv"] = prov;
  s["laxmilgram.csv"].update({{"metric", "round or config"},
                              {"instance", "instance index"},
                              {"lhs", "H1 norm of the solution"},
                              {"rhs", "the a priori bound"},
                              {"satisfied", "1 if lhs <= rhs (1 + 1e-6)"},
                              {"residual", "relative residual of the solve"}});
  return s;
}

}  // namespace vortexlab
