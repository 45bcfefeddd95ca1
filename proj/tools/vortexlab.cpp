// Command-line driver: one subcommand per experiment, each reading a JSON
// config and writing CSV / JSON under the output directory.
//
// Exit codes: 0 success, 1 computational failure, 2 configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "vortexlab/experiment.hpp"
#include "vortexlab/selftest.hpp"

namespace fs = std::filesystem;
using namespace vortexlab;

namespace {

struct Common {
  std::string config;
  std::string output_dir;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const Common& o) {
  if (o.config.empty()) throw ConfigError("--config", "a config file is required");
  ExperimentConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  fs::create_directories(c.output_dir);
  write_json(fs::path(c.output_dir) / "schema.json", csv_schema());
  return c;
}

int cmd_solve_vortex(const Common& o) {
  const ExperimentConfig c = load(o);
  const Setup s = make_setup(c);
  const auto divisors = config_divisors(c);
  const bool dump = c.option<bool>("dump_fields", false);
  json records = json::array();
  bool failed = false;
  for (std::size_t d = 0; d < divisors.size(); ++d) {
    for (double eps : c.eps_list) {
      json r{{"divisor_id", d}, {"divisor", divisor_json(divisors[d])}, {"eps", eps}};
      try {
        const VortexSolution v = solve_vortex(divisors[d], eps, s.h);
        const auto dev = pseudo_vortex_deviation(v, s.h);
        r.update({{"status", "ok"},
                  {"tau", v.tau},
                  {"residual", v.residual},
                  {"u_c0", dev.u_c0},
                  {"field_dev", dev.field_dev},
                  {"curvature_dev", dev.curvature_dev},
                  {"bradlow_residual", v.bradlow_residual},
                  {"newton_iters", v.newton_iters},
                  {"energy", energy(v, s.h)},
                  {"section", json::array()}});
        for (Eigen::Index j = 0; j < v.section.coeffs.size(); ++j)
          r["section"].push_back({v.section.coeffs(j).real(), v.section.coeffs(j).imag()});
        if (dump) {
          char tag[64];
          std::snprintf(tag, sizeof tag, "d%zu_eps%.6g", d, eps);
          const auto f = reconstruct_fields(v, s.h);
          const fs::path dir(c.output_dir);
          write_field_dump(dir / (std::string("u_") + tag), v.u, "log-ratio field u");
          write_field_dump(dir / (std::string("phi_norm_") + tag), f.phi_norm, "|phi|_h");
          write_field_dump(dir / (std::string("magnetic_") + tag), f.magnetic, "*F_A");
        }
      } catch (const Error& e) {
        r.update({{"status", error_code(e)}, {"message", e.what()}});
        failed = true;
      }
      records.push_back(r);
    }
  }
  write_json(fs::path(c.output_dir) / "solve_vortex.json",
             {{"config_hash", c.hash()}, {"l_max", c.l_max}, {"config", c.to_json()}, {"records", records}});
  std::cout << records.size() << " solves written to " << c.output_dir << "\n";
  return failed ? 1 : 0;
}

void write_metric_rows(const ExperimentConfig& c, const std::vector<SampleRecord>& rows,
                       const fs::path& path, bool full) {
  std::vector<std::string> cols{"eps", "divisor_id", "status", "deviation", "min_eig", "max_eig",
                                "gauge_residual_max"};
  if (full)
    for (const char* extra : {"residual", "newton_iters", "bradlow_residual", "energy_rel_error",
                              "field_dev", "curvature_dev", "u_c0", "asymmetry"})
      cols.emplace_back(extra);
  CsvWriter w(path, cols, c.hash(), c.l_max);
  for (const auto& r : rows) {
    std::vector<std::string> cells{fmt(r.eps), std::to_string(r.divisor_id), r.status, fmt(r.deviation),
                                   fmt(r.min_eig), fmt(r.max_eig), fmt(r.gauge_residual_max)};
    if (full)
      for (const std::string& v :
           {fmt(r.residual), std::to_string(r.newton_iters), fmt(r.bradlow_residual),
            fmt(r.energy_rel_error), fmt(r.pseudo.field_dev), fmt(r.pseudo.curvature_dev),
            fmt(r.pseudo.u_c0), fmt(r.asymmetry)})
        cells.push_back(v);
    w.row(cells);
  }
}

int cmd_metric_sample(const Common& o) {
  const ExperimentConfig c = load(o);
  const Setup s = make_setup(c);
  const auto rows = compute_samples(c, s, true, o.threads);
  write_metric_rows(c, rows, fs::path(c.output_dir) / "metric_samples.csv", false);
  const auto divisors = config_divisors(c);
  json samples = json::array();
  bool failed = false;
  for (const auto& r : rows) {
    failed |= r.status != "ok";
    samples.push_back({{"eps", r.eps},
                       {"divisor_id", r.divisor_id},
                       {"divisor", divisor_json(divisors[r.divisor_id])},
                       {"status", r.status},
                       {"message", r.message},
                       {"G_eps", matrix_json(r.G_eps)},
                       {"deviation", r.deviation},
                       {"asymmetry", r.asymmetry},
                       {"gauge_residual_max", r.gauge_residual_max}});
  }
  write_json(fs::path(c.output_dir) / "metric_samples.json",
             {{"config_hash", c.hash()}, {"l_max", c.l_max}, {"samples", samples}});
  std::cout << rows.size() << " metric samples written to " << c.output_dir << "\n";
  return failed ? 1 : 0;
}

int cmd_sweep(const Common& o) {
  const ExperimentConfig c = load(o);
  const SweepResult r = run_sweep(c, o.threads);
  write_metric_rows(c, r.rows, fs::path(c.output_dir) / "sweep.csv", true);
  json per = json::array();
  for (const auto& f : r.per_divisor) per.push_back(fit_json(f));
  write_json(fs::path(c.output_dir) / "sweep_summary.json",
             {{"config_hash", c.hash()},
              {"l_max", c.l_max},
              {"config", c.to_json()},
              {"eps_list", c.eps_list},
              {"pooled_mean_deviation", r.pooled_mean},
              {"pooled_fit", fit_json(r.pooled)},
              {"per_divisor_fit", per},
              {"any_failed", r.any_failed}});
  if (r.pooled)
    std::cout << "pooled slope " << r.pooled->slope << " (r^2 " << r.pooled->r_squared << ")\n";
  else
    std::cout << "pooled fit not applicable (vanishing deviations or fewer than 4 eps)\n";
  return r.any_failed ? 1 : 0;
}

int cmd_spectrum(const Common& o) {
  const ExperimentConfig c = load(o);
  const SpectrumResult r = run_spectrum(c, o.threads);
  CsvWriter w(fs::path(c.output_dir) / "spectrum.csv",
              {"eps", "k", "lambda_eps", "lambda_fs", "ratio", "bound_lower", "bound_upper", "within_bounds"},
              c.hash(), c.l_max);
  for (const auto& row : r.rows)
    w.row({fmt(row.eps), std::to_string(row.k), fmt(row.lambda_eps), fmt(row.lambda_fs), fmt(row.ratio),
           fmt(row.bounds.lower), fmt(row.bounds.upper), row.within ? "1" : "0"});
  json fields = json::array();
  bool flagged = r.fs.discretization_failure;
  for (std::size_t e = 0; e < r.fields.size(); ++e) {
    const auto& f = r.fields[e];
    flagged |= f.discretization_failure;
    fields.push_back({{"eps", f.eps},
                      {"volume_g", f.eps * f.volume()},
                      {"volume_g_eps", f.volume()},
                      {"anisotropy", f.anisotropy},
                      {"max_deviation", f.max_deviation},
                      {"max_ratio_deviation", r.max_ratio_dev[e]},
                      {"eigenvalues", r.spectra[e].eigenvalues}});
  }
  write_json(fs::path(c.output_dir) / "spectrum_summary.json",
             {{"config_hash", c.hash()},
              {"l_max", c.l_max},
              {"moduli_grid", {c.moduli_samples, 2 * c.moduli_samples}},
              {"C_fit", r.C},
              {"fs_volume", r.fs.volume()},
              {"fs_eigenvalues", r.fs_computed.eigenvalues},
              {"fields", fields},
              {"all_within_bounds", r.all_within}});
  std::cout << "C_fit " << r.C << ", all ratios within bounds: " << (r.all_within ? "yes" : "no") << "\n";
  return (flagged || !r.all_within) ? 1 : 0;
}

int cmd_laxmilgram(const Common& o) {
  const ExperimentConfig c = load(o);
  const int instances = c.option<int>("instances", 100);
  if (instances < 1) throw ConfigError("options.instances", "must be positive");
  const GridPtr g = make_grid(c.l_max);
  std::vector<std::pair<std::string, SurfaceMetric>> metrics{{"round", SurfaceMetric::round(g)}};
  if (!c.rho_coeffs.empty()) metrics.emplace_back("config", SurfaceMetric(g, c.rho_coeffs));
  const auto recs = run_laxmilgram(metrics, instances, c.seed, o.threads);
  CsvWriter w(fs::path(c.output_dir) / "laxmilgram.csv", {"metric", "instance", "lhs", "rhs", "satisfied", "residual"},
              c.hash(), c.l_max);
  int ok = 0;
  for (const auto& r : recs) {
    ok += r.result.satisfied;
    w.row({r.metric, std::to_string(r.instance), fmt(r.result.lhs), fmt(r.result.rhs),
           r.result.satisfied ? "1" : "0", fmt(r.result.residual)});
  }
  std::cout << ok << "/" << recs.size() << " instances satisfy the bound\n";
  return ok == static_cast<int>(recs.size()) ? 0 : 1;
}

int cmd_selftest() {
  const auto results = run_selftest();
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s  %s  (error %.3g)%s%s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.error,
                r.message.empty() ? "" : "  ", r.message.c_str());
    failed += !r.passed;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Abelian Higgs vortices on conformal spheres and their moduli-space metrics"};
  app.require_subcommand(1);
  Common opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--output-dir", opts.output_dir, "directory for CSV / JSON output");
    sub->add_option("--threads", opts.threads, "worker threads (0 = all cores)");
    sub->add_option("--seed", opts.seed, "overrides the config seed");
  };
  auto* solve = app.add_subcommand("solve-vortex", "solve the vortex equation per divisor and eps");
  auto* metric = app.add_subcommand("metric-sample", "L2 metric matrices per divisor and eps");
  auto* sweep = app.add_subcommand("sweep", "eps sweep with convergence-order fits");
  auto* spectrum = app.add_subcommand("spectrum", "n = 1 moduli spectra against Fubini-Study");
  auto* lax = app.add_subcommand("check-laxmilgram", "randomized a priori bound suite");
  auto* self = app.add_subcommand("selftest", "closed-form identity checks");
  for (auto* s : {solve, metric, sweep, spectrum, lax}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*self) return cmd_selftest();
    if (*solve) return cmd_solve_vortex(opts);
    if (*metric) return cmd_metric_sample(opts);
    if (*sweep) return cmd_sweep(opts);
    if (*spectrum) return cmd_spectrum(opts);
    if (*lax) return cmd_laxmilgram(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
