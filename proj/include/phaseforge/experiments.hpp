#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "phaseforge/altproj.hpp"
#include "phaseforge/problem.hpp"
#include "phaseforge/spectral_init.hpp"

namespace phaseforge {

// Relative error at termination below which a trial counts as a recovery.
inline constexpr double kDefaultSuccessThreshold = 1e-5;

struct TrialRecord {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t trial_index = 0;
  InitKind init_kind = InitKind::TruncatedSpectral;
  bool success = false;
  std::size_t iterations_used = 0;
  double final_relative_error = 0.0;
  // NaN when the solver raised before producing a residual.
  double final_stagnation_residual = 0.0;
  std::string stop_reason;  // to_string(StopReason), or "error:<tag>"
  double wall_time = 0.0;   // seconds

  friend bool operator==(const TrialRecord& a, const TrialRecord& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.n == b.n && a.m == b.m && a.trial_index == b.trial_index && a.init_kind == b.init_kind &&
           a.success == b.success && a.iterations_used == b.iterations_used &&
           same(a.final_relative_error, b.final_relative_error) &&
           same(a.final_stagnation_residual, b.final_stagnation_residual) && a.stop_reason == b.stop_reason &&
           same(a.wall_time, b.wall_time);
  }
};

struct GridConfig {
  std::vector<std::size_t> n_values;
  std::vector<double> m_over_n_values;
  std::size_t trials_per_cell = 100;
  InitKind init_kind = InitKind::TruncatedSpectral;
  StoppingCriteria criteria{};
  RngSeed base_seed{};
  double success_threshold = kDefaultSuccessThreshold;
  std::size_t power_iters = kDefaultSpectralPowerIters;

  static std::size_t derived_m(std::size_t n, double ratio) {
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  }

  void validate() const {
    if (trials_per_cell < 1) throw std::invalid_argument("GridConfig: trials_per_cell must be >= 1");
    if (init_kind == InitKind::Supplied) throw std::invalid_argument("GridConfig: supplied init is not a grid option");
    if (!(success_threshold > 0.0)) throw std::invalid_argument("GridConfig: success_threshold must be > 0");
    for (std::size_t n : n_values) {
      if (n < 1) throw std::invalid_argument("GridConfig: n values must be >= 1");
      for (double r : m_over_n_values) {
        if (!(r > 0.0) || derived_m(n, r) < 1) {
          throw std::invalid_argument(fmt::format("GridConfig: ratio {} gives m < 1 at n = {}", r, n));
        }
      }
    }
  }

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct CellResult {
  std::size_t n = 0;
  std::size_t m = 0;
  double ratio = 0.0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_probability = 0.0;
  double mean_iterations = 0.0;
  std::vector<TrialRecord> records;

  friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct GridResult {
  GridConfig config;
  // Sorted by (n, m); records inside each cell sorted by trial_index.
  std::vector<CellResult> cells;

  friend bool operator==(const GridResult&, const GridResult&) = default;
};

/// Per-trial seed: a pure function of (base, n, m, trial_index).
inline RngSeed trial_seed(RngSeed base, std::size_t n, std::size_t m, std::size_t trial_index) {
  return derive_seed(base, {n, m, trial_index});
}

/// One fresh instance, initialisation and solve. Solver exceptions become failed records.
inline TrialRecord run_trial(std::size_t n, std::size_t m, InitKind init_kind, const StoppingCriteria& criteria,
                             RngSeed seed, double success_threshold = kDefaultSuccessThreshold,
                             std::size_t power_iters = kDefaultSpectralPowerIters, std::size_t trial_index = 0) {
  const auto start = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.n = n;
  rec.m = m;
  rec.trial_index = trial_index;
  rec.init_kind = init_kind;

  const ProblemInstance inst = make_instance(n, m, derive_seed(seed, {0}));
  InitSpec spec;
  spec.kind = init_kind;
  spec.power_iters = power_iters;
  spec.seed = derive_seed(seed, {1});

  ComplexVector z0;
  try {
    z0 = make_initial(spec, inst.matrix(), inst.measurements());
    const SolverRun result = run(inst.matrix(), inst.measurements(), z0, criteria, inst.signal());
    rec.iterations_used = result.iterations_used;
    rec.final_relative_error = *result.final_error();
    rec.final_stagnation_residual = result.final_stagnation_residual();
    rec.stop_reason = std::string(to_string(result.stop_reason));
  } catch (const ConvergenceError&) {
    rec.stop_reason = "error:pinv_no_convergence";
  } catch (const DivergenceError&) {
    rec.stop_reason = "error:divergence";
  } catch (const std::exception&) {
    rec.stop_reason = "error:other";
  }
  if (rec.stop_reason.starts_with("error:")) {
    rec.final_relative_error = z0.empty() ? 1.0 : dist_up_to_phase(inst.signal(), z0) / norm(inst.signal());
    rec.final_stagnation_residual = std::numeric_limits<double>::quiet_NaN();
  }
  rec.success = rec.final_relative_error <= success_threshold;
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

inline std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs every (n, ratio) cell; trials are spread over `jobs` workers and the
/// result does not depend on the worker count or scheduling.
inline GridResult run_grid(const GridConfig& config, std::size_t jobs = default_jobs()) {
  config.validate();

  struct CellKey {
    std::size_t n, m;
    double ratio;
  };
  std::vector<CellKey> keys;
  for (std::size_t n : config.n_values) {
    for (double r : config.m_over_n_values) keys.push_back({n, GridConfig::derived_m(n, r), r});
  }
  std::stable_sort(keys.begin(), keys.end(), [](const CellKey& a, const CellKey& b) {
    return a.n != b.n ? a.n < b.n : (a.m != b.m ? a.m < b.m : a.ratio < b.ratio);
  });

  const std::size_t trials = config.trials_per_cell;
  const std::size_t total = keys.size() * trials;
  std::vector<TrialRecord> records(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (std::size_t task = next++; task < total && !failed; task = next++) {
      const CellKey& key = keys[task / trials];
      const std::size_t t = task % trials;
      try {
        records[task] = run_trial(key.n, key.m, config.init_kind, config.criteria,
                                  trial_seed(config.base_seed, key.n, key.m, t), config.success_threshold,
                                  config.power_iters, t);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  {
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(total, 1));
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  GridResult out;
  out.config = config;
  for (std::size_t c = 0; c < keys.size(); ++c) {
    CellResult cell;
    cell.n = keys[c].n;
    cell.m = keys[c].m;
    cell.ratio = keys[c].ratio;
    cell.trials = trials;
    double iters = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      TrialRecord& rec = records[c * trials + t];
      cell.successes += rec.success ? 1 : 0;
      iters += static_cast<double>(rec.iterations_used);
      cell.records.push_back(std::move(rec));
    }
    cell.success_probability = static_cast<double>(cell.successes) / static_cast<double>(trials);
    cell.mean_iterations = iters / static_cast<double>(trials);
    out.cells.push_back(std::move(cell));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

enum class ExportFormat { Csv, Json };

inline std::string_view extension(ExportFormat f) { return f == ExportFormat::Csv ? "csv" : "json"; }

inline std::string default_grid_filename(InitKind kind, RngSeed base_seed, ExportFormat format) {
  return fmt::format("grid_{}_{}.{}", to_string(kind), base_seed.value, extension(format));
}

inline std::string grid_to_csv(const GridResult& result) {
  std::string out = "n,m,ratio,init_kind,trials,successes,success_probability,mean_iterations\n";
  for (const CellResult& c : result.cells) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", c.n, c.m, c.ratio, to_string(result.config.init_kind), c.trials,
                       c.successes, c.success_probability, c.mean_iterations);
  }
  return out;
}

namespace detail {
inline nlohmann::json real_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
inline double real_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}
}  // namespace detail

inline nlohmann::json grid_to_json(const GridResult& result, bool include_timing = true) {
  using nlohmann::json;
  const GridConfig& cfg = result.config;
  json config = {
      {"n_values", cfg.n_values},
      {"m_over_n_values", cfg.m_over_n_values},
      {"trials_per_cell", cfg.trials_per_cell},
      {"init_kind", to_string(cfg.init_kind)},
      {"base_seed", cfg.base_seed.value},
      {"success_threshold", cfg.success_threshold},
      {"power_iters", cfg.power_iters},
      {"criteria",
       {{"max_iters", cfg.criteria.max_iters()},
        {"success_tol", cfg.criteria.success_tol()},
        {"stagnation_tol", cfg.criteria.stagnation_tol()},
        {"divergence_guard", cfg.criteria.divergence_guard()}}},
  };
  json cells = json::array();
  for (const CellResult& c : result.cells) {
    json records = json::array();
    for (const TrialRecord& r : c.records) {
      json rec = {{"trial_index", r.trial_index},
                  {"success", r.success},
                  {"iterations_used", r.iterations_used},
                  {"final_relative_error", detail::real_or_null(r.final_relative_error)},
                  {"final_stagnation_residual", detail::real_or_null(r.final_stagnation_residual)},
                  {"stop_reason", r.stop_reason}};
      if (include_timing) rec["wall_time"] = r.wall_time;
      records.push_back(std::move(rec));
    }
    cells.push_back({{"n", c.n},
                     {"m", c.m},
                     {"ratio", c.ratio},
                     {"trials", c.trials},
                     {"successes", c.successes},
                     {"success_probability", c.success_probability},
                     {"mean_iterations", c.mean_iterations},
                     {"records", std::move(records)}});
  }
  return {{"format", "phaseforge-grid"}, {"version", 1}, {"config", std::move(config)}, {"cells", std::move(cells)}};
}

inline GridResult grid_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "phaseforge-grid" || j.value("version", 0) != 1) {
    throw std::invalid_argument("grid_from_json: not a phaseforge grid document (version 1)");
  }
  GridResult out;
  const auto& c = j.at("config");
  GridConfig& cfg = out.config;
  cfg.n_values = c.at("n_values").get<std::vector<std::size_t>>();
  cfg.m_over_n_values = c.at("m_over_n_values").get<std::vector<double>>();
  cfg.trials_per_cell = c.at("trials_per_cell").get<std::size_t>();
  cfg.init_kind = init_kind_from_string(c.at("init_kind").get<std::string>());
  cfg.base_seed = RngSeed{c.at("base_seed").get<std::uint64_t>()};
  cfg.success_threshold = c.at("success_threshold").get<double>();
  cfg.power_iters = c.at("power_iters").get<std::size_t>();
  const auto& crit = c.at("criteria");
  cfg.criteria = StoppingCriteria(crit.at("max_iters").get<std::size_t>(), crit.at("success_tol").get<double>(),
                                  crit.at("stagnation_tol").get<double>(), crit.at("divergence_guard").get<double>());

  for (const auto& jc : j.at("cells")) {
    CellResult cell;
    cell.n = jc.at("n").get<std::size_t>();
    cell.m = jc.at("m").get<std::size_t>();
    cell.ratio = jc.at("ratio").get<double>();
    cell.trials = jc.at("trials").get<std::size_t>();
    cell.successes = jc.at("successes").get<std::size_t>();
    cell.success_probability = jc.at("success_probability").get<double>();
    cell.mean_iterations = jc.at("mean_iterations").get<double>();
    for (const auto& jr : jc.at("records")) {
      TrialRecord r;
      r.n = cell.n;
      r.m = cell.m;
      r.init_kind = cfg.init_kind;
      r.trial_index = jr.at("trial_index").get<std::size_t>();
      r.success = jr.at("success").get<bool>();
      r.iterations_used = jr.at("iterations_used").get<std::size_t>();
      r.final_relative_error = detail::real_from(jr.at("final_relative_error"));
      r.final_stagnation_residual = detail::real_from(jr.at("final_stagnation_residual"));
      r.stop_reason = jr.at("stop_reason").get<std::string>();
      r.wall_time = jr.value("wall_time", 0.0);
      cell.records.push_back(std::move(r));
    }
    out.cells.push_back(std::move(cell));
  }
  return out;
}

inline void export_grid(const GridResult& result, const std::filesystem::path& path, ExportFormat format,
                        bool include_timing = true) {
  const std::string body = format == ExportFormat::Csv ? grid_to_csv(result)
                                                       : grid_to_json(result, include_timing).dump(2) + "\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("export_grid: cannot open " + path.string() + " for writing");
  out << body;
  if (!out) throw std::runtime_error("export_grid: write failed for " + path.string());
}

}  // namespace phaseforge
