#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "phaseforge/altproj.hpp"
#include "phaseforge/experiments.hpp"
#include "phaseforge/problem.hpp"
#include "phaseforge/spectral_init.hpp"
#include "phaseforge/theory_checks.hpp"

namespace phaseforge {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kNotConverged = 2;
}  // namespace exit_code

inline constexpr const char* kOutDirEnv = "PHASEFORGE_OUT_DIR";

inline nlohmann::json to_json(const SolverRun& run) {
  nlohmann::json iterate = nlohmann::json::array();
  for (const Complex& v : run.final_iterate) iterate.push_back({v.real(), v.imag()});
  nlohmann::json j = {{"iterations_used", run.iterations_used},
                      {"stop_reason", to_string(run.stop_reason)},
                      {"final_stagnation_residual", run.final_stagnation_residual()},
                      {"stagnation_residual_trace", run.stagnation_residual_trace},
                      {"final_iterate", std::move(iterate)}};
  if (run.error_trace) {
    j["error_trace"] = *run.error_trace;
    j["final_relative_error"] = *run.final_error();
  }
  return j;
}

namespace detail {

inline std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return ".";
}

// --out names a directory unless it carries a file extension.
inline std::filesystem::path resolve_output(const std::string& out, const std::string& default_name) {
  std::filesystem::path p = out.empty() ? default_out_dir() : std::filesystem::path(out);
  if (std::filesystem::is_directory(p) || !p.has_extension()) {
    std::filesystem::create_directories(p);
    return p / default_name;
  }
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

inline std::string json_scalar_to_arg(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return fmt::format("{}", v.get<double>());
  throw CLI::ValidationError("--config", "unsupported value " + v.dump());
}

// Appends "--key value" for each config key whose flag was not given explicitly.
inline void merge_config(const CLI::App& sub, const std::filesystem::path& config_path,
                         std::vector<std::string>& args) {
  std::ifstream f(config_path);
  if (!f) throw CLI::ValidationError("--config", "cannot read " + config_path.string());
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "top level must be an object");

  for (const auto& [raw_key, value] : cfg.items()) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    if (key == "config" || sub.get_option_no_throw(flag) == nullptr) {
      throw CLI::ValidationError("--config", "unknown key '" + raw_key + "'");
    }
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.starts_with(flag + "=");
    });
    if (given) continue;
    std::string text;
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + json_scalar_to_arg(value[i]);
    } else {
      text = json_scalar_to_arg(value);
    }
    args.push_back(flag);
    args.push_back(text);
  }
}

inline std::string heat_table(const GridResult& result) {
  std::vector<double> ratios = result.config.m_over_n_values;
  std::sort(ratios.begin(), ratios.end());
  ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());
  std::vector<std::size_t> ns = result.config.n_values;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  std::string out = fmt::format("{:>8}", "n \\ m/n");
  for (double r : ratios) out += fmt::format(" {:>6}", fmt::format("{}", r));
  out += '\n';
  for (std::size_t n : ns) {
    out += fmt::format("{:>8}", n);
    for (double r : ratios) {
      const std::size_t m = GridConfig::derived_m(n, r);
      auto it = std::find_if(result.cells.begin(), result.cells.end(),
                             [&](const CellResult& c) { return c.n == n && c.m == m; });
      out += it == result.cells.end() ? fmt::format(" {:>6}", "-") : fmt::format(" {:>6.2f}", it->success_probability);
    }
    out += '\n';
  }
  return out;
}

struct SolveFlags {
  std::optional<std::size_t> n, m;
  std::uint64_t seed = 0;
  std::string init = "spectral";
  std::size_t max_iters = StoppingCriteria::kDefaultMaxIters;
  double tol = StoppingCriteria::kDefaultSuccessTol;
  std::string instance;
  std::string out;
  bool quiet = false;
};

struct GridFlags {
  std::vector<std::size_t> n_list;
  std::vector<double> ratio_list;
  std::size_t trials = 100;
  std::string init = "spectral";
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  std::size_t jobs = default_jobs();
  std::size_t max_iters = StoppingCriteria::kDefaultMaxIters;
};

struct VerifyFlags {
  std::vector<std::string> suites{"all"};
  std::uint64_t seed = 0;
  std::optional<std::size_t> samples;
  std::size_t jobs = default_jobs();
  std::string report;
};

inline int cmd_solve(const SolveFlags& f, std::ostream& out, std::ostream& err) {
  std::optional<ProblemInstance> inst;
  try {
    if (!f.instance.empty()) {
      inst = load_instance(f.instance);
    } else {
      if (!f.n || !f.m) {
        err << "solve: --n and --m are required unless --instance is given\n";
        return exit_code::kUsage;
      }
      inst = make_instance(*f.n, *f.m, RngSeed{f.seed});
    }
  } catch (const std::exception& e) {
    err << "solve: " << e.what() << '\n';
    return exit_code::kUsage;
  }

  InitSpec spec;
  spec.kind = init_kind_from_string(f.init);
  spec.seed = derive_seed(RngSeed{f.seed}, {1});
  const StoppingCriteria criteria(f.max_iters, f.tol);

  SolverRun result;
  try {
    const ComplexVector z0 = make_initial(spec, inst->matrix(), inst->measurements());
    result = run(inst->matrix(), inst->measurements(), z0, criteria, inst->signal());
  } catch (const ConvergenceError& e) {
    err << "solve: least-squares solve did not converge: " << e.what() << '\n';
    return exit_code::kNotConverged;
  } catch (const DivergenceError& e) {
    err << "solve: " << e.what() << '\n';
    return exit_code::kNotConverged;
  } catch (const std::invalid_argument& e) {
    err << "solve: " << e.what() << '\n';
    return exit_code::kUsage;
  }

  if (!f.quiet) {
    out << fmt::format("{:>6} {:>14} {:>14}\n", "iter", "rel_error", "residual");
    for (std::size_t t = 0; t < result.iterations_used; ++t) {
      out << fmt::format("{:>6} {:>14.6e} {:>14.6e}\n", t + 1, (*result.error_trace)[t],
                         result.stagnation_residual_trace[t]);
    }
  }
  const double final_error = *result.final_error();
  out << fmt::format("n={} m={} stop={} iterations={} final_error={:.3e}\n", inst->n(), inst->m(),
                     to_string(result.stop_reason), result.iterations_used, final_error);

  nlohmann::json j = to_json(result);
  j["n"] = inst->n();
  j["m"] = inst->m();
  j["seed"] = f.seed;
  j["init"] = f.init;
  j["tol"] = f.tol;
  try {
    const auto path = resolve_output(f.out, fmt::format("solve_{}.json", f.seed));
    write_text(path, j.dump(2) + "\n");
    out << "wrote " << path.string() << '\n';
  } catch (const std::exception& e) {
    err << "solve: " << e.what() << '\n';
    return exit_code::kUsage;
  }
  return result.stop_reason == StopReason::Success ? exit_code::kOk : exit_code::kNotConverged;
}

inline int cmd_grid(const GridFlags& f, std::ostream& out, std::ostream& err) {
  GridConfig config;
  config.n_values = f.n_list;
  config.m_over_n_values = f.ratio_list;
  config.trials_per_cell = f.trials;
  config.init_kind = init_kind_from_string(f.init);
  config.base_seed = RngSeed{f.seed};
  try {
    config.criteria = StoppingCriteria(f.max_iters);
    config.validate();
  } catch (const std::invalid_argument& e) {
    err << "grid: " << e.what() << '\n';
    return exit_code::kUsage;
  }
  const ExportFormat format = f.format == "json" ? ExportFormat::Json : ExportFormat::Csv;

  std::filesystem::path path;
  try {
    path = resolve_output(f.out, default_grid_filename(config.init_kind, config.base_seed, format));
  } catch (const std::exception& e) {
    err << "grid: cannot prepare output: " << e.what() << '\n';
    return exit_code::kUsage;
  }

  const GridResult result = run_grid(config, f.jobs);
  try {
    export_grid(result, path, format);
  } catch (const std::exception& e) {
    err << "grid: " << e.what() << '\n';
    return exit_code::kUsage;
  }
  out << heat_table(result);
  out << "wrote " << path.string() << '\n';
  return exit_code::kOk;
}

inline int cmd_verify(const VerifyFlags& f, std::ostream& out, std::ostream& err) {
  std::vector<LemmaId> suites;
  for (const std::string& s : f.suites) {
    if (s == "all") {
      suites.assign(kAllLemmas.begin(), kAllLemmas.end());
    } else if (auto id = lemma_from_suite_name(s)) {
      suites.push_back(*id);
    } else {
      err << "verify: unknown suite '" << s << "'\n";
      return exit_code::kUsage;
    }
  }
  if (f.samples && *f.samples == 0) {
    err << "verify: --samples must be >= 1\n";
    return exit_code::kUsage;
  }

  VerifyOptions opts;
  opts.seed = RngSeed{f.seed};
  opts.samples = f.samples;
  opts.jobs = f.jobs;
  const std::vector<LemmaReport> reports = run_verification(suites, opts);

  out << fmt::format("{:<12} {:>9} {:>11} {:>4} {:>11} {:>10} {:>10}  {}\n", "suite", "samples", "worst", "", "bound",
                     "violations", "budget", "result");
  bool all_pass = true;
  for (const LemmaReport& r : reports) {
    all_pass = all_pass && r.pass;
    out << fmt::format("{:<12} {:>9} {:>11.4g} {:>4} {:>11.4g} {:>10} {:>10.4g}  {}\n", suite_name(r.lemma_id),
                       r.samples, r.worst_ratio, r.lower_bound ? ">=" : "<=", r.bound, r.violations,
                       r.failure_budget, r.vacuous ? "PASS (vacuous)" : (r.pass ? "PASS" : "FAIL"));
  }
  if (!f.report.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LemmaReport& r : reports) arr.push_back(to_json(r));
    try {
      const std::filesystem::path p(f.report);
      if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
      write_text(p, arr.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "verify: " << e.what() << '\n';
      return exit_code::kUsage;
    }
  }
  return all_pass ? exit_code::kOk : exit_code::kNotConverged;
}

}  // namespace detail

/// Entry point of the phaseforge command line tool. Returns the process exit code.
inline int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"phaseforge: phase retrieval by alternating projections"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "phaseforge 1.0.0");

  detail::SolveFlags solve;
  std::string solve_config;
  CLI::App* s = app.add_subcommand("solve", "Recover one signal and report the iteration trace");
  s->add_option("--n", solve.n, "Signal dimension")->check(CLI::PositiveNumber);
  s->add_option("--m", solve.m, "Number of measurements")->check(CLI::PositiveNumber);
  s->add_option("--seed", solve.seed, "Base seed");
  s->add_option("--init", solve.init, "Initialisation")->check(CLI::IsMember({"spectral", "random"}));
  s->add_option("--max-iters", solve.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  s->add_option("--tol", solve.tol, "Relative error counted as success")->check(CLI::PositiveNumber);
  s->add_option("--instance", solve.instance, "Load a .pri instance instead of sampling one");
  s->add_option("--out", solve.out, "Output directory or .json path (default $PHASEFORGE_OUT_DIR or .)");
  s->add_flag("--quiet", solve.quiet, "Skip the per-iteration table");
  s->add_option("--config", solve_config, "JSON file of flag values; explicit flags win");

  detail::GridFlags grid;
  std::string grid_config;
  CLI::App* g = app.add_subcommand("grid", "Monte Carlo success probability over (n, m/n)");
  g->add_option("--n-list", grid.n_list, "Signal dimensions")->delimiter(',')->required();
  g->add_option("--ratio-list", grid.ratio_list, "Ratios m/n")->delimiter(',')->required();
  g->add_option("--trials", grid.trials, "Trials per cell");
  g->add_option("--init", grid.init, "Initialisation")->check(CLI::IsMember({"spectral", "random"}));
  g->add_option("--seed", grid.seed, "Base seed");
  g->add_option("--out", grid.out, "Output directory or file path (default $PHASEFORGE_OUT_DIR or .)");
  g->add_option("--format", grid.format, "Export format")->check(CLI::IsMember({"csv", "json"}));
  g->add_option("--jobs", grid.jobs, "Worker threads")->check(CLI::PositiveNumber);
  g->add_option("--max-iters", grid.max_iters, "Iteration cap per trial")->check(CLI::PositiveNumber);
  g->add_option("--config", grid_config, "JSON file of flag values; explicit flags win");

  detail::VerifyFlags verify;
  std::string verify_config;
  CLI::App* v = app.add_subcommand("verify", "Empirical checks of the convergence inequalities");
  v->add_option("--suite", verify.suites, "all, lemma2..lemma7, davidson or contraction")->delimiter(',');
  v->add_option("--seed", verify.seed, "Base seed");
  v->add_option("--samples", verify.samples, "Override the sample count of every selected check");
  v->add_option("--jobs", verify.jobs, "Worker threads")->check(CLI::PositiveNumber);
  v->add_option("--report", verify.report, "Write the reports as JSON to this path");
  v->add_option("--config", verify_config, "JSON file of flag values; explicit flags win");

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  try {
    // Locate --config before the real parse so its keys can be merged as flags.
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].starts_with("--config=")) path = args[i].substr(9);
      if (path.empty()) continue;
      CLI::App* sub = nullptr;
      for (CLI::App* c : {s, g, v}) {
        if (std::find(args.begin(), args.end(), c->get_name()) != args.end()) sub = c;
      }
      if (sub == nullptr) throw CLI::ValidationError("--config", "needs a subcommand");
      detail::merge_config(*sub, path, args);
      break;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::kOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return exit_code::kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return exit_code::kUsage;
  }

  if (s->parsed() && solve.instance.empty() && (!solve.n || !solve.m)) {
    err << "solve: --n and --m are required unless --instance is given\n" << s->help();
    return exit_code::kUsage;
  }
  try {
    if (s->parsed()) return detail::cmd_solve(solve, out, err);
    if (g->parsed()) return detail::cmd_grid(grid, out, err);
    return detail::cmd_verify(verify, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kNotConverged;
  }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace phaseforge
