// cid: command-line front end for the design loop and its pipelines.
//
//   cid fit         traces grouped by press speed -> FDVV model JSON
//   cid simulate    model + force profile or scripted press -> trajectory CSV
//   cid meta-train  config -> meta-policy JSON
//   cid optimize    config [+ resume state] -> run state, front and HV exports
//   cid bench       synthetic-problem run -> hypervolume-ratio report
//   cid report      run state -> front and HV exports
//
// Exit status: 0 success, 1 usage error, 2 data or validation error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cid/config.hpp"
#include "cid/error.hpp"
#include "cid/fdvv.hpp"
#include "cid/log.hpp"
#include "cid/orchestrator.hpp"
#include "cid/problems.hpp"
#include "cid/serialize.hpp"
#include "cid/signal.hpp"
#include "cid/sim.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

cid::CidConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  cid::CidConfig config = path.empty() ? cid::CidConfig{} : cid::parse_config(cid::io::read_file(path));
  if (seed) config.run.seed = *seed;
  return config;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? comma : comma - start);
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument(fmt::format("'{}' is not a number", item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// One force value per line; a leading non-numeric line is taken as a header.
std::vector<double> load_profile(const std::string& path) {
  std::istringstream in(cid::io::read_file(path));
  std::vector<double> forces;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    try {
      std::size_t used = 0;
      forces.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      if (n == 1) continue;
      throw cid::FormatError(fmt::format("{}: line {}: '{}' is not a force value", path, n, line));
    }
  }
  if (forces.empty()) throw cid::FormatError(fmt::format("{}: empty force profile", path));
  return forces;
}

void write_exports(const fs::path& dir, const cid::orchestrator::RunState& state) {
  fs::create_directories(dir);
  cid::io::write_file_atomic(dir / "front.csv",
                             cid::io::front_csv(state, cid::io::design_names(state.config),
                                                cid::io::objective_names(state.config)));
  cid::io::write_file_atomic(dir / "hypervolume.csv", cid::io::hypervolume_csv(state));
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::vector<std::string> groups;
  double cutoff = 50.0;
  std::string out;
};

int run_fit(const FitArgs& args) {
  std::vector<std::vector<cid::button::FdTrace>> groups;
  for (const auto& g : args.groups) {
    std::vector<cid::button::FdTrace> traces;
    std::size_t start = 0;
    while (start <= g.size()) {
      const auto comma = g.find(',', start);
      const std::string path = g.substr(start, comma == std::string::npos ? comma : comma - start);
      traces.push_back(cid::button::low_pass_filter(cid::io::load_trace(path), args.cutoff));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    groups.push_back(std::move(traces));
  }
  const cid::button::FdvvModel model = cid::button::fit_fdvv(groups);
  cid::io::save_model(args.out, model);
  std::cout << fmt::format("fitted {} velocity levels; activation {:.4f} mm, release {:.4f} mm\n",
                           model.velocity_levels.size(), model.activation_disp, model.release_disp);
  return 0;
}

struct SimulateArgs {
  std::string model;
  std::string profile;
  double press_speed = 0.0;
  std::string out;
};

int run_simulate(const SimulateArgs& args) {
  const cid::button::FdvvModel model = cid::io::load_model(args.model);
  cid::button::FdTrace trace;
  std::vector<cid::button::SimEvent> events;
  if (!args.profile.empty()) {
    trace = cid::button::simulate_profile(model, load_profile(args.profile), cid::button::kControlDt,
                                          {}, &events);
  } else {
    cid::button::PressScript script;
    script.speed = args.press_speed;
    trace = cid::button::synthesize_press(model, script);
  }
  cid::io::save_trace(args.out, trace);
  for (const auto& e : events) {
    std::cout << fmt::format("{} t={:.4f} s d={:.4f} mm\n",
                             e.kind == cid::button::EventKind::kActivation ? "activation" : "release",
                             e.time, e.displacement);
  }
  std::cout << fmt::format("wrote {} samples to {}\n", trace.samples.size(), args.out);
  return 0;
}

struct MetaTrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::string out;
};

int run_meta_train(const MetaTrainArgs& args) {
  cid::CidConfig config = load_config(args.config, args.seed);
  if (args.iterations) config.user_model.meta_iterations = *args.iterations;
  config.validate();
  const cid::user::MetaPolicy meta = cid::orchestrator::train_user_model(config, [](int it, double r) {
    cid::log::info(fmt::format("meta iteration {}: mean post-adaptation return {:.4f}", it, r));
  });
  cid::io::save_policy(args.out, meta);
  std::cout << fmt::format("wrote meta-policy ({} parameters) to {}\n", meta.init_params.values.size(),
                           args.out);
  return 0;
}

struct OptimizeArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string resume;
  std::string policy;
  std::optional<int> stop_after;
};

int run_optimize(const OptimizeArgs& args) {
  const cid::CidConfig config = load_config(args.config, args.seed);
  config.validate();
  const fs::path dir = args.out_dir;
  fs::create_directories(dir);

  std::unique_ptr<cid::orchestrator::ObjectiveProvider> provider;
  if (config.objectives.provider == cid::ProviderKind::kSynthetic) {
    provider = cid::orchestrator::make_synthetic_provider(config);
  } else {
    cid::user::MetaPolicy meta;
    if (!args.policy.empty()) {
      meta = cid::io::load_policy(args.policy);
    } else {
      cid::log::info("meta-training the user model");
      meta = cid::orchestrator::train_user_model(config);
      cid::io::save_policy(dir / "policy.json", meta);
    }
    provider = std::make_unique<cid::orchestrator::SimulatedButtonProvider>(config, std::move(meta));
  }

  std::optional<cid::orchestrator::RunState> resume;
  if (!args.resume.empty()) resume = cid::io::load_run_state(args.resume);

  // The evaluation log is rebuilt from the resumed records, then appended.
  const fs::path log_path = dir / "evaluations.jsonl";
  std::string log_text;
  std::size_t logged = 0;
  if (resume) {
    for (const auto& r : resume->records) log_text += cid::io::record_json_line(r);
    logged = resume->records.size();
  }
  cid::io::write_file_atomic(log_path, log_text);

  cid::orchestrator::RunOptions options;
  options.stop_after_iterations = args.stop_after;
  options.persist = [&](const cid::orchestrator::RunState& state) {
    cid::io::save_run_state(dir / "state.json", state);
    std::ofstream log(log_path, std::ios::app | std::ios::binary);
    for (; logged < state.records.size(); ++logged) log << cid::io::record_json_line(state.records[logged]);
  };
  const auto result = cid::orchestrator::run(config, *provider, std::move(resume), options);
  write_exports(dir, result.state);
  std::cout << fmt::format("{} records, archive size {}, hypervolume {:.9g}{}\n",
                           result.state.records.size(), result.archive.size(),
                           result.state.hv_history.empty() ? 0.0 : result.state.hv_history.back(),
                           result.complete ? "" : " (stopped early)");
  return 0;
}

std::size_t provider_dim(const cid::CidConfig& config) {
  return cid::orchestrator::make_synthetic_provider(config)->bounds().dim();
}

struct BenchArgs {
  std::string problem = "schaffer";
  int budget = 40;
  int initial = 8;
  int dim = 0;
  std::optional<std::uint64_t> seed;
  std::string ref;
  int scan_count = 0;  // 0: 512 for one-dimensional problems, 8192 otherwise
  int mc_samples = cid::OptimizerSettings{}.mc_samples;
  bool auto_ref = false;
};

int run_bench(const BenchArgs& args) {
  const auto id = cid::problems::parse_problem(args.problem);
  if (!id) throw std::invalid_argument(fmt::format("unknown problem '{}'", args.problem));
  cid::CidConfig config;
  config.objectives.provider = cid::ProviderKind::kSynthetic;
  config.objectives.problem = *id;
  config.objectives.problem_dim = args.dim;
  config.optimizer.initial_designs = args.initial;
  config.run.budget = args.budget;
  config.optimizer.scan_count = args.scan_count > 0 ? args.scan_count
                                : provider_dim(config) == 1 ? 512
                                                            : 8192;
  config.optimizer.mc_samples = args.mc_samples;
  if (args.seed) config.run.seed = *args.seed;
  const std::vector<double> ref =
      args.ref.empty() ? (*id == cid::problems::ProblemId::kSchaffer ? std::vector<double>{4.0, 4.0}
                                                                     : std::vector<double>{1.1, 1.1})
                       : parse_list(args.ref);
  if (!args.auto_ref) config.optimizer.reference = ref;
  config.validate();

  const auto provider = cid::orchestrator::make_synthetic_provider(config);
  const auto result = cid::orchestrator::run(config, *provider);
  const auto& problem = static_cast<const cid::orchestrator::SyntheticProvider&>(*provider).problem();
  const double found = cid::pareto::hypervolume(result.archive.objectives(), ref);
  const double truth = problem.true_front_hypervolume(ref);
  std::cout << fmt::format("problem={} budget={} seed={} evaluations={} hv={:.9g} hv_true={:.9g} "
                           "hv_ratio={:.6f}\n",
                           args.problem, args.budget, config.run.seed, result.state.records.size(), found,
                           truth, found / truth);
  return 0;
}

struct ReportArgs {
  std::string state;
  std::string out_dir;
};

int run_report(const ReportArgs& args) {
  const auto state = cid::io::load_run_state(args.state);
  write_exports(args.out_dir, state);
  std::cout << fmt::format("archive of {} entries from {} records written to {}\n", state.archive().size(),
                           state.records.size(), args.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Computational input design: optimizer, button simulator and simulated user"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an FDVV model from traces grouped by press speed");
  fit_cmd->add_option("--group", fit.groups, "Comma-separated trace CSVs of one press speed (repeat)")
      ->required();
  fit_cmd->add_option("--cutoff", fit.cutoff, "Low-pass cutoff in Hz")->capture_default_str();
  fit_cmd->add_option("-o,--out", fit.out, "Output model JSON")->required();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Drive a model with a force profile or scripted press");
  sim_cmd->add_option("--model", sim.model, "FDVV model JSON")->required()->check(CLI::ExistingFile);
  auto* profile_opt = sim_cmd->add_option("--profile", sim.profile, "Applied force per 1 ms step, one per line");
  auto* speed_opt = sim_cmd->add_option("--press-speed", sim.press_speed, "Scripted press speed in mm/s");
  profile_opt->excludes(speed_opt);
  sim_cmd->add_option("-o,--out", sim.out, "Output trajectory CSV")->required();

  MetaTrainArgs meta;
  auto* meta_cmd = app.add_subcommand("meta-train", "Meta-train the simulated user");
  meta_cmd->add_option("--config", meta.config, "Configuration file");
  meta_cmd->add_option("--seed", meta.seed, "Override the master seed");
  meta_cmd->add_option("--iterations", meta.iterations, "Override user_model.meta_iterations");
  meta_cmd->add_option("-o,--out", meta.out, "Output policy JSON")->required();

  OptimizeArgs opt;
  auto* opt_cmd = app.add_subcommand("optimize", "Run the design loop");
  opt_cmd->add_option("--config", opt.config, "Configuration file");
  opt_cmd->add_option("--seed", opt.seed, "Override the master seed");
  opt_cmd->add_option("--out-dir", opt.out_dir, "Directory for state, log and exports")->required();
  opt_cmd->add_option("--resume", opt.resume, "Run state JSON to continue from")->check(CLI::ExistingFile);
  opt_cmd->add_option("--policy", opt.policy, "Meta-policy JSON (skips meta-training)")
      ->check(CLI::ExistingFile);
  opt_cmd->add_option("--stop-after", opt.stop_after, "Stop after this many optimizer iterations");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark the optimizer on a synthetic problem");
  bench_cmd->add_option("--problem", bench.problem, "schaffer or zdt1")->capture_default_str();
  bench_cmd->add_option("--budget", bench.budget, "Optimizer iterations")->capture_default_str();
  bench_cmd->add_option("--initial", bench.initial, "Initial design size")->capture_default_str();
  bench_cmd->add_option("--dim", bench.dim, "Problem dimension (0: problem default)");
  bench_cmd->add_option("--seed", bench.seed, "Master seed");
  bench_cmd->add_option("--ref", bench.ref, "Reference point, comma separated");
  bench_cmd->add_flag("--auto-ref", bench.auto_ref,
                      "Let the optimizer use its automatic reference; --ref is only used for scoring");
  bench_cmd->add_option("--scan-count", bench.scan_count,
                        "Acquisition scan size (default 512 in one dimension, 8192 otherwise)");
  bench_cmd->add_option("--mc-samples", bench.mc_samples, "EHVI Monte-Carlo samples")
      ->capture_default_str();

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Export the front and HV curve of a run state");
  report_cmd->add_option("--state", report.state, "Run state JSON")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out-dir", report.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*sim_cmd) {
      if (sim.profile.empty() && !(sim.press_speed > 0.0)) {
        std::cerr << "error: simulate needs --profile or a positive --press-speed\n\n" << sim_cmd->help();
        return kExitUsage;
      }
      return run_simulate(sim);
    }
    if (*meta_cmd) return run_meta_train(meta);
    if (*opt_cmd) return run_optimize(opt);
    if (*bench_cmd) return run_bench(bench);
    if (*report_cmd) return run_report(report);
  } catch (const cid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
