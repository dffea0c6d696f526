// stiffctl: demonstrate, segment, optimize, and report on per-phase
// stiffness learning for the built-in impedance point-mass tasks.
//
// Exit codes: 0 success, 2 configuration error, 3 simulation failure,
// 4 infeasible segment count.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stiffopt/io.hpp"
#include "stiffopt/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stiffopt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSimulation = 3;
constexpr int kExitInfeasible = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat JSON config shared by all subcommands; command-line flags override
// file values, and unrecognized keys are rejected by name.
struct Settings {
  std::string task = "door1d";
  std::string method = "icsld";
  std::string mode = "benchmark";
  std::string input;
  std::string out;
  int m = -1;  // -1: task default
  double kappa = 1e-5;
  double beta = 1.0;
  int n = 100;
  int n_init = 8;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int n_seeds = 5;
  bool use_prior = true;
  double k_min = 10.0;
  double k_max = 1000.0;
  double noise = 0.0;
  bool timings = false;
};

const std::set<std::string> kKnownKeys = {
    "task", "method", "mode",  "input",  "out",       "m",     "kappa",
    "beta", "n",      "n_init", "seed",  "n_seeds",   "use_prior",
    "k_min", "k_max", "noise", "timings"};

void apply_config_file(const std::string& path, Settings& s, const CLI::App& cmd) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const std::exception& err) {
    throw ConfigError(std::string("config file: ") + err.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must be a JSON object");
  auto overridden = [&cmd](const std::string& flag) {
    auto* opt = cmd.get_option_no_throw("--" + flag);
    return opt != nullptr && opt->count() > 0;
  };
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownKeys.count(key)) throw ConfigError("unknown config key: " + key);
    if (overridden(key)) continue;  // flags beat file values
    try {
      if (key == "task") s.task = value.get<std::string>();
      else if (key == "method") s.method = value.get<std::string>();
      else if (key == "mode") s.mode = value.get<std::string>();
      else if (key == "input") s.input = value.get<std::string>();
      else if (key == "out") s.out = value.get<std::string>();
      else if (key == "m") s.m = value.get<int>();
      else if (key == "kappa") s.kappa = value.get<double>();
      else if (key == "beta") s.beta = value.get<double>();
      else if (key == "n") s.n = value.get<int>();
      else if (key == "n_init") s.n_init = value.get<int>();
      else if (key == "seed") { s.seed = value.get<std::uint64_t>(); s.seed_set = true; }
      else if (key == "n_seeds") s.n_seeds = value.get<int>();
      else if (key == "use_prior") s.use_prior = value.get<bool>();
      else if (key == "k_min") s.k_min = value.get<double>();
      else if (key == "k_max") s.k_max = value.get<double>();
      else if (key == "noise") s.noise = value.get<double>();
      else if (key == "timings") s.timings = value.get<bool>();
    } catch (const json::exception& err) {
      throw ConfigError("config key '" + key + "': " + err.what());
    }
  }
}

void resolve_seed(Settings& s) {
  if (s.seed_set) return;
  if (const char* env = std::getenv("STIFFCTL_SEED")) {
    try {
      s.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("STIFFCTL_SEED is not an unsigned integer");
    }
  }
}

ExperimentConfig build_config(const Settings& s, int demo_length) {
  ExperimentConfig cfg = ExperimentConfig::defaults(task_kind_from_string(s.task));
  if (s.m > 0) cfg.M = s.m;
  cfg.kappa = s.kappa;
  cfg.beta = s.beta;
  cfg.N = s.n;
  cfg.n_init = s.n_init;
  cfg.method = seg_method_from_string(s.method);
  cfg.use_prior = s.use_prior;
  cfg.bounds = {s.k_min, s.k_max};
  cfg.finalize_anchors(demo_length);
  cfg.validate();
  return cfg;
}

std::vector<std::uint64_t> seed_list(const Settings& s) {
  if (s.n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < s.n_seeds; ++i) seeds.push_back(s.seed + static_cast<std::uint64_t>(i));
  return seeds;
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir.string());
  return dir;
}

int cmd_demo(const Settings& s) {
  TaskKind task = task_kind_from_string(s.task);
  ExperimentConfig cfg = ExperimentConfig::defaults(task);
  RandomStream stream(s.seed, "demo");
  Trajectory traj = generate_demonstration(cfg.env, default_script(cfg.env), cfg.sim,
                                           stream, s.noise);
  const std::string out = s.out.empty() ? "demo.json" : s.out;
  save_trajectory(traj, out);
  std::cout << "wrote " << out << ": T=" << traj.length() << " dt=" << traj.dt
            << " peak |F|=" << format_double(traj.F.cwiseAbs().maxCoeff()) << " N\n";
  return 0;
}

int cmd_segment(const Settings& s) {
  if (s.input.empty()) throw ConfigError("segment: missing input trajectory");
  Trajectory demo = load_trajectory(s.input);
  const int M = s.m > 0 ? s.m : 2;
  RandomStream stream(s.seed, "segment");
  SegmentationFile file;
  file.method = s.method;
  const Vec lambda = Vec::Ones(demo.n_axes);
  const StiffnessBounds bounds{s.k_min, s.k_max};
  SegMethod method = seg_method_from_string(s.method);
  if (method == SegMethod::icsld) {
    SegmentOptions opts;
    opts.M = M;
    opts.kappa = s.kappa;
    opts.bounds = bounds;
    opts.lambda = lambda;
    ICSLDModel model = icsld_fit(demo, opts, stream);
    file.segmentation = model.segmentation;
    file.k_prior = model.stiffness.K;
    file.objective = model.objective;
  } else if (method == SegMethod::gmm) {
    GMMResult result = gmm_fit(demo, M, 100, 1e-8, stream);
    file.segmentation = result.segmentation;
    file.k_prior =
        prior_from_segmentation(demo, result.segmentation, s.kappa, bounds, lambda)
            .theta.K;
    file.objective = result.model.log_likelihood;
  } else {
    SLDResult result = sld_fit(demo, M, 100, 1e-8, stream);
    file.segmentation = result.segmentation;
    file.k_prior =
        prior_from_segmentation(demo, result.segmentation, s.kappa, bounds, lambda)
            .theta.K;
    file.objective = result.model.objective;
  }
  const std::string out = s.out.empty() ? "segmentation.json" : s.out;
  save_segmentation(file, out);
  std::cout << "wrote " << out << ": boundaries =";
  for (int b : file.segmentation.boundaries()) std::cout << ' ' << b;
  if (file.segmentation.boundaries().empty()) std::cout << " (single phase)";
  std::cout << "\nK_prior =\n";
  for (Eigen::Index i = 0; i < file.k_prior.rows(); ++i) {
    std::cout << "  phase " << (i + 1) << ":";
    for (Eigen::Index j = 0; j < file.k_prior.cols(); ++j)
      std::cout << ' ' << format_double(file.k_prior(i, j));
    std::cout << '\n';
  }
  return 0;
}

int cmd_optimize(const Settings& s) {
  if (s.input.empty()) throw ConfigError("optimize: missing input trajectory");
  Trajectory demo = load_trajectory(s.input);
  ExperimentConfig cfg = build_config(s, demo.length());
  RunRecord record = run_optimization(cfg, demo, s.seed);
  fs::path dir = prepare_out_dir(s.out);
  write_text_file((dir / "run.csv").string(), run_to_csv(record, s.timings));
  write_text_file((dir / "pareto.csv").string(), pareto_to_csv(record.archive));
  SegmentationFile seg_file{record.segmentation, record.k_prior, 0.0, s.method};
  save_segmentation(seg_file, (dir / "segmentation.json").string());
  std::string summary = "method,prior,seed,final_hv\n" + to_string(cfg.method) + "," +
                        (cfg.use_prior ? "on" : "off") + "," + std::to_string(s.seed) +
                        "," + format_double(record.final_hv) + "\n";
  write_text_file((dir / "summary.csv").string(), summary);
  std::cout << "final hypervolume: " << format_double(record.final_hv) << '\n';
  return 0;
}

int cmd_report(const Settings& s) {
  if (s.input.empty()) throw ConfigError("report: missing input trajectory");
  Trajectory demo = load_trajectory(s.input);
  ExperimentConfig cfg = build_config(s, demo.length());
  fs::path dir = prepare_out_dir(s.out);
  std::vector<std::uint64_t> seeds = seed_list(s);
  if (s.mode == "benchmark") {
    BenchmarkSummary summary = run_benchmark(cfg, demo, seeds);
    write_text_file((dir / "summary.csv").string(), benchmark_to_csv(summary));
    write_text_file((dir / "grid.csv").string(), benchmark_grid_to_csv(summary));
    write_text_file((dir / "curves.csv").string(), curves_to_csv(summary));
    write_text_file((dir / "fronts.csv").string(), union_fronts_to_csv(summary));
    std::cout << benchmark_grid_to_csv(summary);
  } else if (s.mode == "sensitivity") {
    auto rows = run_sensitivity(cfg, demo, {1, 2, 3, 4}, {0.0, 1.0, 10.0, 100.0}, seeds);
    write_text_file((dir / "sensitivity.csv").string(), sensitivity_to_csv(rows));
    std::cout << sensitivity_to_csv(rows);
  } else {
    throw ConfigError("report: mode must be 'benchmark' or 'sensitivity'");
  }
  return 0;
}

void add_common_flags(CLI::App* cmd, Settings& s, std::string& config_path) {
  cmd->add_option("--config", config_path, "flat JSON config file (flags override)");
  cmd->add_option("--seed", s.seed, "random seed (STIFFCTL_SEED fallback)")
      ->each([&s](const std::string&) { s.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"per-phase stiffness learning for impedance point-mass tasks"};
  app.require_subcommand(1);

  Settings s;
  std::string config_path;

  CLI::App* demo = app.add_subcommand("demo", "generate a demonstration trajectory");
  add_common_flags(demo, s, config_path);
  demo->add_option("--task", s.task, "wipe2d|door1d|track");
  demo->add_option("--noise", s.noise, "recorded-position noise std (m)");
  demo->add_option("--out", s.out, "output trajectory JSON");

  CLI::App* segment = app.add_subcommand("segment", "segment a demonstration");
  add_common_flags(segment, s, config_path);
  segment->add_option("demo", s.input, "demonstration JSON")->option_text("FILE");
  segment->add_option("--input", s.input, "demonstration JSON")->excludes("demo");
  segment->add_option("--method", s.method, "icsld|gmm|sld");
  segment->add_option("--m", s.m, "number of phases");
  segment->add_option("--kappa", s.kappa, "stiffness regularization weight");
  segment->add_option("--k-min", s.k_min, "stiffness lower bound (N/m)");
  segment->add_option("--k-max", s.k_max, "stiffness upper bound (N/m)");
  segment->add_option("--out", s.out, "output segmentation JSON");

  CLI::App* optimize = app.add_subcommand("optimize", "run the stiffness optimization");
  add_common_flags(optimize, s, config_path);
  optimize->add_option("--input", s.input, "demonstration JSON");
  optimize->add_option("--task", s.task, "wipe2d|door1d|track");
  optimize->add_option("--method", s.method, "icsld|gmm|sld");
  optimize->add_option("--m", s.m, "number of phases (task default when omitted)");
  optimize->add_option("--kappa", s.kappa, "stiffness regularization weight");
  optimize->add_option("--beta", s.beta, "prior weighting strength");
  optimize->add_option("--n", s.n, "total evaluations");
  optimize->add_option("--n-init", s.n_init, "initial design size");
  optimize->add_flag("--use-prior,!--no-prior", s.use_prior, "weight acquisitions by the segmentation prior");
  optimize->add_option("--k-min", s.k_min, "stiffness lower bound (N/m)");
  optimize->add_option("--k-max", s.k_max, "stiffness upper bound (N/m)");
  optimize->add_option("--out", s.out, "output directory");
  optimize->add_flag("--timings", s.timings, "emit real per-iteration ms in run.csv");

  CLI::App* report = app.add_subcommand("report", "benchmark grid / sensitivity sweep");
  add_common_flags(report, s, config_path);
  report->add_option("--input", s.input, "demonstration JSON");
  report->add_option("--task", s.task, "wipe2d|door1d|track");
  report->add_option("--mode", s.mode, "benchmark|sensitivity");
  report->add_option("--n", s.n, "evaluations per run");
  report->add_option("--n-init", s.n_init, "initial design size");
  report->add_option("--beta", s.beta, "prior weighting strength");
  report->add_option("--m", s.m, "number of phases (task default when omitted)");
  report->add_option("--n-seeds", s.n_seeds, "number of consecutive seeds");
  report->add_option("--out", s.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    if (!config_path.empty()) apply_config_file(config_path, s, *active);
    resolve_seed(s);
    if (active == demo) return cmd_demo(s);
    if (active == segment) return cmd_segment(s);
    if (active == optimize) return cmd_optimize(s);
    return cmd_report(s);
  } catch (const InfeasibleSegmentCountError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitInfeasible;
  } catch (const IntegrationDivergedError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitSimulation;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitConfig;
  }
}
