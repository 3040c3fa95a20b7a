#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "thermopinn/ageing.hpp"
#include "thermopinn/bayes.hpp"
#include "thermopinn/experiment.hpp"
#include "thermopinn/io.hpp"
#include "thermopinn/pinn.hpp"
#include "thermopinn/solver.hpp"

namespace fs = std::filesystem;
using namespace thermopinn;

namespace {

constexpr const char* kVersion = "thermopinn 0.1.0";

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  bool paper_sum = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--out", args.out_override, "output directory (overrides paths.out_dir)");
  cmd->add_option("--seed", args.seed_override, "seed override")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--paper-sum", args.paper_sum,
                "use the unnormalized residual-loss sum (train.loss_norm = paper_sum)");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed_override;
  if (!args.out_override.empty()) cfg.paths.out_dir = args.out_override;
  if (args.paper_sum) cfg.train.loss_norm = LossNorm::paper_sum;
  cfg.train.seed = cfg.seed;
  return cfg;
}

class ManifestWriter {
 public:
  ManifestWriter(std::string command, const ExperimentConfig& cfg)
      : start_(std::chrono::steady_clock::now()), out_dir_(cfg.paths.out_dir) {
    manifest_.command = std::move(command);
    manifest_.version = kVersion;
    manifest_.config_hash = config_hash(cfg);
    manifest_.seed = cfg.seed;
  }

  void record(const std::string& path) {
    manifest_.outputs.emplace_back(fs::path(path).filename().string(), io::fnv1a64_file(path));
    std::printf("wrote %s\n", path.c_str());
  }

  void finish() {
    auto elapsed = std::chrono::steady_clock::now() - start_;
    manifest_.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    std::string path = (fs::path(out_dir_) / ("manifest_" + manifest_.command + ".txt")).string();
    io::write_manifest(path, manifest_);
    std::printf("wrote %s\n", path.c_str());
  }

 private:
  std::chrono::steady_clock::time_point start_;
  std::string out_dir_;
  io::Manifest manifest_;
};

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.paths.out_dir) / name).string();
}

OperatingProfiles load_profiles_for(const ExperimentConfig& cfg) {
  std::string path = cfg.paths.profiles_csv.empty() ? out_path(cfg, "profiles.csv")
                                                    : cfg.paths.profiles_csv;
  OperatingProfiles profiles = io::read_profiles_csv(path);
  if (profiles.t_min() > 0.0 || profiles.t_max() < cfg.thermal.t_end)
    throw ConfigError("profiles in '" + path + "' do not cover [0, thermal.t_end]");
  return profiles;
}

void print_warnings(const OperatingProfiles& profiles) {
  std::vector<std::string> warnings;
  profiles.validate(&warnings);
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int cmd_generate(const CommonArgs& args) {
  ExperimentConfig cfg = resolve_config(args);
  fs::create_directories(cfg.paths.out_dir);
  ManifestWriter manifest("generate", cfg);

  OperatingProfiles profiles = cfg.paths.profiles_csv.empty()
                                   ? synthesize_profiles(cfg.profiles, cfg.seed)
                                   : io::read_profiles_csv(cfg.paths.profiles_csv);
  print_warnings(profiles);
  if (profiles.t_min() > 0.0 || profiles.t_max() < cfg.thermal.t_end)
    throw ConfigError("profiles do not cover [0, thermal.t_end]");

  std::string profiles_path = out_path(cfg, "profiles.csv");
  io::write_profiles_csv(profiles_path, profiles);
  manifest.record(profiles_path);

  FieldGrid reference = solve_crank_nicolson(cfg.thermal, profiles, cfg.grid.nx, cfg.grid.nt);
  std::string grid_path = out_path(cfg, "reference_grid.csv");
  io::write_grid_csv(grid_path, reference, config_hash(cfg));
  manifest.record(grid_path);
  manifest.record(grid_path + ".meta");

  manifest.finish();
  return 0;
}

int cmd_train_pinn(const CommonArgs& args) {
  ExperimentConfig cfg = resolve_config(args);
  fs::create_directories(cfg.paths.out_dir);
  ManifestWriter manifest("train-pinn", cfg);

  OperatingProfiles profiles = load_profiles_for(cfg);
  MlpParams net = init_mlp(cfg.net_layers, cfg.seed);
  auto [trained, history] = train_pinn(net, cfg.train, profiles, cfg.thermal);

  std::string ckpt = out_path(cfg, "pinn_checkpoint.txt");
  io::write_mlp_checkpoint(ckpt, trained);
  manifest.record(ckpt);
  std::string hist = out_path(cfg, "pinn_history.csv");
  io::write_pinn_history_csv(hist, history);
  manifest.record(hist);
  manifest.finish();
  std::printf("final loss %.6g (from %.6g)\n", history.total.back(), history.total.front());
  return 0;
}

int cmd_train_bpinn(const CommonArgs& args) {
  ExperimentConfig cfg = resolve_config(args);
  fs::create_directories(cfg.paths.out_dir);
  ManifestWriter manifest("train-bpinn", cfg);

  OperatingProfiles profiles = load_profiles_for(cfg);
  TrainConfig tc = cfg.train;
  if (cfg.bayes.iterations > 0) tc.iterations = cfg.bayes.iterations;
  VariationalPosterior init = init_posterior(cfg.net_layers, cfg.seed, cfg.bayes.rho_init);
  auto [post, history] = train_bpinn(init, tc, cfg.bayes.n_mc, cfg.bayes.scales,
                                     cfg.bayes.multipliers, profiles, cfg.thermal);

  std::string ckpt = out_path(cfg, "bpinn_posterior.txt");
  io::write_posterior_checkpoint(ckpt, post);
  manifest.record(ckpt);
  std::string hist = out_path(cfg, "bpinn_history.csv");
  io::write_elbo_history_csv(hist, history);
  manifest.record(hist);
  manifest.finish();
  std::printf("final ELBO loss %.6g (from %.6g)\n", history.back().elbo, history.front().elbo);
  return 0;
}

int cmd_predict(const CommonArgs& args, const std::string& model) {
  ExperimentConfig cfg = resolve_config(args);
  fs::create_directories(cfg.paths.out_dir);
  ManifestWriter manifest("predict", cfg);

  std::vector<double> xs = linspace(0.0, cfg.thermal.H, cfg.grid.nx);
  std::vector<double> ts = linspace(0.0, cfg.thermal.t_end, cfg.grid.nt);

  std::string grid_path;
  if (model == "pinn") {
    MlpParams params = io::read_mlp_checkpoint(out_path(cfg, "pinn_checkpoint.txt"));
    FieldGrid grid;
    grid.xs = xs;
    grid.ts = ts;
    grid.theta.resize(grid.cells());
    std::vector<double> flat = params.flatten();
    std::vector<double> scratch;
    for (int it = 0; it < grid.nt(); ++it) {
      for (int ix = 0; ix < grid.nx(); ++ix) {
        double u = mlp_eval_flat(flat, params.layer_sizes, xs[std::size_t(ix)] / cfg.thermal.H,
                                 ts[std::size_t(it)] / cfg.thermal.t_end, scratch);
        grid.at(ix, it) = cfg.thermal.theta_ref + cfg.thermal.theta_scale * u;
      }
    }
    grid_path = out_path(cfg, "pinn_field.csv");
    io::write_grid_csv(grid_path, grid, config_hash(cfg));
  } else {
    VariationalPosterior post =
        io::read_posterior_checkpoint(out_path(cfg, "bpinn_posterior.txt"));
    FieldGrid grid = posterior_predictive(post, xs, ts, cfg.bayes.n_predict_samples, cfg.seed,
                                          cfg.thermal);
    grid_path = out_path(cfg, "bpinn_field.csv");
    io::write_grid_csv(grid_path, grid, config_hash(cfg));
  }
  manifest.record(grid_path);
  manifest.record(grid_path + ".meta");
  manifest.finish();
  return 0;
}

int cmd_ageing(const CommonArgs& args, std::string input) {
  ExperimentConfig cfg = resolve_config(args);
  fs::create_directories(cfg.paths.out_dir);
  ManifestWriter manifest("ageing", cfg);

  if (input.empty()) input = out_path(cfg, "pinn_field.csv");
  FieldGrid grid = io::read_grid_csv(input);
  FieldGrid aged = ageing_field(grid, cfg.ageing);

  std::string aged_path = out_path(cfg, "ageing_grid.csv");
  io::write_grid_csv(aged_path, aged, config_hash(cfg));
  manifest.record(aged_path);

  std::vector<double> hours = loss_of_life(aged);
  std::string lol_path = out_path(cfg, "loss_of_life.csv");
  io::write_loss_of_life_csv(lol_path, aged.xs, hours);
  manifest.record(lol_path);
  manifest.finish();
  return 0;
}

int cmd_evaluate(const CommonArgs& args, std::string prediction, std::string reference) {
  ExperimentConfig cfg = resolve_config(args);
  fs::create_directories(cfg.paths.out_dir);
  ManifestWriter manifest("evaluate", cfg);

  if (prediction.empty()) prediction = out_path(cfg, "pinn_field.csv");
  if (reference.empty()) reference = out_path(cfg, "reference_grid.csv");
  FieldGrid pred = io::read_grid_csv(prediction);
  FieldGrid ref = io::read_grid_csv(reference);

  std::string stem = fs::path(prediction).stem().string();
  if (stem.size() > 6 && stem.ends_with("_field")) stem = stem.substr(0, stem.size() - 6);

  std::string summary;
  std::string error_path = out_path(cfg, stem + "_error.csv");
  if (pred.has_std()) {
    UncertaintyMaps maps = uncertainty_error_map(pred, ref);
    ErrorMap base = error_map(pred, ref);
    io::write_error_csv(error_path, maps.mean_error, &maps.zscore, config_hash(cfg));
    summary = "l2_rel=" + io::format_double(base.summary.l2_rel) +
              "\nmax_abs=" + io::format_double(base.summary.max_abs) +
              "\nfrac_within_3std=" + io::format_double(maps.frac_within_3std) +
              "\nflagged_cells=" + std::to_string(maps.flagged_cells) + "\n";
  } else {
    ErrorMap map = error_map(pred, ref);
    io::write_error_csv(error_path, map.signed_error, nullptr, config_hash(cfg));
    summary = "l2_rel=" + io::format_double(map.summary.l2_rel) +
              "\nmax_abs=" + io::format_double(map.summary.max_abs) + "\n";
  }
  manifest.record(error_path);
  std::string summary_path = out_path(cfg, stem + "_error_summary.txt");
  io::write_text_file(summary_path, summary);
  manifest.record(summary_path);
  manifest.finish();
  std::printf("%s", summary.c_str());
  return 0;
}

void apply_thread_cap() {
#ifdef _OPENMP
  const char* env = std::getenv("THERMOPINN_THREADS");
  if (env != nullptr) {
    int cap = std::atoi(env);
    if (cap >= 1) omp_set_num_threads(std::min(cap, omp_get_max_threads()));
  }
#endif
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{std::string(kVersion) +
               " - physics-informed transformer oil-temperature modeling"};
  app.require_subcommand(1);

  CommonArgs gen_args, tp_args, tb_args, pr_args, ag_args, ev_args;
  std::string predict_model = "pinn";
  std::string ageing_input;
  std::string eval_prediction, eval_reference;

  add_common(app.add_subcommand("generate", "synthesize profiles and the reference field"),
             gen_args);
  add_common(app.add_subcommand("train-pinn", "train the deterministic PINN"), tp_args);
  add_common(app.add_subcommand("train-bpinn", "train the Bayesian PINN"), tb_args);
  CLI::App* predict = app.add_subcommand("predict", "evaluate a trained model on the grid");
  add_common(predict, pr_args);
  predict->add_option("--model", predict_model, "pinn or bpinn")
      ->check(CLI::IsMember({"pinn", "bpinn"}));
  CLI::App* ageing = app.add_subcommand("ageing", "derive the insulation ageing field");
  add_common(ageing, ag_args);
  ageing->add_option("--input", ageing_input, "temperature grid CSV (default pinn_field.csv)");
  CLI::App* evaluate = app.add_subcommand("evaluate", "compare a prediction to a reference");
  add_common(evaluate, ev_args);
  evaluate->add_option("--prediction", eval_prediction, "prediction grid CSV");
  evaluate->add_option("--reference", eval_reference, "reference grid CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("generate")) return cmd_generate(gen_args);
    if (app.got_subcommand("train-pinn")) return cmd_train_pinn(tp_args);
    if (app.got_subcommand("train-bpinn")) return cmd_train_bpinn(tb_args);
    if (app.got_subcommand("predict")) return cmd_predict(pr_args, predict_model);
    if (app.got_subcommand("ageing")) return cmd_ageing(ag_args, ageing_input);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(ev_args, eval_prediction, eval_reference);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const io::MissingInputError& e) {
    std::fprintf(stderr, "missing input: %s\n", e.what());
    return 4;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const ad::AutodiffError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
