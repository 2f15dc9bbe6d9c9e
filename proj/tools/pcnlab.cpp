#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcnlab/blas.hpp"
#include "pcnlab/checkpoint.hpp"
#include "pcnlab/config.hpp"
#include "pcnlab/data.hpp"
#include "pcnlab/experiments.hpp"
#include "pcnlab/report.hpp"
#include "pcnlab/verify.hpp"

namespace fs = std::filesystem;
using namespace pcnlab;

namespace {

// Collects config file + flag overrides; flags win over file keys, file keys
// win over defaults.
struct Cli {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key=value config file");
    auto opt = [&](const char* flag, const char* key, const char* help) {
      cmd->add_option_function<std::string>(
             flag, [this, key](const std::string& v) { overrides[key] = v; }, help)
          ->expected(1);
    };
    opt("--task", "task", "digit1|groups|barred|onehot_bottom");
    opt("--seed", "seed", "run seed");
    opt("--seeds", "seeds", "comma-separated seed list (multi-seed sweeps)");
    opt("--epochs", "epochs", "training epochs");
    opt("--batch-size", "batch_size", "training batch size");
    opt("--node-lr", "node_lr", "node update learning rate (SGD)");
    opt("--weight-lr", "weight_lr", "weight update learning rate (Adam)");
    opt("--train-iterations", "train_iterations", "inference iterations per training sample");
    opt("--test-iterations", "test_iterations_per_epoch", "test iterations per epoch trained");
    opt("--test-subset", "test_subset", "test images per run");
    opt("--train-subset", "train_subset", "cap on training examples (0 = all)");
    opt("--ablate", "ablate", "comma-separated ablation depths");
    opt("--bar-first-row", "bar_first_row", "first row of the white bar");
    opt("--bar-rows", "bar_rows", "bar thickness in rows");
    opt("--eval-every", "eval_every", "evaluate during training every k epochs");
    opt("--threads", "threads", "OpenMP threads (0 = default; never affects results)");
    opt("--out", "out", "output directory root");
    opt("--data-dir", "data_dir", "MNIST directory (or $PCNLAB_DATA_DIR)");
    cmd->add_flag_function(
        "--noise-top", [this](int64_t) { overrides["noise_top"] = "1"; },
        "train with random noise clamped to the top layer");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) apply_config(cfg, parse_config_file(config_path));
    for (const auto& [k, v] : overrides) apply_config_key(cfg, k, v);
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    return cfg;
  }
};

std::string final_ckpt(const ExperimentConfig& cfg, uint64_t seed) {
  return run_dir(cfg, seed) + "/ckpt_epoch" + std::to_string(cfg.epochs) + ".bin";
}

int cmd_train(const Cli& cli) {
  ExperimentConfig cfg = cli.resolve();
  RawData raw_train = load_mnist_split(cfg.resolved_data_dir(), true);
  RawData raw_test = load_mnist_split(cfg.resolved_data_dir(), false);

  std::vector<uint64_t> seeds =
      cli.overrides.count("seeds") ? cfg.seeds : std::vector<uint64_t>{cfg.seed};
  for (uint64_t sd : seeds) {
    ExperimentConfig c = cfg;
    c.seed = sd;
    std::string rd = run_dir(c, sd);
    fs::create_directories(rd);
    std::ofstream log_file(rd + "/train.log", std::ios::app);
    std::cout << "[train " << c.task << (c.noise_top ? "-noise" : "") << " seed " << sd
              << "] -> " << rd << " (blas: " << blas::backend() << ")\n";
    TaskData data = prepare_task(c, raw_train, raw_test);
    struct Tee : std::ostream, std::streambuf {
      std::ostream &a, &b;
      Tee(std::ostream& a, std::ostream& b) : std::ostream(this), a(a), b(b) {}
      int overflow(int ch) override {
        a.put(static_cast<char>(ch));
        b.put(static_cast<char>(ch));
        if (ch == '\n') { a.flush(); b.flush(); }
        return ch;
      }
    } tee(std::cout, log_file);
    train_model(c, data, rd, &tee);
  }
  return 0;
}

int cmd_eval(const Cli& cli) {
  ExperimentConfig cfg = cli.resolve();
  RawData raw_train = load_mnist_split(cfg.resolved_data_dir(), true);
  RawData raw_test = load_mnist_split(cfg.resolved_data_dir(), false);

  std::vector<uint64_t> seeds =
      cli.overrides.count("seeds") ? cfg.seeds : std::vector<uint64_t>{cfg.seed};

  std::vector<std::pair<uint64_t, RunResult>> evals;
  for (uint64_t sd : seeds) {
    ExperimentConfig c = cfg;
    c.seed = sd;
    std::string path = final_ckpt(c, sd);
    if (!fs::exists(path))
      throw std::runtime_error("no checkpoint at " + path + " (run `pcnlab train` first)");
    Checkpoint ck = load_checkpoint(path);
    if (ck.task != c.task)
      throw std::runtime_error("checkpoint " + path + " was trained for task '" + ck.task +
                               "', not '" + c.task + "'");
    if (ck.config_hash != c.train_hash())
      throw std::runtime_error("checkpoint " + path +
                               " was trained with a different configuration");
    TaskData data = prepare_task(c, raw_train, raw_test);
    for (int d : c.ablation_depths) {
      RunResult r = evaluate_cached(ck.params, data, c, d, c.epochs,
                                    run_dir(c, sd) + "/eval_d" + std::to_string(d), &std::cout);
      evals.emplace_back(sd, r);
    }
  }
  if (evals.size() > 1) {
    RunResult sweep = aggregate_sweep(cfg, evals);
    std::string dir = cfg.out_dir + "/" + cfg.task + (cfg.noise_top ? "-noise" : "") + "/sweep";
    persist(sweep, dir);
    std::cout << "sweep -> " << dir << "\n";
    for (const auto& st : sweep.depth_stats)
      std::cout << "  depth " << st.depth << ": mean action " << st.mean_action_acc << " +- "
                << st.dispersion << " (" << st.dispersion_kind << ", n=" << st.n << ")\n";
  }
  return 0;
}

int cmd_report(const Cli& cli, const std::vector<std::string>& dirs) {
  ExperimentConfig cfg = cli.resolve();
  std::string out = cli.overrides.count("out") ? cfg.out_dir : "report";
  write_report(dirs, out);
  std::cout << "report -> " << out << "\n";
  return 0;
}

int cmd_verify(int trials, uint64_t seed) {
  VerifyOptions opts;
  opts.gradient_trials = trials;
  opts.seed = seed;
  VerifyReport rep = run_verification(opts);
  std::cout << rep.text;
  std::cout << (rep.ok() ? "all checks passed" : "CHECKS FAILED") << " (" << rep.passed
            << " passed, " << rep.failed << " failed)\n";
  return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcnlab: hierarchical predictive coding experiments"};
  app.require_subcommand(1);

  Cli train_cli, eval_cli, report_cli;
  auto* train = app.add_subcommand("train", "train a network (one checkpoint per epoch)");
  train_cli.add_common(train);
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints, with optional layer ablation");
  eval_cli.add_common(eval);

  std::vector<std::string> report_dirs;
  auto* report = app.add_subcommand("report", "render SVG charts + summary from result dirs");
  report->add_option("dirs", report_dirs, "directories containing result.json")->required();
  report_cli.add_common(report);

  int verify_trials = 50;
  uint64_t verify_seed = 1234;
  auto* verify = app.add_subcommand("verify", "gradient and invariant checks on toy networks");
  verify->add_option("--trials", verify_trials, "number of random networks");
  verify->add_option("--seed", verify_seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_cli);
    if (eval->parsed()) return cmd_eval(eval_cli);
    if (report->parsed()) return cmd_report(report_cli, report_dirs);
    if (verify->parsed()) return cmd_verify(verify_trials, verify_seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
