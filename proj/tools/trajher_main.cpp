#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajher/checkpoint.hpp"
#include "trajher/config.hpp"
#include "trajher/errors.hpp"
#include "trajher/trainer.hpp"

namespace fs = std::filesystem;
using namespace trajher;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("TRAJHER_SEED");
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') {
    throw ConfigError("TRAJHER_SEED is not a valid integer: " + std::string(raw));
  }
  return v;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                           std::uint64_t config_seed) {
  if (flag) return *flag;
  if (auto env = env_seed()) return *env;
  return config_seed;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int run_train(const std::string& config_path,
              const std::optional<std::uint64_t>& seed_flag,
              const std::string& out_dir, const std::string& preset_arg,
              const std::string& resume_path) {
  TrainConfig cfg = load_config_file(config_path);
  std::optional<Preset> preset;
  if (!preset_arg.empty()) {
    preset = preset_from_name(preset_arg);
    if (!preset) throw ConfigError("unknown preset: " + preset_arg);
    apply_preset(cfg, *preset);
  }
  cfg.seed = resolve_seed(seed_flag, cfg.seed);
  cfg.validate();

  fs::create_directories(out_dir);
  const fs::path metrics_path = fs::path(out_dir) / "metrics.csv";
  const fs::path events_path = fs::path(out_dir) / "events.log";

  const std::uint64_t digest = config_digest(cfg);
  std::optional<Trainer> trainer;
  if (!resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_path);
    if (ckpt.config_digest != digest) {
      throw ConfigError("checkpoint config digest " + hex64(ckpt.config_digest) +
                        " does not match the supplied config " + hex64(digest) +
                        "; refusing to resume");
    }
    trainer.emplace(cfg, ckpt.trainer);
  } else {
    trainer.emplace(cfg);
  }

  const bool fresh_metrics = !fs::exists(metrics_path);
  std::ofstream metrics(metrics_path, std::ios::app);
  if (!metrics) throw IoError("cannot open " + metrics_path.string());
  std::ofstream events(events_path, std::ios::app);
  if (!events) throw IoError("cannot open " + events_path.string());
  if (fresh_metrics) {
    metrics << "# trajher metrics v1\n";
    metrics << "# config_digest=" << hex64(digest) << "\n";
    if (preset) {
      metrics << "# preset=" << preset_name(*preset) << ' '
              << preset_overrides(*preset) << "\n";
    }
    metrics << metrics_csv_header() << "\n";
    metrics.flush();
  }

  std::string previous_ckpt;
  while (!trainer->finished()) {
    const EpochMetrics m = trainer->step_epoch();
    metrics << metrics_csv_row(m) << "\n";
    metrics.flush();
    for (const std::string& e : trainer->drain_events()) {
      events << e << "\n";
    }
    events.flush();

    char name[32];
    std::snprintf(name, sizeof(name), "epoch-%04d.ckpt", m.epoch);
    const fs::path ckpt_path = fs::path(out_dir) / name;
    Checkpoint ckpt;
    ckpt.config_digest = digest;
    ckpt.config_text = serialize_config(cfg);
    ckpt.trainer = trainer->snapshot();
    save_checkpoint(ckpt_path.string(), ckpt);
    if (!cfg.keep_all_checkpoints && !previous_ckpt.empty()) {
      std::error_code ec;
      fs::remove(previous_ckpt, ec);
    }
    previous_ckpt = ckpt_path.string();

    std::printf("%s\n", metrics_csv_row(m).c_str());
    std::fflush(stdout);
  }

  Checkpoint final_ckpt;
  final_ckpt.config_digest = digest;
  final_ckpt.config_text = serialize_config(cfg);
  final_ckpt.trainer = trainer->snapshot();
  save_checkpoint((fs::path(out_dir) / "final.ckpt").string(), final_ckpt);

  std::printf("training finished: status=%s epochs=%d env_steps=%lld\n",
              train_status_name(trainer->status()), trainer->epoch(),
              trainer->env_steps());
  if (trainer->status() == TrainStatus::kMaxEpochs) {
    std::fprintf(stderr,
                 "warning: epoch budget exhausted before convergence\n");
  }
  return 0;
}

int run_eval(const std::string& ckpt_path, int episodes, bool stuck_recovery,
             const std::optional<std::uint64_t>& seed_flag,
             const std::string& out_dir, bool with_dr) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  TrainConfig cfg = parse_config_text(ckpt.config_text);
  if (config_digest(cfg) != ckpt.config_digest) {
    throw IoError("checkpoint digest does not match its embedded config");
  }
  Trainer trainer(cfg, ckpt.trainer);

  SeededRng rng(resolve_seed(seed_flag, 0));
  DRConfig dr = cfg.dr;
  dr.enabled = with_dr;
  CubeCarryEnv env(cfg.env, dr);
  const EvalReport report =
      evaluate(trainer.agent(), env, episodes, stuck_recovery, rng);

  fs::create_directories(out_dir);
  const fs::path log_path = fs::path(out_dir) / "rollouts.jsonl";
  write_rollout_log(log_path.string(), report.rollouts);

  std::printf("episodes=%d success_rate=%.6g score_mean=%.6g score_std=%.6g\n",
              episodes, report.success_rate, report.score_mean,
              report.score_std);
  std::printf("rollout_log=%s\n", log_path.string().c_str());
  return 0;
}

int run_score(const std::string& log_path) {
  const std::vector<RolloutEpisode> episodes = read_rollout_log(log_path);
  double total = 0.0;
  for (const RolloutEpisode& ep : episodes) {
    const double s = score_episode(ep);
    total += s;
    std::printf("episode %d: score=%.9g steps=%zu\n", ep.episode, s,
                ep.steps.size());
  }
  std::printf("mean_score=%.9g episodes=%zu\n",
              total / static_cast<double>(episodes.size()), episodes.size());
  return 0;
}

int run_ablation(int seeds, int epochs, const std::string& out_dir,
                 const std::string& config_path) {
  TrainConfig base = config_path.empty() ? TrainConfig{}
                                         : load_config_file(config_path);
  // Fig-3a-style comparison: a fixed stage-1 budget, no domain randomization,
  // identical across arms.
  base.stage1_epochs = epochs;
  base.stage2_epochs = 0;
  base.stage1_success_threshold = 1.0;

  fs::create_directories(out_dir);
  const fs::path csv_path = fs::path(out_dir) / "ablation.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot open " + csv_path.string());
  csv << "arm,seed,epoch,env_steps,eval_success_rate\n";

  const Preset arms[] = {Preset::kFinal, Preset::kHerBoth, Preset::kHerStandard};
  for (Preset arm : arms) {
    std::vector<double> final_rates;
    for (int s = 0; s < seeds; ++s) {
      TrainConfig cfg = base;
      apply_preset(cfg, arm);
      cfg.seed = static_cast<std::uint64_t>(s + 1);
      Trainer trainer(cfg);
      double last = 0.0;
      while (!trainer.finished()) {
        const EpochMetrics m = trainer.step_epoch();
        csv << preset_name(arm) << ',' << cfg.seed << ',' << m.epoch << ','
            << m.env_steps << ',' << m.eval_success_rate << "\n";
        csv.flush();
        last = m.eval_success_rate;
      }
      final_rates.push_back(last);
      std::printf("arm=%s seed=%llu final_eval_success=%.3f\n", preset_name(arm),
                  static_cast<unsigned long long>(cfg.seed), last);
      std::fflush(stdout);
    }
    std::sort(final_rates.begin(), final_rates.end());
    const double median = final_rates[final_rates.size() / 2];
    std::printf("arm=%s median_final_eval_success=%.3f\n", preset_name(arm),
                median);
    std::fflush(stdout);
  }
  std::printf("ablation_csv=%s\n", csv_path.string().c_str());
  return 0;
}

int run_dump_config(const std::string& preset_arg) {
  TrainConfig cfg;
  if (!preset_arg.empty()) {
    const auto preset = preset_from_name(preset_arg);
    if (!preset) throw ConfigError("unknown preset: " + preset_arg);
    apply_preset(cfg, *preset);
  }
  std::fputs(serialize_config(cfg).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajher: goal-trajectory cube-carry RL (DDPG + asymmetric HER)"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Run the two-stage training curriculum");
  std::string train_config;
  std::optional<std::uint64_t> train_seed;
  std::string train_out = "run";
  std::string train_preset;
  std::string train_resume;
  train->add_option("config", train_config, "config file (key = value)")->required();
  train->add_option("--seed", train_seed, "RNG seed (overrides config and TRAJHER_SEED)");
  train->add_option("--out", train_out, "output directory");
  train->add_option("--preset", train_preset, "final | her-both | her-standard | push-only");
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string eval_ckpt;
  int eval_episodes = 10;
  bool eval_stuck = false;
  std::optional<std::uint64_t> eval_seed;
  std::string eval_out = "eval";
  bool eval_dr = false;
  eval->add_option("checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--episodes", eval_episodes, "number of evaluation episodes");
  eval->add_flag("--stuck-recovery", eval_stuck,
                 "inject 7 random actions after 50 stuck steps");
  eval->add_option("--seed", eval_seed, "RNG seed");
  eval->add_option("--out", eval_out, "directory for rollout logs");
  eval->add_flag("--dr", eval_dr, "evaluate with domain randomization enabled");

  // score
  auto* score = app.add_subcommand("score", "Score a rollout log");
  std::string score_log;
  score->add_option("log", score_log, "rollout log (JSON lines)")->required();

  // ablation
  auto* ablation = app.add_subcommand(
      "ablation", "Compare final / her-both / her-standard over seeds");
  int ab_seeds = 3;
  int ab_epochs = 30;
  std::string ab_out = "ablation";
  std::string ab_config;
  ablation->add_option("--seeds", ab_seeds, "seeds per arm");
  ablation->add_option("--epochs", ab_epochs, "stage-1 epoch budget per run");
  ablation->add_option("--out", ab_out, "output directory");
  ablation->add_option("--config", ab_config, "base config file (defaults otherwise)");

  // dump-config
  auto* dump = app.add_subcommand("dump-config", "Print the canonical config");
  std::string dump_preset;
  dump->add_option("--preset", dump_preset, "apply a preset before printing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train->parsed()) {
      return run_train(train_config, train_seed, train_out, train_preset,
                       train_resume);
    }
    if (eval->parsed()) {
      return run_eval(eval_ckpt, eval_episodes, eval_stuck, eval_seed, eval_out,
                      eval_dr);
    }
    if (score->parsed()) return run_score(score_log);
    if (ablation->parsed()) {
      return run_ablation(ab_seeds, ab_epochs, ab_out, ab_config);
    }
    if (dump->parsed()) return run_dump_config(dump_preset);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
