#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "trajher/checkpoint.hpp"
#include "trajher/config.hpp"
#include "trajher/errors.hpp"
#include "trajher/trainer.hpp"

namespace py = pybind11;
using namespace trajher;

namespace {

RewardMode mode_from(const std::string& name) {
  const auto mode = reward_mode_from_name(name);
  if (!mode) throw ConfigError("unknown reward mode: " + name);
  return *mode;
}

/// Env wrapper owning its RNG so python callers only deal with a seed.
class PyEnv {
 public:
  PyEnv(std::uint64_t seed, const std::string& config_text)
      : cfg_(config_text.empty() ? TrainConfig{} : parse_config_text(config_text)),
        env_(cfg_.env, cfg_.dr),
        rng_(seed) {}

  std::vector<double> reset() { return env_.reset(rng_); }

  py::tuple step(const std::vector<double>& action) {
    StepResult res = env_.step(action, rng_);
    py::dict info;
    info["held"] = res.info.held;
    info["xy_distance"] = res.info.xy_distance;
    info["success"] = res.info.success;
    const Vec3& a = res.achieved_goal;
    return py::make_tuple(res.observation,
                          std::vector<double>{a[0], a[1], a[2]}, info);
  }

  std::vector<double> active_goal() const {
    const Vec3& g = env_.active_goal();
    return {g[0], g[1], g[2]};
  }

  bool done() const { return env_.done(); }
  int step_index() const { return env_.state().step_index; }

 private:
  TrainConfig cfg_;
  CubeCarryEnv env_;
  SeededRng rng_;
};

py::dict metrics_to_dict(const EpochMetrics& m) {
  py::dict d;
  d["epoch"] = m.epoch;
  d["env_steps"] = m.env_steps;
  d["train_success_rate"] = m.train_success_rate;
  d["eval_success_rate"] = m.eval_success_rate;
  d["mean_episode_reward"] = m.mean_episode_reward;
  d["critic_loss"] = m.critic_loss;
  d["actor_loss"] = m.actor_loss;
  d["stage"] = m.stage;
  d["buffer_size"] = m.buffer_size;
  d["wall_time_s"] = m.wall_time_s;
  return d;
}

py::dict train_from_text(const std::string& config_text,
                         const std::string& preset_name_arg,
                         std::optional<std::uint64_t> seed) {
  TrainConfig cfg = parse_config_text(config_text);
  if (!preset_name_arg.empty()) {
    const auto preset = preset_from_name(preset_name_arg);
    if (!preset) throw ConfigError("unknown preset: " + preset_name_arg);
    apply_preset(cfg, *preset);
  }
  if (seed) cfg.seed = *seed;
  const TrainResult result = train_curriculum(cfg);
  py::list metrics;
  for (const EpochMetrics& m : result.metrics) metrics.append(metrics_to_dict(m));
  py::dict out;
  out["metrics"] = metrics;
  out["events"] = result.events;
  out["status"] = std::string(train_status_name(result.status));
  return out;
}

py::dict eval_checkpoint(const std::string& path, int episodes,
                         bool stuck_recovery, std::uint64_t seed) {
  Checkpoint ckpt = load_checkpoint(path);
  TrainConfig cfg = parse_config_text(ckpt.config_text);
  Trainer trainer(cfg, ckpt.trainer);
  SeededRng rng(seed);
  CubeCarryEnv env(cfg.env, cfg.dr);
  const EvalReport report =
      evaluate(trainer.agent(), env, episodes, stuck_recovery, rng);
  py::dict out;
  out["success_rate"] = report.success_rate;
  out["score_mean"] = report.score_mean;
  out["score_std"] = report.score_std;
  out["scores"] = report.scores;
  return out;
}

std::vector<double> score_log(const std::string& path) {
  std::vector<double> scores;
  for (const RolloutEpisode& ep : read_rollout_log(path)) {
    scores.push_back(score_episode(ep));
  }
  return scores;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cube-carry goal-trajectory RL core (DDPG + asymmetric HER)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

  m.attr("EPISODE_STEPS") = kEpisodeSteps;
  m.attr("SEGMENT_STEPS") = kSegmentSteps;
  m.attr("OBSERVATION_DIM") = kObservationDim;
  m.attr("ACTION_DIM") = kActionDim;

  m.def(
      "compute_reward",
      [](const Vec3& achieved, const Vec3& goal, const std::string& mode,
         double a) { return compute_reward(achieved, goal, mode_from(mode), a); },
      py::arg("achieved"), py::arg("goal"), py::arg("mode") = "full",
      py::arg("a") = 20.0,
      "Reward for an achieved cube position against a goal.");
  m.def(
      "is_success",
      [](const Vec3& achieved, const Vec3& goal) {
        return is_success(achieved, goal);
      },
      py::arg("achieved"), py::arg("goal"),
      "True when the 3-D position error is within 2 cm.");

  py::class_<PyEnv>(m, "CubeCarryEnv")
      .def(py::init<std::uint64_t, const std::string&>(), py::arg("seed") = 0,
           py::arg("config_text") = "")
      .def("reset", &PyEnv::reset)
      .def("step", &PyEnv::step, py::arg("action"))
      .def("active_goal", &PyEnv::active_goal)
      .def("done", &PyEnv::done)
      .def("step_index", &PyEnv::step_index);

  m.def("default_config", [] { return serialize_config(TrainConfig{}); },
        "Canonical default configuration text.");
  m.def("config_digest",
        [](const std::string& text) { return config_digest(parse_config_text(text)); },
        py::arg("config_text"));
  m.def("train", &train_from_text, py::arg("config_text"),
        py::arg("preset") = "", py::arg("seed") = std::nullopt,
        "Run the training curriculum; returns metrics, events and status.");
  m.def("evaluate_checkpoint", &eval_checkpoint, py::arg("path"),
        py::arg("episodes") = 10, py::arg("stuck_recovery") = false,
        py::arg("seed") = 0);
  m.def("score_rollout_log", &score_log, py::arg("path"),
        "Per-episode competition scores for a rollout log.");
}
