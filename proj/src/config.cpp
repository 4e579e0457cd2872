#include "trajher/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>
#include <vector>

#include "trajher/errors.hpp"

namespace trajher {

namespace {

std::string format_double(double v) {
  char buf[40];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(int line, const std::string& key) {
  throw ConfigError("config line " + std::to_string(line) +
                    ": invalid value for '" + key + "'");
}

double parse_double(const std::string& v, int line, const std::string& key) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty()) bad_value(line, key);
  return d;
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(line, key);
  return out;
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(line, key);
}

struct Field {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&, int line)> set;
};

}  // namespace

const char* reward_mode_name(RewardMode mode) {
  switch (mode) {
    case RewardMode::kFull: return "full";
    case RewardMode::kPushOnly: return "push_only";
    case RewardMode::kSparse3d: return "sparse3d";
  }
  return "unknown";
}

std::optional<RewardMode> reward_mode_from_name(const std::string& name) {
  if (name == "full") return RewardMode::kFull;
  if (name == "push_only") return RewardMode::kPushOnly;
  if (name == "sparse3d") return RewardMode::kSparse3d;
  return std::nullopt;
}

namespace {

// One declarative row per config key keeps serialize/parse in lockstep.
std::vector<Field> build_fields() {
  std::vector<Field> f;
  auto add_double = [&f](const char* key, auto member) {
    f.push_back({key,
                 [member](const TrainConfig& c) { return format_double(member(c)); },
                 [member, key](TrainConfig& c, const std::string& v, int line) {
                   member(c) = parse_double(v, line, key);
                 }});
  };
  auto add_int = [&f](const char* key, auto member) {
    f.push_back({key,
                 [member](const TrainConfig& c) {
                   return std::to_string(member(c));
                 },
                 [member, key](TrainConfig& c, const std::string& v, int line) {
                   member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(
                       parse_int(v, line, key));
                 }});
  };
  auto add_bool = [&f](const char* key, auto member) {
    f.push_back({key,
                 [member](const TrainConfig& c) {
                   return member(c) ? std::string("true") : std::string("false");
                 },
                 [member, key](TrainConfig& c, const std::string& v, int line) {
                   member(c) = parse_bool(v, line, key);
                 }});
  };

  // env.
  add_double("env.arena_radius", [](auto& c) -> auto& { return c.env.arena_radius; });
  add_double("env.cube_half_extent", [](auto& c) -> auto& { return c.env.cube_half_extent; });
  add_double("env.dt", [](auto& c) -> auto& { return c.env.dt; });
  add_double("env.v_max", [](auto& c) -> auto& { return c.env.v_max; });
  add_double("env.grasp_tolerance", [](auto& c) -> auto& { return c.env.grasp_tolerance; });
  add_double("env.push_gain", [](auto& c) -> auto& { return c.env.push_gain; });
  add_double("env.gravity_drop", [](auto& c) -> auto& { return c.env.gravity_drop; });
  add_double("env.lift_speed_cap", [](auto& c) -> auto& { return c.env.lift_speed_cap; });
  add_double("env.max_height", [](auto& c) -> auto& { return c.env.max_height; });
  add_double("env.home_radius", [](auto& c) -> auto& { return c.env.home_radius; });
  add_double("env.home_z", [](auto& c) -> auto& { return c.env.home_z; });
  add_double("env.goal_z_max", [](auto& c) -> auto& { return c.env.goal_z_max; });
  add_double("env.floor_goal_prob", [](auto& c) -> auto& { return c.env.floor_goal_prob; });
  add_double("env.dr_push_gain_lo", [](auto& c) -> auto& { return c.dr.push_gain.lo; });
  add_double("env.dr_push_gain_hi", [](auto& c) -> auto& { return c.dr.push_gain.hi; });
  add_double("env.dr_grasp_tolerance_lo", [](auto& c) -> auto& { return c.dr.grasp_tolerance.lo; });
  add_double("env.dr_grasp_tolerance_hi", [](auto& c) -> auto& { return c.dr.grasp_tolerance.hi; });
  add_double("env.dr_cube_half_extent_lo", [](auto& c) -> auto& { return c.dr.cube_half_extent.lo; });
  add_double("env.dr_cube_half_extent_hi", [](auto& c) -> auto& { return c.dr.cube_half_extent.hi; });
  add_double("env.dr_lift_speed_cap_lo", [](auto& c) -> auto& { return c.dr.lift_speed_cap.lo; });
  add_double("env.dr_lift_speed_cap_hi", [](auto& c) -> auto& { return c.dr.lift_speed_cap.hi; });
  add_double("env.dr_action_noise", [](auto& c) -> auto& { return c.dr.action_noise; });
  add_double("env.dr_observation_noise", [](auto& c) -> auto& { return c.dr.observation_noise; });

  // her.
  add_double("her.relabel_probability", [](auto& c) -> auto& { return c.her.relabel_probability; });
  add_bool("her.segment_restricted", [](auto& c) -> auto& { return c.her.segment_restricted; });
  add_bool("her.relabel_z", [](auto& c) -> auto& { return c.her.relabel_z; });
  f.push_back({"her.reward_mode",
               [](const TrainConfig& c) {
                 return std::string(reward_mode_name(c.her.reward_mode));
               },
               [](TrainConfig& c, const std::string& v, int line) {
                 const auto mode = reward_mode_from_name(v);
                 if (!mode) bad_value(line, "her.reward_mode");
                 c.her.reward_mode = *mode;
               }});
  add_double("her.reward_scale_a", [](auto& c) -> auto& { return c.her.reward_a; });

  // agent.
  add_double("agent.gamma", [](auto& c) -> auto& { return c.agent.gamma; });
  add_double("agent.polyak", [](auto& c) -> auto& { return c.agent.polyak; });
  add_double("agent.actor_lr", [](auto& c) -> auto& { return c.agent.actor_lr; });
  add_double("agent.critic_lr", [](auto& c) -> auto& { return c.agent.critic_lr; });
  add_double("agent.action_l2", [](auto& c) -> auto& { return c.agent.action_l2; });
  add_double("agent.normalizer_clip", [](auto& c) -> auto& { return c.agent.normalizer_clip; });
  add_double("agent.normalizer_eps_std", [](auto& c) -> auto& { return c.agent.normalizer_eps_std; });
  f.push_back({"agent.hidden_sizes",
               [](const TrainConfig& c) {
                 std::string out;
                 for (std::size_t i = 0; i < c.agent.hidden_sizes.size(); ++i) {
                   if (i) out += ',';
                   out += std::to_string(c.agent.hidden_sizes[i]);
                 }
                 return out;
               },
               [](TrainConfig& c, const std::string& v, int line) {
                 std::vector<int> sizes;
                 std::stringstream ss(v);
                 std::string item;
                 while (std::getline(ss, item, ',')) {
                   sizes.push_back(static_cast<int>(
                       parse_int(trim(item), line, "agent.hidden_sizes")));
                 }
                 if (sizes.empty()) bad_value(line, "agent.hidden_sizes");
                 c.agent.hidden_sizes = std::move(sizes);
               }});
  add_double("agent.random_action_prob",
             [](auto& c) -> auto& { return c.exploration.random_action_probability; });
  add_double("agent.action_noise_std",
             [](auto& c) -> auto& { return c.exploration.gaussian_noise_std; });

  // train.
  add_int("train.stage1_epochs", [](auto& c) -> auto& { return c.stage1_epochs; });
  add_int("train.stage2_epochs", [](auto& c) -> auto& { return c.stage2_epochs; });
  add_int("train.cycles_per_epoch", [](auto& c) -> auto& { return c.cycles_per_epoch; });
  add_int("train.rollouts_per_cycle", [](auto& c) -> auto& { return c.rollouts_per_cycle; });
  add_int("train.updates_per_cycle", [](auto& c) -> auto& { return c.updates_per_cycle; });
  add_int("train.batch_size", [](auto& c) -> auto& { return c.batch_size; });
  add_int("train.eval_episodes_per_epoch",
          [](auto& c) -> auto& { return c.eval_episodes_per_epoch; });
  add_double("train.exploit_buffer_fraction",
             [](auto& c) -> auto& { return c.exploit_buffer_fraction; });
  add_double("train.stage1_success_threshold",
             [](auto& c) -> auto& { return c.stage1_success_threshold; });
  add_int("train.dr_warmup_epochs", [](auto& c) -> auto& { return c.dr_warmup_epochs; });
  add_int("train.buffer_capacity", [](auto& c) -> auto& { return c.buffer_capacity; });
  add_int("train.convergence_window", [](auto& c) -> auto& { return c.convergence_window; });
  add_double("train.convergence_delta", [](auto& c) -> auto& { return c.convergence_delta; });
  add_int("train.seed", [](auto& c) -> auto& { return c.seed; });
  add_bool("train.keep_all_checkpoints", [](auto& c) -> auto& { return c.keep_all_checkpoints; });
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = build_fields();
  return f;
}

}  // namespace

std::string serialize_config(const TrainConfig& cfg) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const std::string sec = f.key.substr(0, f.key.find('.'));
    if (sec != section) {
      if (!out.empty()) out += '\n';
      section = sec;
    }
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    bool found = false;
    for (const Field& f : fields()) {
      if (f.key == key) {
        f.set(cfg, value, line_no);
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::uint64_t config_digest(const TrainConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

const char* preset_name(Preset p) {
  switch (p) {
    case Preset::kFinal: return "final";
    case Preset::kHerBoth: return "her-both";
    case Preset::kHerStandard: return "her-standard";
    case Preset::kPushOnly: return "push-only";
  }
  return "unknown";
}

std::optional<Preset> preset_from_name(const std::string& name) {
  if (name == "final") return Preset::kFinal;
  if (name == "her-both") return Preset::kHerBoth;
  if (name == "her-standard") return Preset::kHerStandard;
  if (name == "push-only") return Preset::kPushOnly;
  return std::nullopt;
}

void apply_preset(TrainConfig& cfg, Preset p) {
  switch (p) {
    case Preset::kFinal:
      cfg.her.reward_mode = RewardMode::kFull;
      cfg.her.relabel_z = false;
      break;
    case Preset::kHerBoth:
      cfg.her.reward_mode = RewardMode::kFull;
      cfg.her.relabel_z = true;
      break;
    case Preset::kHerStandard:
      cfg.her.reward_mode = RewardMode::kSparse3d;
      cfg.her.relabel_z = true;
      break;
    case Preset::kPushOnly:
      cfg.her.reward_mode = RewardMode::kPushOnly;
      cfg.her.relabel_z = false;
      break;
  }
}

std::string preset_overrides(Preset p) {
  TrainConfig cfg;
  apply_preset(cfg, p);
  std::string out = "her.reward_mode=";
  out += reward_mode_name(cfg.her.reward_mode);
  out += " her.relabel_z=";
  out += cfg.her.relabel_z ? "true" : "false";
  return out;
}

}  // namespace trajher
