#include "trajher/rollout_log.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "trajher/errors.hpp"

namespace trajher {

namespace {

using nlohmann::json;

json vec_to_json(std::span<const double> v) {
  return json(std::vector<double>(v.begin(), v.end()));
}

template <std::size_t N>
std::array<double, N> json_to_array(const json& j, const char* field, int line) {
  if (!j.is_array() || j.size() != N) {
    throw InputError("rollout log line " + std::to_string(line) + ": field '" +
                     field + "' must be an array of " + std::to_string(N) +
                     " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
  return out;
}

}  // namespace

void write_rollout_log(std::ostream& out,
                       const std::vector<RolloutEpisode>& episodes) {
  for (const RolloutEpisode& ep : episodes) {
    for (const RolloutStep& s : ep.steps) {
      json j;
      j["episode"] = ep.episode;
      j["step"] = s.step;
      j["action"] = vec_to_json({s.action.data(), s.action.size()});
      j["achieved"] = vec_to_json({s.achieved.data(), s.achieved.size()});
      j["goal"] = vec_to_json({s.goal.data(), s.goal.size()});
      j["reward"] = s.reward;
      j["success"] = s.success;
      out << j.dump() << '\n';
    }
  }
}

void write_rollout_log(const std::string& path,
                       const std::vector<RolloutEpisode>& episodes) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open rollout log for writing: " + path);
  write_rollout_log(out, episodes);
}

std::vector<RolloutEpisode> read_rollout_log(std::istream& in) {
  std::vector<RolloutEpisode> episodes;
  std::map<int, std::size_t> index_of;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw InputError("rollout log line " + std::to_string(line_no) +
                       ": not valid JSON");
    }
    for (const char* field :
         {"episode", "step", "action", "achieved", "goal", "reward", "success"}) {
      if (!j.contains(field)) {
        throw InputError("rollout log line " + std::to_string(line_no) +
                         ": missing field '" + field + "'");
      }
    }
    RolloutStep step;
    step.step = j["step"].get<int>();
    step.action = json_to_array<kActionDim>(j["action"], "action", line_no);
    step.achieved = json_to_array<3>(j["achieved"], "achieved", line_no);
    step.goal = json_to_array<3>(j["goal"], "goal", line_no);
    step.reward = j["reward"].get<double>();
    step.success = j["success"].get<bool>();

    const int ep_id = j["episode"].get<int>();
    auto [it, inserted] = index_of.try_emplace(ep_id, episodes.size());
    if (inserted) {
      episodes.push_back(RolloutEpisode{ep_id, {}});
    }
    RolloutEpisode& ep = episodes[it->second];
    const int expected = static_cast<int>(ep.steps.size());
    if (step.step != expected) {
      throw InputError("rollout log line " + std::to_string(line_no) +
                       ": episode " + std::to_string(ep_id) + " expected step " +
                       std::to_string(expected) + ", got " +
                       std::to_string(step.step));
    }
    ep.steps.push_back(step);
  }
  if (episodes.empty()) throw InputError("rollout log is empty");
  return episodes;
}

std::vector<RolloutEpisode> read_rollout_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rollout log: " + path);
  return read_rollout_log(in);
}

}  // namespace trajher
