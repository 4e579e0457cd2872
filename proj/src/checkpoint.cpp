#include "trajher/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "trajher/errors.hpp"

namespace trajher {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

enum SectionTag : std::uint32_t {
  kSectionConfig = 1,
  kSectionMeta = 2,
  kSectionAgent = 3,
  kSectionRng = 4,
  kSectionBuffer = 5,
};

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void vec_f64(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void vec_i32(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) u32(static_cast<std::uint32_t>(x));
  }
  const std::string& buffer() const { return out_; }

 private:
  void raw(const void* p, std::size_t n) {
    out_.append(static_cast<const char*>(p), n);
  }
  std::string out_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int64_t i64() { return get<std::int64_t>(); }
  double f64() { return get<double>(); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> vec_f64() {
    const std::uint64_t n = u64();
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), data_ + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::vector<int> vec_i32() {
    const std::uint64_t n = u64();
    std::vector<int> v(n);
    for (auto& x : v) x = static_cast<int>(u32());
    return v;
  }
  bool done() const { return pos_ >= size_; }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > size_) throw IoError("checkpoint is truncated");
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_adam(Writer& w, const AdamState& a) {
  w.i64(a.step);
  w.vec_f64(a.m);
  w.vec_f64(a.v);
  w.f64(a.learning_rate);
  w.f64(a.beta1);
  w.f64(a.beta2);
  w.f64(a.epsilon);
}

AdamState read_adam(Reader& r) {
  AdamState a;
  a.step = r.i64();
  a.m = r.vec_f64();
  a.v = r.vec_f64();
  a.learning_rate = r.f64();
  a.beta1 = r.f64();
  a.beta2 = r.f64();
  a.epsilon = r.f64();
  return a;
}

void write_normalizer(Writer& w, const RunningNormalizer& n) {
  w.vec_f64(n.sum);
  w.vec_f64(n.sum_sq);
  w.f64(n.count);
  w.f64(n.clip);
  w.f64(n.eps_std);
}

RunningNormalizer read_normalizer(Reader& r) {
  RunningNormalizer n;
  n.sum = r.vec_f64();
  n.sum_sq = r.vec_f64();
  n.count = r.f64();
  n.clip = r.f64();
  n.eps_std = r.f64();
  return n;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  // Sections are built standalone, then framed with tag + length.
  std::vector<std::pair<SectionTag, std::string>> sections;

  {
    Writer w;
    w.str(ckpt.config_text);
    sections.emplace_back(kSectionConfig, w.buffer());
  }
  {
    const TrainerSnapshot& t = ckpt.trainer;
    Writer w;
    w.u32(static_cast<std::uint32_t>(t.epoch));
    w.u32(static_cast<std::uint32_t>(t.stage));
    w.u32(static_cast<std::uint32_t>(t.stage_epoch));
    w.i64(t.env_steps);
    w.u32(static_cast<std::uint32_t>(t.status));
    w.vec_f64(t.recent_evals);
    sections.emplace_back(kSectionMeta, w.buffer());
  }
  {
    const TrainerSnapshot& t = ckpt.trainer;
    Writer w;
    w.vec_i32(t.actor_layers);
    w.vec_i32(t.critic_layers);
    w.vec_f64(t.actor_params);
    w.vec_f64(t.critic_params);
    w.vec_f64(t.target_actor_params);
    w.vec_f64(t.target_critic_params);
    write_adam(w, t.actor_adam);
    write_adam(w, t.critic_adam);
    write_normalizer(w, t.obs_normalizer);
    write_normalizer(w, t.goal_normalizer);
    sections.emplace_back(kSectionAgent, w.buffer());
  }
  {
    Writer w;
    w.u64(4);
    for (std::uint64_t s : ckpt.trainer.rng_state) w.u64(s);
    sections.emplace_back(kSectionRng, w.buffer());
  }
  {
    const TrainerSnapshot& t = ckpt.trainer;
    Writer w;
    w.u64(t.buffer_capacity);
    w.u64(t.buffer_next);
    w.u64(t.buffer_total_stored);
    w.u64(t.episodes.size());
    for (const Episode& ep : t.episodes) {
      w.vec_f64(ep.observations);
      w.vec_f64(ep.actions);
      w.vec_f64(ep.achieved_goals);
      w.vec_f64(ep.desired_goals);
      w.vec_i32(ep.segment_ids);
    }
    sections.emplace_back(kSectionBuffer, w.buffer());
  }

  Writer out;
  out.u32(ckpt.version);
  out.u64(ckpt.config_digest);
  out.u32(static_cast<std::uint32_t>(sections.size()));

  std::string blob(kCheckpointMagic, sizeof(kCheckpointMagic));
  blob += out.buffer();
  for (const auto& [tag, payload] : sections) {
    Writer frame;
    frame.u32(tag);
    frame.u64(payload.size());
    blob += frame.buffer();
    blob += payload;
  }

  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open checkpoint for writing: " + tmp.string());
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!f) throw IoError("short write to checkpoint: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + target.string());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string blob = ss.str();

  if (blob.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(blob.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IoError("not a trajher checkpoint (bad magic): " + path);
  }
  Reader r(blob.data() + sizeof(kCheckpointMagic),
           blob.size() - sizeof(kCheckpointMagic));

  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion) {
    throw IoError("checkpoint version " + std::to_string(ckpt.version) +
                  " is not supported; this build reads version " +
                  std::to_string(kCheckpointVersion));
  }
  ckpt.config_digest = r.u64();
  const std::uint32_t section_count = r.u32();

  bool have[6] = {};
  for (std::uint32_t s = 0; s < section_count; ++s) {
    const std::uint32_t tag = r.u32();
    const std::uint64_t length = r.u64();
    const std::size_t section_end = r.pos() + length;
    TrainerSnapshot& t = ckpt.trainer;
    switch (tag) {
      case kSectionConfig:
        ckpt.config_text = r.str();
        break;
      case kSectionMeta:
        t.epoch = static_cast<int>(r.u32());
        t.stage = static_cast<int>(r.u32());
        t.stage_epoch = static_cast<int>(r.u32());
        t.env_steps = r.i64();
        t.status = static_cast<int>(r.u32());
        t.recent_evals = r.vec_f64();
        break;
      case kSectionAgent:
        t.actor_layers = r.vec_i32();
        t.critic_layers = r.vec_i32();
        t.actor_params = r.vec_f64();
        t.critic_params = r.vec_f64();
        t.target_actor_params = r.vec_f64();
        t.target_critic_params = r.vec_f64();
        t.actor_adam = read_adam(r);
        t.critic_adam = read_adam(r);
        t.obs_normalizer = read_normalizer(r);
        t.goal_normalizer = read_normalizer(r);
        break;
      case kSectionRng: {
        const std::uint64_t n = r.u64();
        if (n != 4) throw IoError("checkpoint RNG state has unexpected size");
        for (auto& word : t.rng_state) word = r.u64();
        break;
      }
      case kSectionBuffer: {
        t.buffer_capacity = r.u64();
        t.buffer_next = r.u64();
        t.buffer_total_stored = r.u64();
        const std::uint64_t count = r.u64();
        t.episodes.clear();
        t.episodes.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
          Episode ep;
          ep.observations = r.vec_f64();
          ep.actions = r.vec_f64();
          ep.achieved_goals = r.vec_f64();
          ep.desired_goals = r.vec_f64();
          ep.segment_ids = r.vec_i32();
          t.episodes.push_back(std::move(ep));
        }
        break;
      }
      default:
        throw IoError("checkpoint contains unknown section tag " +
                      std::to_string(tag));
    }
    if (tag <= 5) have[tag] = true;
    if (r.pos() != section_end) {
      throw IoError("checkpoint section " + std::to_string(tag) +
                    " has inconsistent length");
    }
  }
  for (std::uint32_t tag = 1; tag <= 5; ++tag) {
    if (!have[tag]) {
      throw IoError("checkpoint is missing section " + std::to_string(tag));
    }
  }
  return ckpt;
}

}  // namespace trajher
