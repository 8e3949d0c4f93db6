#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "texspect/model.hpp"

namespace texspect {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

struct CheckpointManifest {
  int version = kCheckpointVersion;
  int scales = 0;
  double scale_factor = 0.75;
  int min_dim = 24;
  int img_channels = 1;
  int gen_width = 32;
  int disc_width = 32;
  int branch_width = 8;
  std::string texture_module = "full";
  uint64_t seed = 0;
  std::vector<std::pair<int, int>> level_sizes;  // finest first
  std::vector<double> sigmas;
  std::vector<std::string> scale_files;
  std::string zstar_file;
  std::map<std::string, std::string> hashes;
};

namespace detail {

inline uint64_t fnv1a64(const std::vector<char>& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (char c : bytes) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(const std::vector<char>& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

inline std::vector<char> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot read " + p.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// write-temp-then-rename so a crash never leaves a torn file
inline void write_file_atomic(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::filesystem::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("checkpoint: cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, p);
}

inline void append_params(std::vector<char>& bytes, const std::vector<Param*>& params) {
  for (const Param* p : params) {
    const char* raw = reinterpret_cast<const char*>(p->w.data());
    bytes.insert(bytes.end(), raw, raw + p->w.size() * sizeof(double));
  }
}

inline size_t restore_params(const std::vector<char>& bytes, size_t offset,
                             const std::vector<Param*>& params, const std::string& file) {
  for (Param* p : params) {
    const size_t need = p->w.size() * sizeof(double);
    if (offset + need > bytes.size())
      throw CheckpointError("checkpoint: truncated parameter file " + file);
    std::memcpy(p->w.data(), bytes.data() + offset, need);
    offset += need;
  }
  return offset;
}

}  // namespace detail

inline void save_checkpoint(ModelStack& stack, const CheckpointManifest& meta,
                            const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  CheckpointManifest m = meta;
  m.version = kCheckpointVersion;
  m.scales = stack.depth();
  m.scale_factor = stack.scale_factor;
  m.min_dim = stack.min_dim;
  m.img_channels = stack.img_channels;
  m.level_sizes.clear();
  m.sigmas.clear();
  m.scale_files.clear();
  m.hashes.clear();

  for (int n = 0; n < stack.depth(); ++n) {
    ScaleModel& sm = stack.models[n];
    m.level_sizes.emplace_back(sm.level_h, sm.level_w);
    m.sigmas.push_back(sm.sigma);
    std::vector<char> bytes;
    detail::append_params(bytes, sm.generator.params());
    detail::append_params(bytes, sm.discriminator.all_params());
    const std::string name = "scale_" + std::to_string(n) + ".bin";
    detail::write_file_atomic(fs::path(dir) / name, bytes);
    m.scale_files.push_back(name);
    m.hashes[name] = detail::hash_hex(bytes);
  }

  {
    std::vector<char> bytes;
    const char* raw = reinterpret_cast<const char*>(stack.zstar.v.data());
    bytes.assign(raw, raw + stack.zstar.v.size() * sizeof(double));
    m.zstar_file = "zstar.bin";
    detail::write_file_atomic(fs::path(dir) / m.zstar_file, bytes);
    m.hashes[m.zstar_file] = detail::hash_hex(bytes);
  }

  nlohmann::json j;
  j["format_version"] = m.version;
  j["scales"] = m.scales;
  j["scale_factor"] = m.scale_factor;
  j["min_dim"] = m.min_dim;
  j["img_channels"] = m.img_channels;
  j["gen_width"] = m.gen_width;
  j["disc_width"] = m.disc_width;
  j["branch_width"] = m.branch_width;
  j["texture_module"] = m.texture_module;
  j["seed"] = m.seed;
  j["level_sizes"] = m.level_sizes;
  j["sigmas"] = m.sigmas;
  j["scale_files"] = m.scale_files;
  j["zstar_file"] = m.zstar_file;
  j["hashes"] = m.hashes;
  const std::string text = j.dump(2) + "\n";
  detail::write_file_atomic(fs::path(dir) / "manifest.json",
                            std::vector<char>(text.begin(), text.end()));
}

inline ModelStack load_checkpoint(const std::string& dir, CheckpointManifest* out_meta = nullptr) {
  namespace fs = std::filesystem;
  const fs::path mpath = fs::path(dir) / "manifest.json";
  std::ifstream in(mpath);
  if (!in) throw CheckpointError("checkpoint: missing manifest " + mpath.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint: malformed manifest: " + std::string(e.what()));
  }

  CheckpointManifest m;
  m.version = j.at("format_version").get<int>();
  if (m.version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(m.version));
  m.scales = j.at("scales").get<int>();
  m.scale_factor = j.at("scale_factor").get<double>();
  m.min_dim = j.at("min_dim").get<int>();
  m.img_channels = j.at("img_channels").get<int>();
  m.gen_width = j.at("gen_width").get<int>();
  m.disc_width = j.at("disc_width").get<int>();
  m.branch_width = j.at("branch_width").get<int>();
  m.texture_module = j.at("texture_module").get<std::string>();
  m.seed = j.at("seed").get<uint64_t>();
  m.level_sizes = j.at("level_sizes").get<std::vector<std::pair<int, int>>>();
  m.sigmas = j.at("sigmas").get<std::vector<double>>();
  m.scale_files = j.at("scale_files").get<std::vector<std::string>>();
  m.zstar_file = j.at("zstar_file").get<std::string>();
  m.hashes = j.at("hashes").get<std::map<std::string, std::string>>();

  if (static_cast<int>(m.level_sizes.size()) != m.scales ||
      static_cast<int>(m.scale_files.size()) != m.scales ||
      static_cast<int>(m.sigmas.size()) != m.scales)
    throw CheckpointError("checkpoint: manifest scale counts disagree");
  for (int n = 0; n < m.scales; ++n) {
    const double f = std::pow(m.scale_factor, n);
    if (m.level_sizes[n].first != std::lround(m.level_sizes[0].first * f) ||
        m.level_sizes[n].second != std::lround(m.level_sizes[0].second * f))
      throw CheckpointError("checkpoint: level sizes inconsistent with scale factor");
  }

  ModelStack stack;
  stack.scale_factor = m.scale_factor;
  stack.min_dim = m.min_dim;
  stack.img_channels = m.img_channels;
  const TextureModule mode = texture_module_from_string(m.texture_module);
  for (int n = 0; n < m.scales; ++n) {
    ScaleModel sm;
    sm.index = n;
    sm.level_h = m.level_sizes[n].first;
    sm.level_w = m.level_sizes[n].second;
    sm.sigma = m.sigmas[n];
    sm.generator = GeneratorNet(m.img_channels, m.gen_width);
    sm.discriminator = DiscriminatorNet(m.img_channels, mode, m.disc_width, m.branch_width);
    stack.models.push_back(std::move(sm));
  }

  for (int n = 0; n < m.scales; ++n) {
    const fs::path p = fs::path(dir) / m.scale_files[n];
    std::vector<char> bytes = detail::read_file(p);
    auto it = m.hashes.find(m.scale_files[n]);
    if (it == m.hashes.end() || it->second != detail::hash_hex(bytes))
      throw CheckpointError("checkpoint: hash verification failed for " + m.scale_files[n]);
    size_t off = detail::restore_params(bytes, 0, stack.models[n].generator.params(),
                                        m.scale_files[n]);
    off = detail::restore_params(bytes, off, stack.models[n].discriminator.all_params(),
                                 m.scale_files[n]);
    if (off != bytes.size())
      throw CheckpointError("checkpoint: trailing bytes in " + m.scale_files[n]);
  }

  {
    const fs::path p = fs::path(dir) / m.zstar_file;
    std::vector<char> bytes = detail::read_file(p);
    auto it = m.hashes.find(m.zstar_file);
    if (it == m.hashes.end() || it->second != detail::hash_hex(bytes))
      throw CheckpointError("checkpoint: hash verification failed for " + m.zstar_file);
    const ScaleModel& top = stack.models.back();
    Tensor z(m.img_channels, top.level_h, top.level_w);
    if (bytes.size() != z.v.size() * sizeof(double))
      throw CheckpointError("checkpoint: z* size mismatch");
    std::memcpy(z.v.data(), bytes.data(), bytes.size());
    stack.zstar = std::move(z);
  }

  if (out_meta) *out_meta = m;
  return stack;
}

}  // namespace texspect
