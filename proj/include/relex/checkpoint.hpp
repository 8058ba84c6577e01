#pragma once

// Checkpoint container layout (all integers little-endian):
//
//   bytes 0..7    magic "RELEXCK1"
//   bytes 8..15   u64 header length H
//   next H bytes  UTF-8 JSON header
//   remainder     payload: float64 little-endian values, each tensor row-major
//
// Header fields: "format" ("relex-checkpoint"), "version" (1), "kind"
// ("model" or "encoder-weights"), "config" (model config object), "vocab_hash"
// (16 hex digits), "step", "seed", and "tensors": a list of
// {"name", "rows", "cols", "offset"} where offset counts bytes from the start
// of the payload.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "relex/autograd.hpp"
#include "relex/model.hpp"

namespace relex {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'R', 'E', 'L', 'E', 'X', 'C', 'K', '1'};

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

/// In-memory form of a checkpoint file.
struct TensorFile {
  nlohmann::json header = nlohmann::json::object();
  std::map<std::string, ag::Matrix> tensors;
  std::vector<std::string> order;  // tensor write order

  void put(const std::string& name, const ag::Matrix& m) {
    if (!tensors.contains(name)) order.push_back(name);
    tensors[name] = m;
  }

  const ag::Matrix& at(const std::string& name) const {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointError("checkpoint is missing tensor '" + name + "'");
    return it->second;
  }
};

inline void write_tensor_file(const std::string& path, const TensorFile& file) {
  nlohmann::json header = file.header;
  header["format"] = "relex-checkpoint";
  header["version"] = 1;
  nlohmann::json dir = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& name : file.order) {
    const auto& m = file.tensors.at(name);
    dir.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  }
  header["tensors"] = dir;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& name : file.order) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = file.tensors.at(name);
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("failed writing checkpoint '" + path + "'");
}

inline TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw CheckpointError("'" + path + "' is not a relex checkpoint");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("truncated checkpoint header in '" + path + "'");

  TensorFile file;
  try {
    file.header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupt checkpoint header in '" + path + "': " + e.what());
  }
  if (file.header.value("format", "") != "relex-checkpoint" || file.header.value("version", 0) != 1)
    throw CheckpointError("unsupported checkpoint format in '" + path + "'");

  const auto payload_start = in.tellg();
  for (const auto& entry : file.header.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!in) throw CheckpointError("truncated tensor '" + name + "' in '" + path + "'");
    file.order.push_back(name);
    file.tensors[name] = rm;
  }
  return file;
}

struct CheckpointInfo {
  std::uint64_t vocab_hash = 0;
  long step = 0;
  std::uint64_t seed = 0;
};

inline void save_checkpoint(const std::string& path, const RelationModel& model, const CheckpointInfo& info) {
  TensorFile file;
  file.header["kind"] = "model";
  file.header["config"] = model.config();
  file.header["vocab_size"] = model.vocab_size();
  file.header["vocab_hash"] = hash_hex(info.vocab_hash);
  file.header["step"] = info.step;
  file.header["seed"] = info.seed;
  for (const auto& p : model.parameters()) file.put(p->name, p->value);
  write_tensor_file(path, file);
}

/// Copies every parameter of `model` from `file`, checking shapes.
inline void load_parameters(RelationModel& model, const TensorFile& file) {
  for (const auto& p : model.parameters()) {
    const auto& m = file.at(p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw CheckpointError("tensor '" + p->name + "' has shape " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + " but the model expects " + std::to_string(p->value.rows()) +
                            "x" + std::to_string(p->value.cols()));
    p->value = m;
  }
}

struct LoadedCheckpoint {
  RelationModel model;
  CheckpointInfo info;
};

/// Rebuilds the model recorded in a checkpoint. Refuses a checkpoint trained
/// against a different vocabulary.
inline LoadedCheckpoint load_checkpoint(const std::string& path, std::uint64_t expected_vocab_hash) {
  const TensorFile file = read_tensor_file(path);
  if (file.header.value("kind", "") != "model") throw CheckpointError("'" + path + "' is not a model checkpoint");
  const auto recorded = file.header.at("vocab_hash").get<std::string>();
  if (recorded != hash_hex(expected_vocab_hash))
    throw CheckpointError("vocabulary hash mismatch: checkpoint has " + recorded + ", vocabulary is " +
                          hash_hex(expected_vocab_hash));
  ModelConfig cfg = file.header.at("config").get<ModelConfig>();
  Random rng(0);
  RelationModel model(cfg, file.header.at("vocab_size").get<int>(), rng);
  load_parameters(model, file);
  CheckpointInfo info;
  info.vocab_hash = expected_vocab_hash;
  info.step = file.header.value("step", 0L);
  info.seed = file.header.value("seed", std::uint64_t{0});
  return {std::move(model), info};
}

/// Reads the encoder config recorded in an "encoder-weights" file.
inline EncoderConfig read_encoder_weights_config(const std::string& path) {
  const TensorFile file = read_tensor_file(path);
  if (file.header.value("kind", "") != "encoder-weights")
    throw CheckpointError("'" + path + "' is not an encoder-weights file");
  EncoderConfig cfg = file.header.at("config").get<EncoderConfig>();
  cfg.variant = EncoderVariant::PretrainedTransformer;
  cfg.weights_path = path;
  return cfg;
}

/// Loads pretrained encoder weights ("encoder.*" tensors). A word embedding
/// table with fewer rows than the vocabulary (reserved markers appended after
/// conversion) fills the leading rows and keeps the initialization elsewhere.
inline void load_encoder_weights(RelationModel& model, const std::string& path) {
  const TensorFile file = read_tensor_file(path);
  if (file.header.value("kind", "") != "encoder-weights")
    throw CheckpointError("'" + path + "' is not an encoder-weights file");
  for (const auto& p : model.parameters()) {
    if (p->name.rfind("encoder.", 0) != 0) continue;
    const auto& m = file.at(p->name);
    const bool word_table = p->name == "encoder.embeddings.word";
    const bool fits = m.cols() == p->value.cols() &&
                      (m.rows() == p->value.rows() || (word_table && m.rows() < p->value.rows()));
    if (!fits)
      throw CheckpointError("tensor '" + p->name + "' has shape " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + " but the encoder config expects " +
                            std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    p->value.topRows(m.rows()) = m;
  }
}

}  // namespace relex
