#pragma once

#include "herlase/nn/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace herlase::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class CorruptCheckpoint : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct ParameterBlock {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> payload;
};

/// Named parameter blocks, serialized as:
///   "HLSE" u32 version u32 block_count
///   per block: u32 name_len, name bytes, u32 rank, u64 dims[rank], f64 payload[prod(dims)]
/// All integers and floats little-endian.
struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  std::vector<ParameterBlock> blocks;

  void put(std::string name, std::vector<std::uint64_t> dims, std::vector<double> payload);
  void put_matrix(const std::string& name, const Matrix& m);
  void put_vector(const std::string& name, const Vector& v);
  void put_mlp(const std::string& prefix, const Mlp& net);

  bool contains(const std::string& name) const;
  const ParameterBlock& get(const std::string& name) const;
  Matrix get_matrix(const std::string& name) const;
  Vector get_vector(const std::string& name) const;
  Mlp get_mlp(const std::string& prefix) const;

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, Mlp>& nets);
std::map<std::string, Mlp> load_mlps(const std::filesystem::path& path);

}  // namespace herlase::nn
