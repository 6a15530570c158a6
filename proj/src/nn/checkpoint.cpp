#include "herlase/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace herlase::nn {

namespace {

constexpr char kMagic[4] = {'H', 'L', 'S', 'E'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CorruptCheckpoint("checkpoint payload truncated");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::string arch_name(const std::string& prefix) { return prefix + "/arch"; }

double activation_code(Activation a) { return static_cast<double>(static_cast<int>(a)); }

Activation activation_from_code(double code) {
  const int c = static_cast<int>(code);
  if (c < 0 || c > static_cast<int>(Activation::sigmoid) || c != code) {
    throw CorruptCheckpoint("invalid activation code in checkpoint");
  }
  return static_cast<Activation>(c);
}

}  // namespace

void Checkpoint::put(std::string name, std::vector<std::uint64_t> dims, std::vector<double> payload) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  if (n != payload.size()) throw InvalidInput("checkpoint block '" + name + "': dims/payload mismatch");
  for (auto& b : blocks) {
    if (b.name == name) {
      b.dims = std::move(dims);
      b.payload = std::move(payload);
      return;
    }
  }
  blocks.push_back({std::move(name), std::move(dims), std::move(payload)});
}

void Checkpoint::put_matrix(const std::string& name, const Matrix& m) {
  put(name, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
      std::vector<double>(m.data(), m.data() + m.size()));
}

void Checkpoint::put_vector(const std::string& name, const Vector& v) {
  put(name, {static_cast<std::uint64_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size()));
}

void Checkpoint::put_mlp(const std::string& prefix, const Mlp& net) {
  std::vector<double> arch;
  arch.push_back(static_cast<double>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) arch.push_back(static_cast<double>(s));
  arch.push_back(activation_code(net.hidden_activation()));
  arch.push_back(activation_code(net.output_activation()));
  put(arch_name(prefix), {arch.size()}, arch);
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    put_matrix(prefix + "/w" + std::to_string(l), net.weights()[l]);
    put_vector(prefix + "/b" + std::to_string(l), net.biases()[l]);
  }
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

const ParameterBlock& Checkpoint::get(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw CheckpointError("checkpoint has no block named '" + name + "'");
}

Matrix Checkpoint::get_matrix(const std::string& name) const {
  const auto& b = get(name);
  if (b.dims.size() != 2) throw CorruptCheckpoint("block '" + name + "' is not rank 2");
  Matrix m(static_cast<Eigen::Index>(b.dims[0]), static_cast<Eigen::Index>(b.dims[1]));
  std::memcpy(m.data(), b.payload.data(), b.payload.size() * sizeof(double));
  return m;
}

Vector Checkpoint::get_vector(const std::string& name) const {
  const auto& b = get(name);
  if (b.dims.size() != 1) throw CorruptCheckpoint("block '" + name + "' is not rank 1");
  return Eigen::Map<const Vector>(b.payload.data(), static_cast<Eigen::Index>(b.payload.size()));
}

Mlp Checkpoint::get_mlp(const std::string& prefix) const {
  const auto& arch = get(arch_name(prefix)).payload;
  if (arch.empty()) throw CorruptCheckpoint("empty architecture block for '" + prefix + "'");
  const auto n = static_cast<std::size_t>(arch[0]);
  if (n < 2 || arch.size() != n + 3) throw CorruptCheckpoint("malformed architecture block for '" + prefix + "'");
  std::vector<int> sizes;
  for (std::size_t i = 0; i < n; ++i) sizes.push_back(static_cast<int>(arch[1 + i]));
  Mlp net(sizes, activation_from_code(arch[n + 1]), activation_from_code(arch[n + 2]));
  for (std::size_t l = 0; l + 1 < n; ++l) {
    Matrix w = get_matrix(prefix + "/w" + std::to_string(l));
    Vector b = get_vector(prefix + "/b" + std::to_string(l));
    if (w.rows() != net.weights()[l].rows() || w.cols() != net.weights()[l].cols() ||
        b.size() != net.biases()[l].size()) {
      throw CorruptCheckpoint("parameter shape mismatch for '" + prefix + "' layer " + std::to_string(l));
    }
    net.weights()[l] = std::move(w);
    net.biases()[l] = std::move(b);
  }
  return net;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(format_version);
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    w.u32(static_cast<std::uint32_t>(b.name.size()));
    w.bytes(b.name.data(), b.name.size());
    w.u32(static_cast<std::uint32_t>(b.dims.size()));
    for (auto d : b.dims) w.u64(d);
    for (double v : b.payload) w.f64(v);
  }
  return w.take();
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) throw CorruptCheckpoint("bad checkpoint magic");
  Checkpoint ckpt;
  ckpt.format_version = r.u32();
  if (ckpt.format_version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(ckpt.format_version) +
                                 " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    ParameterBlock b;
    b.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      b.dims.push_back(r.u64());
      n *= b.dims.back();
    }
    if (n > r.remaining() / 8) throw CorruptCheckpoint("checkpoint payload truncated");
    b.payload.resize(n);
    for (auto& v : b.payload) v = r.f64();
    ckpt.blocks.push_back(std::move(b));
  }
  if (r.remaining() != 0) throw CorruptCheckpoint("trailing bytes after checkpoint blocks");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = ckpt.serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Checkpoint::deserialize(bytes);
}

void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, Mlp>& nets) {
  Checkpoint ckpt;
  for (const auto& [name, net] : nets) ckpt.put_mlp(name, net);
  save_checkpoint(path, ckpt);
}

std::map<std::string, Mlp> load_mlps(const std::filesystem::path& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  std::map<std::string, Mlp> nets;
  const std::string suffix = "/arch";
  for (const auto& b : ckpt.blocks) {
    if (b.name.size() > suffix.size() && b.name.ends_with(suffix)) {
      const std::string prefix = b.name.substr(0, b.name.size() - suffix.size());
      nets.emplace(prefix, ckpt.get_mlp(prefix));
    }
  }
  return nets;
}

}  // namespace herlase::nn
