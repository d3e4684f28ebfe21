#include <array>
#include <bit>
#include <fstream>

#include "learn2mix/errors.hpp"
#include "learn2mix/nn.hpp"

namespace l2m {

namespace {

constexpr std::array<char, 8> kMagic{'L', '2', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw Error("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto& net = ckpt.net;
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.loss));
  put_u32(out, static_cast<std::uint32_t>(net.num_layers()));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    put_u64(out, net.widths()[l]);
    put_u64(out, net.widths()[l + 1]);
    put_u32(out, static_cast<std::uint32_t>(net.activations()[l]));
  }
  put_u64(out, net.parameter_count());
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(net.parameters()[i]));
  if (!out) throw Error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw Error(path.string() + " is not a checkpoint");
  if (const auto version = get_u32(in); version != kVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto loss = get_u32(in);
  if (loss > static_cast<std::uint32_t>(LossCode::focal)) throw Error("unknown loss code in checkpoint");
  const auto layers = get_u32(in);
  if (layers == 0) throw Error("checkpoint has no layers");
  std::vector<std::size_t> widths;
  std::vector<Activation> acts;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto in_dim = get_u64(in);
    const auto out_dim = get_u64(in);
    const auto act = get_u32(in);
    if (act > static_cast<std::uint32_t>(Activation::softmax)) throw Error("unknown activation in checkpoint");
    if (l == 0) {
      widths.push_back(in_dim);
    } else if (widths.back() != in_dim) {
      throw DimensionMismatch("checkpoint layer shapes do not chain");
    }
    widths.push_back(out_dim);
    acts.push_back(static_cast<Activation>(act));
  }
  Checkpoint ckpt{DenseNet(std::move(widths), std::move(acts)), static_cast<LossCode>(loss)};
  if (get_u64(in) != ckpt.net.parameter_count()) throw DimensionMismatch("checkpoint parameter count mismatch");
  for (Eigen::Index i = 0; i < ckpt.net.parameters().size(); ++i) {
    ckpt.net.parameters()[i] = std::bit_cast<double>(get_u64(in));
  }
  return ckpt;
}

}  // namespace l2m
