#include "treecnn/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace treecnn {

namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes, sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U)))
    throw FormatError("checkpoint: truncated file");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

void put_tensor(std::ostream& out, const Tensor& t) {
  put_le<std::uint64_t>(out, t.size());
  for (float v : t.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

void get_tensor(std::istream& in, Tensor& t, const std::string& layer) {
  const auto n = get_le<std::uint64_t>(in);
  if (n != t.size())
    throw FormatError("checkpoint: layer '" + layer + "' expects " + std::to_string(t.size()) +
                      " values, file has " + std::to_string(n));
  for (auto& v : t.values()) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
}

}  // namespace

void write_checkpoint(const Network& net, std::ostream& out) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, spec_hash(net.spec()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_count()));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& params = net.parameters(l);
    const auto& buffers = net.buffers(l);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size() + buffers.size()));
    for (const auto& t : params) put_tensor(out, t);
    for (const auto& t : buffers) put_tensor(out, t);
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(net, out);
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Network read_checkpoint(const NetworkSpec& spec, std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw FormatError("checkpoint: bad magic");
  if (const auto version = get_le<std::uint32_t>(in); version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  if (get_le<std::uint64_t>(in) != spec_hash(spec))
    throw FormatError("checkpoint: spec hash does not match the network spec");

  Network net(spec, 0);
  if (get_le<std::uint32_t>(in) != net.layer_count())
    throw FormatError("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& params = net.parameters(l);
    auto& buffers = net.buffers(l);
    if (get_le<std::uint32_t>(in) != params.size() + buffers.size())
      throw FormatError("checkpoint: tensor count mismatch in layer '" + spec.layers[l].name + "'");
    for (auto& t : params) get_tensor(in, t, spec.layers[l].name);
    for (auto& t : buffers) get_tensor(in, t, spec.layers[l].name);
  }
  return net;
}

Network load_checkpoint(const NetworkSpec& spec, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  return read_checkpoint(spec, in);
}

}  // namespace treecnn
