#pragma once

#include <filesystem>
#include <iosfwd>

#include "treecnn/nn/network.hpp"

namespace treecnn {

// Binary weight checkpoint:
//   "TCNNCKPT" | u32 version | u64 spec hash | u32 layer count |
//   per layer: u32 tensor count, then per tensor u64 element count followed by
//   that many IEEE-754 binary32 values. All integers and floats little-endian.
// Tensors per layer are the parameters followed by the buffers.
inline constexpr char kCheckpointMagic[8] = {'T', 'C', 'N', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const Network& net, std::ostream& out);
void save_checkpoint(const Network& net, const std::filesystem::path& path);

// Restores weights into a network built from `spec`. Throws FormatError when
// the header, spec hash, or tensor sizes do not match.
Network read_checkpoint(const NetworkSpec& spec, std::istream& in);
Network load_checkpoint(const NetworkSpec& spec, const std::filesystem::path& path);

}  // namespace treecnn
