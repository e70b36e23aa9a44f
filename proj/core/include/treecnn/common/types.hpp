#pragma once

#include <cstdint>
#include <limits>

namespace treecnn {

// Dataset class label id (CIFAR fine label, IDX label, ...).
using ClassLabel = int;

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

}  // namespace treecnn
