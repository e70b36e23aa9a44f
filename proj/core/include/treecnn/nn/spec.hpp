#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treecnn/nn/tensor.hpp"

namespace treecnn {

enum class LayerKind {
  conv,
  max_pool,
  avg_pool,
  fully_connected,
  relu,
  dropout,
  batch_norm,
  softmax,
};

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view text);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;   // unique within a network
  std::string block;  // group tag such as "CONV-2" or "FC"; may be empty

  std::size_t out_channels = 0;  // conv
  std::size_t kernel = 0;        // conv, odd, same padding
  std::size_t stride = 1;        // conv
  std::size_t window = 2;        // pooling; stride equals window
  std::size_t out_features = 0;  // fully_connected
  double dropout = 0.0;          // dropout probability in [0, 1)
  bool bias = true;              // conv / fully_connected

  bool trainable() const noexcept {
    return kind == LayerKind::conv || kind == LayerKind::fully_connected ||
           kind == LayerKind::batch_norm;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

LayerSpec conv_layer(std::string name, std::string block, std::size_t out_channels,
                     std::size_t kernel);
LayerSpec fc_layer(std::string name, std::string block, std::size_t out_features);
LayerSpec max_pool_layer(std::string name, std::string block, std::size_t window = 2);
LayerSpec avg_pool_layer(std::string name, std::string block, std::size_t window = 2);
LayerSpec relu_layer(std::string name, std::string block);
LayerSpec dropout_layer(std::string name, std::string block, double p);
LayerSpec batch_norm_layer(std::string name, std::string block);
LayerSpec softmax_layer(std::string name = "softmax");

// Layer-by-layer description of one classifier. `input` is the per-sample
// shape, {C, H, W} for images or {F} for flat features.
struct NetworkSpec {
  Shape input;
  std::vector<LayerSpec> layers;

  // Output count of the last fully-connected layer (the class count N).
  std::size_t outputs() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Per-sample output shape after each layer. Throws ShapeError naming the
// first layer whose parameters do not chain with its input.
std::vector<Shape> infer_shapes(const NetworkSpec& spec);

// Full structural validation (names, dropout range, softmax placement, shape
// chaining). Throws on the first problem.
void validate(const NetworkSpec& spec);

// Copy of `spec` with the final fully-connected layer widened/narrowed to `n`.
NetworkSpec with_outputs(NetworkSpec spec, std::size_t n);

// Divides every hidden channel/neuron count by `factor` (floor 1). The final
// classifier width and the FC input sizes follow from shape inference.
NetworkSpec shrink(NetworkSpec spec, std::size_t factor);

// Multiplicative weights only (conv kernels and FC matrices); biases and
// batch-norm parameters are excluded. `subset` entries match layer names or
// block tags; an entry matching nothing throws ConfigError.
std::uint64_t count_weights(const NetworkSpec& spec,
                            std::optional<std::span<const std::string>> subset = std::nullopt);

// Per-layer membership for `subset` (same matching rule as count_weights).
std::vector<bool> select_layers(const NetworkSpec& spec, std::span<const std::string> subset);

// Block tags of convolution layers in network order, deduplicated.
std::vector<std::string> conv_blocks(const NetworkSpec& spec);

// Human-readable structured text (JSON). Round-trips exactly.
std::string to_text(const NetworkSpec& spec);
NetworkSpec spec_from_text(std::string_view text);

std::uint64_t spec_hash(const NetworkSpec& spec);

}  // namespace treecnn
