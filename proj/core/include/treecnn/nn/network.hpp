#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "treecnn/common/random.hpp"
#include "treecnn/nn/spec.hpp"
#include "treecnn/nn/tensor.hpp"

namespace treecnn {

namespace detail {
template <typename T>
class Layer;
}

// Parameter gradients, indexed [layer][parameter]. Layers that received no
// update (frozen, or parameter-free) hold an empty vector.
template <typename T>
struct BasicGradients {
  std::vector<std::vector<BasicTensor<T>>> layers;
};

template <typename T>
struct BasicLossResult {
  double loss = 0.0;
  BasicGradients<T> grads;
};

// A trainable instance of a NetworkSpec. Weights are fan-in scaled uniform
// at construction (He-uniform), biases zero, batch-norm gamma=1, beta=0.
template <typename T>
class BasicNetwork {
 public:
  BasicNetwork(NetworkSpec spec, std::uint64_t seed);
  BasicNetwork(const BasicNetwork& other);
  BasicNetwork(BasicNetwork&&) noexcept;
  BasicNetwork& operator=(const BasicNetwork& other);
  BasicNetwork& operator=(BasicNetwork&&) noexcept;
  ~BasicNetwork();

  const NetworkSpec& spec() const noexcept { return spec_; }
  const Shape& input_shape() const noexcept { return spec_.input; }
  std::size_t outputs() const noexcept { return outputs_; }
  std::size_t layer_count() const noexcept { return spec_.layers.size(); }

  // Eval-mode forward of a batch [B, input...] to pre-softmax scores [B, N].
  // Dropout is the identity and batch-norm uses running statistics, so the
  // result is deterministic and the call is safe from concurrent threads.
  BasicTensor<T> forward(const BasicTensor<T>& batch) const;

  // Row-wise softmax of forward().
  BasicTensor<T> probabilities(const BasicTensor<T>& batch) const;

  // Train-mode forward and backward of the batch-mean softmax cross-entropy.
  // Gradients are produced for `trainable` layers only (all when null);
  // batch-norm layers outside the selection run on running statistics.
  // Running statistics of the selected batch-norm layers are updated.
  BasicLossResult<T> loss_and_gradients(const BasicTensor<T>& batch, std::span<const int> labels,
                                        Rng& rng, const std::vector<bool>* trainable = nullptr);

  std::vector<BasicTensor<T>>& parameters(std::size_t layer);
  const std::vector<BasicTensor<T>>& parameters(std::size_t layer) const;
  // Non-trainable state (batch-norm running mean and variance).
  std::vector<BasicTensor<T>>& buffers(std::size_t layer);
  const std::vector<BasicTensor<T>>& buffers(std::size_t layer) const;

  // True for multiplicative weights (conv kernel, FC matrix); false for biases
  // and batch-norm affine parameters.
  bool is_weight(std::size_t layer, std::size_t param) const;

  // Rebuilds the final fully-connected layer with source_rows.size() outputs.
  // Output i copies old row source_rows[i], or is freshly initialized from
  // `seed` when empty. Every other layer keeps its parameters.
  void resize_outputs(std::span<const std::optional<std::size_t>> source_rows,
                      std::uint64_t seed);

  std::uint64_t checksum() const;
  std::uint64_t checksum(const std::vector<bool>& layers) const;

 private:
  NetworkSpec spec_;
  std::size_t outputs_ = 0;
  std::size_t forward_layers_ = 0;  // excludes a terminal softmax
  std::vector<std::unique_ptr<detail::Layer<T>>> layers_;
};

using Network = BasicNetwork<float>;
using Gradients = BasicGradients<float>;
using LossResult = BasicLossResult<float>;

extern template class BasicNetwork<float>;
extern template class BasicNetwork<double>;

// Numerically stable softmax over each row of a [B, N] tensor.
template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& logits);

}  // namespace treecnn
