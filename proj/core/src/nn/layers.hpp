#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "treecnn/common/random.hpp"
#include "treecnn/nn/spec.hpp"
#include "treecnn/nn/tensor.hpp"

namespace treecnn::detail {

// Per-call state a layer keeps between forward and backward. Owned by the
// caller so that forward() can stay const.
template <typename T>
struct Scratch {
  std::vector<T> values;
  std::vector<double> stats;
  std::vector<std::uint32_t> indices;
  bool batch_stats = false;
};

template <typename T>
class Layer {
 public:
  Layer(LayerSpec spec, Shape in, Shape out)
      : spec_(std::move(spec)), in_(std::move(in)), out_(std::move(out)) {}
  virtual ~Layer() = default;

  virtual std::unique_ptr<Layer> clone() const = 0;

  // `train` selects train-mode behaviour (dropout masks, batch statistics).
  virtual void forward(const BasicTensor<T>& in, BasicTensor<T>& out, Scratch<T>& scratch,
                       bool train, Rng& rng) const = 0;

  // Accumulates parameter gradients into `grads` when `param_grads` is set and
  // writes the input gradient when `din` is non-null.
  virtual void backward(const BasicTensor<T>& in, const BasicTensor<T>& out,
                        const BasicTensor<T>& dout, BasicTensor<T>* din,
                        const Scratch<T>& scratch, bool param_grads,
                        std::vector<BasicTensor<T>>& grads) const = 0;

  virtual void commit(const Scratch<T>&) {}

  const LayerSpec& spec() const noexcept { return spec_; }
  const Shape& input_shape() const noexcept { return in_; }
  const Shape& output_shape() const noexcept { return out_; }

  std::vector<BasicTensor<T>> params;
  std::vector<BasicTensor<T>> buffers;

 protected:
  Shape batch_shape(std::size_t batch) const {
    Shape s{batch};
    s.insert(s.end(), out_.begin(), out_.end());
    return s;
  }

  LayerSpec spec_;
  Shape in_;
  Shape out_;
};

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in, const Shape& out,
                                     std::uint64_t seed);

// Fan-in scaled uniform fill: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
template <typename T>
void fan_in_uniform(std::span<T> values, std::size_t fan_in, Rng& rng);

}  // namespace treecnn::detail
