#include "treecnn/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "layers.hpp"

namespace treecnn {

template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& logits) {
  BasicTensor<T> out(logits.shape());
  const std::size_t rows = logits.extent(0);
  const std::size_t n = logits.size() / std::max<std::size_t>(rows, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * n;
    const double zmax = *std::max_element(z, z + n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(static_cast<double>(z[j]) - zmax);
    for (std::size_t j = 0; j < n; ++j)
      out[r * n + j] = static_cast<T>(std::exp(static_cast<double>(z[j]) - zmax) / sum);
  }
  return out;
}

template <typename T>
BasicNetwork<T>::BasicNetwork(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  validate(spec_);
  outputs_ = spec_.outputs();
  const auto shapes = infer_shapes(spec_);
  forward_layers_ = spec_.layers.size();
  if (!spec_.layers.empty() && spec_.layers.back().kind == LayerKind::softmax) --forward_layers_;
  layers_.reserve(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const Shape& in = i == 0 ? spec_.input : shapes[i - 1];
    layers_.push_back(detail::make_layer<T>(spec_.layers[i], in, shapes[i], derive_seed(seed, "layer", i)));
  }
}

template <typename T>
BasicNetwork<T>::BasicNetwork(const BasicNetwork& other)
    : spec_(other.spec_), outputs_(other.outputs_), forward_layers_(other.forward_layers_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
BasicNetwork<T>::BasicNetwork(BasicNetwork&&) noexcept = default;

template <typename T>
BasicNetwork<T>& BasicNetwork<T>::operator=(const BasicNetwork& other) {
  if (this != &other) {
    BasicNetwork copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
BasicNetwork<T>& BasicNetwork<T>::operator=(BasicNetwork&&) noexcept = default;

template <typename T>
BasicNetwork<T>::~BasicNetwork() = default;

namespace {

template <typename T>
void check_batch(const BasicTensor<T>& batch, const Shape& input) {
  if (batch.rank() != input.size() + 1 || batch.extent(0) == 0 ||
      !std::equal(input.begin(), input.end(), batch.shape().begin() + 1)) {
    throw ShapeError("input", "batch shape " + shape_string(batch.shape()) +
                                  " does not match network input [B]" + shape_string(input));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> BasicNetwork<T>::forward(const BasicTensor<T>& batch) const {
  check_batch(batch, spec_.input);
  BasicTensor<T> a = batch, b;
  detail::Scratch<T> scratch;
  Rng unused(0);
  for (std::size_t i = 0; i < forward_layers_; ++i) {
    layers_[i]->forward(a, b, scratch, false, unused);
    std::swap(a, b);
  }
  return a;
}

template <typename T>
BasicTensor<T> BasicNetwork<T>::probabilities(const BasicTensor<T>& batch) const {
  return softmax_rows(forward(batch));
}

template <typename T>
BasicLossResult<T> BasicNetwork<T>::loss_and_gradients(const BasicTensor<T>& batch,
                                                       std::span<const int> labels, Rng& rng,
                                                       const std::vector<bool>* trainable) {
  check_batch(batch, spec_.input);
  const std::size_t count = batch.extent(0);
  if (labels.size() != count)
    throw Error("label count " + std::to_string(labels.size()) + " does not match batch " +
                std::to_string(count));
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= outputs_)
      throw Error("label " + std::to_string(label) + " out of range [0," + std::to_string(outputs_) + ")");
  }
  if (trainable && trainable->size() != layers_.size())
    throw Error("trainable selection has the wrong length");

  auto selected = [&](std::size_t i) { return !trainable || (*trainable)[i]; };

  // Backward stops at the earliest selected layer that owns parameters.
  std::size_t first = forward_layers_;
  for (std::size_t i = 0; i < forward_layers_; ++i) {
    if (selected(i) && !layers_[i]->params.empty()) {
      first = i;
      break;
    }
  }

  std::vector<BasicTensor<T>> acts(forward_layers_ + 1);
  std::vector<detail::Scratch<T>> scratch(forward_layers_);
  acts[0] = batch;
  for (std::size_t i = 0; i < forward_layers_; ++i) {
    const bool train = spec_.layers[i].kind != LayerKind::batch_norm || selected(i);
    layers_[i]->forward(acts[i], acts[i + 1], scratch[i], train, rng);
  }

  const BasicTensor<T>& logits = acts[forward_layers_];
  const std::size_t n = outputs_;
  BasicTensor<T> dlogits(logits.shape());
  double loss = 0.0;
  for (std::size_t b = 0; b < count; ++b) {
    const T* z = logits.data() + b * n;
    const double zmax = *std::max_element(z, z + n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(static_cast<double>(z[j]) - zmax);
    const double log_sum = std::log(sum) + zmax;
    loss += log_sum - z[labels[b]];
    for (std::size_t j = 0; j < n; ++j) {
      const double p = std::exp(static_cast<double>(z[j]) - log_sum);
      const double target = static_cast<std::size_t>(labels[b]) == j ? 1.0 : 0.0;
      dlogits[b * n + j] = static_cast<T>((p - target) / static_cast<double>(count));
    }
  }
  loss /= static_cast<double>(count);

  BasicLossResult<T> result;
  result.loss = loss;
  result.grads.layers.resize(layers_.size());
  BasicTensor<T> dcur = std::move(dlogits), dnext;
  for (std::size_t i = forward_layers_; i-- > first;) {
    const bool param_grads = selected(i) && !layers_[i]->params.empty();
    auto& g = result.grads.layers[i];
    if (param_grads) {
      for (const auto& p : layers_[i]->params) g.emplace_back(p.shape());
    }
    layers_[i]->backward(acts[i], acts[i + 1], dcur, i > first ? &dnext : nullptr, scratch[i],
                         param_grads, g);
    if (i > first) std::swap(dcur, dnext);
  }
  for (std::size_t i = 0; i < forward_layers_; ++i) {
    if (selected(i)) layers_[i]->commit(scratch[i]);
  }
  return result;
}

template <typename T>
std::vector<BasicTensor<T>>& BasicNetwork<T>::parameters(std::size_t layer) {
  return layers_.at(layer)->params;
}

template <typename T>
const std::vector<BasicTensor<T>>& BasicNetwork<T>::parameters(std::size_t layer) const {
  return layers_.at(layer)->params;
}

template <typename T>
std::vector<BasicTensor<T>>& BasicNetwork<T>::buffers(std::size_t layer) {
  return layers_.at(layer)->buffers;
}

template <typename T>
const std::vector<BasicTensor<T>>& BasicNetwork<T>::buffers(std::size_t layer) const {
  return layers_.at(layer)->buffers;
}

template <typename T>
bool BasicNetwork<T>::is_weight(std::size_t layer, std::size_t param) const {
  const auto kind = spec_.layers.at(layer).kind;
  return param == 0 && (kind == LayerKind::conv || kind == LayerKind::fully_connected);
}

template <typename T>
void BasicNetwork<T>::resize_outputs(std::span<const std::optional<std::size_t>> source_rows,
                                     std::uint64_t seed) {
  std::size_t last_fc = spec_.layers.size();
  for (std::size_t i = 0; i < spec_.layers.size(); ++i)
    if (spec_.layers[i].kind == LayerKind::fully_connected) last_fc = i;
  for (std::size_t i = last_fc + 1; i < spec_.layers.size(); ++i)
    if (spec_.layers[i].trainable())
      throw ConfigError("layers", "cannot resize outputs: trainable layer after the final classifier");
  if (source_rows.empty()) throw ConfigError("outputs", "a classifier needs at least one output");

  BasicNetwork resized(with_outputs(spec_, source_rows.size()), seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i == last_fc) continue;
    resized.layers_[i]->params = layers_[i]->params;
    resized.layers_[i]->buffers = layers_[i]->buffers;
  }

  const auto& old_params = layers_[last_fc]->params;
  auto& new_params = resized.layers_[last_fc]->params;
  const std::size_t fan_in = old_params[0].extent(1);
  for (std::size_t r = 0; r < source_rows.size(); ++r) {
    T* w_row = new_params[0].data() + r * fan_in;
    if (const auto src = source_rows[r]) {
      if (*src >= outputs_) throw ConfigError("outputs", "source row out of range");
      std::copy_n(old_params[0].data() + *src * fan_in, fan_in, w_row);
      if (new_params.size() > 1) new_params[1][r] = old_params[1][*src];
    } else {
      Rng rng(derive_seed(seed, "output-row", r));
      detail::fan_in_uniform<T>(std::span<T>(w_row, fan_in), fan_in, rng);
      if (new_params.size() > 1) new_params[1][r] = T{0};
    }
  }
  *this = std::move(resized);
}

template <typename T>
std::uint64_t BasicNetwork<T>::checksum() const {
  return checksum(std::vector<bool>(layers_.size(), true));
}

template <typename T>
std::uint64_t BasicNetwork<T>::checksum(const std::vector<bool>& layers) const {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < layers_.size() && i < layers.size(); ++i) {
    if (!layers[i]) continue;
    for (const auto& p : layers_[i]->params) h = p.checksum(h);
    for (const auto& b : layers_[i]->buffers) h = b.checksum(h);
  }
  return h;
}

template class BasicNetwork<float>;
template class BasicNetwork<double>;
template BasicTensor<float> softmax_rows<float>(const BasicTensor<float>&);
template BasicTensor<double> softmax_rows<double>(const BasicTensor<double>&);

}  // namespace treecnn
