#include "treecnn/nn/optimizer.hpp"

#include <cmath>
#include <numeric>

#include "treecnn/data/augment.hpp"

namespace treecnn {

void validate(const TrainingSchedule& s) {
  if (s.batch_size == 0) throw ConfigError("training.batch_size", "must be positive");
  if (!(s.learning_rate > 0)) throw ConfigError("training.learning_rate", "must be positive");
  if (!(s.lr_decay_factor > 0)) throw ConfigError("training.lr_decay_factor", "must be positive");
  if (!(s.momentum >= 0 && s.momentum < 1)) throw ConfigError("training.momentum", "must be in [0,1)");
  if (!(s.weight_decay >= 0)) throw ConfigError("training.weight_decay", "must be non-negative");
  if (!(s.flip_probability >= 0 && s.flip_probability <= 1))
    throw ConfigError("training.flip_probability", "must be in [0,1]");
}

double learning_rate_at(const TrainingSchedule& s, std::size_t epoch) {
  if (epoch < s.lr_decay_start) return s.learning_rate;
  const std::size_t drops =
      1 + (s.lr_decay_interval ? (epoch - s.lr_decay_start) / s.lr_decay_interval : 0);
  return s.learning_rate * std::pow(s.lr_decay_factor, static_cast<double>(drops));
}

template <typename T>
void BasicSgd<T>::step(BasicNetwork<T>& net, const BasicGradients<T>& grads,
                       const TrainingSchedule& schedule, std::size_t epoch) {
  if (velocity_.size() != net.layer_count()) velocity_.assign(net.layer_count(), {});
  const double lr = learning_rate_at(schedule, epoch);
  const double mu = schedule.momentum;
  for (std::size_t l = 0; l < net.layer_count() && l < grads.layers.size(); ++l) {
    const auto& g = grads.layers[l];
    if (g.empty()) continue;
    auto& params = net.parameters(l);
    auto& vel = velocity_[l];
    if (vel.size() != params.size()) {
      vel.clear();
      for (const auto& p : params) vel.emplace_back(p.shape());
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
      if (g[p].shape() != params[p].shape())
        throw ShapeError(net.spec().layers[l].name, "gradient shape does not match weights");
      const double decay = net.is_weight(l, p) ? schedule.weight_decay : 0.0;
      auto w = params[p].values();
      auto v = vel[p].values();
      auto d = g[p].values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = static_cast<T>(mu * v[i] - lr * (d[i] + decay * w[i]));
        w[i] += v[i];
      }
    }
  }
}

template class BasicSgd<float>;
template class BasicSgd<double>;

TrainResult train_network(Network& net, const FeatureSet& data, const TrainingSchedule& schedule,
                          const std::vector<bool>* trainable) {
  validate(schedule);
  if (data.empty()) throw Error("train_network: empty dataset");
  if (data.sample_shape != net.input_shape())
    throw ShapeError("input", "dataset samples " + shape_string(data.sample_shape) +
                                  " do not match network input " + shape_string(net.input_shape()));
  for (auto label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= net.outputs())
      throw Error("train_network: label " + std::to_string(label) + " outside [0," +
                  std::to_string(net.outputs()) + ")");
  }

  TrainResult result;
  if (schedule.epochs == 0) return result;

  Rng rng(schedule.seed);
  Sgd sgd;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> labels;
  const bool images = data.sample_shape.size() == 3;

  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), start + schedule.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Tensor batch = make_batch(data, idx);
      if (images && schedule.flip_probability > 0) augment_flip(batch, schedule.flip_probability, rng);
      labels.assign(idx.size(), 0);
      for (std::size_t b = 0; b < idx.size(); ++b) labels[b] = data.labels[idx[b]];
      auto step = net.loss_and_gradients(batch, labels, rng, trainable);
      if (!std::isfinite(step.loss)) throw Error("train_network: loss diverged (non-finite)");
      sgd.step(net, step.grads, schedule, epoch);
      loss_sum += step.loss * static_cast<double>(idx.size());
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
  }
  result.samples_seen = data.size();
  return result;
}

}  // namespace treecnn
