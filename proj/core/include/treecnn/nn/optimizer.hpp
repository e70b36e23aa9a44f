#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "treecnn/data/feature_set.hpp"
#include "treecnn/nn/network.hpp"

namespace treecnn {

// Mini-batch SGD with momentum. Defaults follow the reference protocol: lr 0.1
// for 200 epochs, then /10 every 50 epochs, momentum 0.9, decay 1e-3,
// random horizontal flips with p=0.5, 300 epochs.
struct TrainingSchedule {
  std::size_t epochs = 300;
  std::size_t batch_size = 128;
  double learning_rate = 0.1;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_start = 200;
  std::size_t lr_decay_interval = 50;  // 0: a single drop at lr_decay_start
  double momentum = 0.9;
  double weight_decay = 0.001;
  double flip_probability = 0.5;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainingSchedule&, const TrainingSchedule&) = default;
};

void validate(const TrainingSchedule& schedule);

double learning_rate_at(const TrainingSchedule& schedule, std::size_t epoch);

// v <- momentum*v - lr*(g + decay*w); w <- w + v. Decay applies to
// multiplicative weights only. Layers without gradients are left untouched.
template <typename T>
class BasicSgd {
 public:
  void step(BasicNetwork<T>& net, const BasicGradients<T>& grads, const TrainingSchedule& schedule,
            std::size_t epoch);

 private:
  std::vector<std::vector<BasicTensor<T>>> velocity_;
};

using Sgd = BasicSgd<float>;

extern template class BasicSgd<float>;
extern template class BasicSgd<double>;

struct TrainResult {
  // Distinct training samples presented (0 when no epoch ran).
  std::uint64_t samples_seen = 0;
  std::vector<double> epoch_loss;
};

// Trains `net` in place. Labels must lie in [0, net.outputs()). `trainable`
// restricts updates to the selected layers (see select_layers()).
TrainResult train_network(Network& net, const FeatureSet& data, const TrainingSchedule& schedule,
                          const std::vector<bool>* trainable = nullptr);

}  // namespace treecnn
