#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treecnn/nn/spec.hpp"

namespace treecnn {

// Fine-tuning depth of the baseline network. B:I retrains the FC block only;
// each further mode adds one convolution block, counted from the classifier
// end; B:V retrains everything.
enum class FineTuneMode { b1 = 1, b2, b3, b4, b5 };

inline constexpr std::array<FineTuneMode, 5> kFineTuneModes{FineTuneMode::b1, FineTuneMode::b2, FineTuneMode::b3,
                                                           FineTuneMode::b4, FineTuneMode::b5};

std::string_view to_string(FineTuneMode mode);
FineTuneMode fine_tune_mode_from_string(std::string_view text);

// Block tags retrained under `mode`; nullopt means every layer.
std::optional<std::vector<std::string>> fine_tune_blocks(const NetworkSpec& spec, FineTuneMode mode);

// Per-layer trainable mask for `mode`.
std::vector<bool> fine_tune_layers(const NetworkSpec& spec, FineTuneMode mode);

std::uint64_t fine_tune_weights(const NetworkSpec& spec, FineTuneMode mode);

// One retrained network: weights updated times samples shown.
struct EffortTerm {
  std::uint64_t weights = 0;
  std::uint64_t samples = 0;
};

// Exact sum of weights x samples. Throws ConfigError on 64-bit overflow.
std::uint64_t training_effort(std::span<const EffortTerm> terms);

double normalize_effort(std::uint64_t effort, std::uint64_t reference);

// Baseline effort for every fine-tune mode at a sequence of class counts,
// each stage training on classes x samples_per_class samples.
struct BaselineEffortRow {
  std::size_t classes = 0;
  std::uint64_t samples = 0;
  std::array<std::uint64_t, 5> effort{};  // B:I..B:V
};

struct BaselineEffortTable {
  std::uint64_t reference = 0;  // normalizer, by default the largest B:V entry
  std::vector<BaselineEffortRow> rows;

  double normalized(std::size_t row, FineTuneMode mode) const;
};

BaselineEffortTable baseline_effort_table(const std::function<NetworkSpec(std::size_t)>& spec_for_classes,
                                          std::span<const std::size_t> class_counts, std::size_t samples_per_class,
                                          std::optional<std::uint64_t> reference = std::nullopt);

}  // namespace treecnn
