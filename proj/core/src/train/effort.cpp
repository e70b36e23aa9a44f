#include "treecnn/train/effort.hpp"

#include <algorithm>

#include "treecnn/common/error.hpp"

namespace treecnn {

std::string_view to_string(FineTuneMode mode) {
  switch (mode) {
    case FineTuneMode::b1:
      return "B:I";
    case FineTuneMode::b2:
      return "B:II";
    case FineTuneMode::b3:
      return "B:III";
    case FineTuneMode::b4:
      return "B:IV";
    case FineTuneMode::b5:
      return "B:V";
  }
  return "?";
}

FineTuneMode fine_tune_mode_from_string(std::string_view text) {
  for (auto m : kFineTuneModes)
    if (to_string(m) == text) return m;
  throw ConfigError("baseline.mode", "unknown fine-tune mode '" + std::string(text) + "' (expected B:I..B:V)");
}

std::optional<std::vector<std::string>> fine_tune_blocks(const NetworkSpec& spec, FineTuneMode mode) {
  if (mode == FineTuneMode::b5) return std::nullopt;
  const auto convs = conv_blocks(spec);
  const auto extra = std::min(static_cast<std::size_t>(mode) - 1, convs.size());
  std::vector<std::string> blocks{"FC"};
  for (std::size_t i = 0; i < extra; ++i) blocks.push_back(convs[convs.size() - 1 - i]);
  return blocks;
}

std::vector<bool> fine_tune_layers(const NetworkSpec& spec, FineTuneMode mode) {
  const auto blocks = fine_tune_blocks(spec, mode);
  if (!blocks) return std::vector<bool>(spec.layers.size(), true);
  return select_layers(spec, *blocks);
}

std::uint64_t fine_tune_weights(const NetworkSpec& spec, FineTuneMode mode) {
  const auto blocks = fine_tune_blocks(spec, mode);
  if (!blocks) return count_weights(spec);
  return count_weights(spec, std::span<const std::string>(*blocks));
}

std::uint64_t training_effort(std::span<const EffortTerm> terms) {
  std::uint64_t total = 0;
  for (const auto& t : terms) {
    std::uint64_t product = 0;
    if (__builtin_mul_overflow(t.weights, t.samples, &product) || __builtin_add_overflow(total, product, &total))
      throw ConfigError("effort", "training effort overflows 64 bits");
  }
  return total;
}

double normalize_effort(std::uint64_t effort, std::uint64_t reference) {
  if (reference == 0) throw ConfigError("effort.reference", "must be positive");
  return static_cast<double>(effort) / static_cast<double>(reference);
}

double BaselineEffortTable::normalized(std::size_t row, FineTuneMode mode) const {
  return normalize_effort(rows.at(row).effort[static_cast<std::size_t>(mode) - 1], reference);
}

BaselineEffortTable baseline_effort_table(const std::function<NetworkSpec(std::size_t)>& spec_for_classes,
                                          std::span<const std::size_t> class_counts, std::size_t samples_per_class,
                                          std::optional<std::uint64_t> reference) {
  BaselineEffortTable table;
  for (auto n : class_counts) {
    const auto spec = spec_for_classes(n);
    BaselineEffortRow row;
    row.classes = n;
    row.samples = static_cast<std::uint64_t>(n) * samples_per_class;
    for (std::size_t m = 0; m < kFineTuneModes.size(); ++m) {
      const EffortTerm term{fine_tune_weights(spec, kFineTuneModes[m]), row.samples};
      row.effort[m] = training_effort(std::span(&term, 1));
    }
    table.reference = std::max(table.reference, row.effort[4]);
    table.rows.push_back(row);
  }
  if (reference) table.reference = *reference;
  return table;
}

}  // namespace treecnn
