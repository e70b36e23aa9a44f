#include "treecnn/data/dataset.hpp"

#include <unordered_set>

namespace treecnn {

std::string_view to_string(SplitTag tag) { return tag == SplitTag::train ? "train" : "test"; }

std::map<ClassLabel, std::vector<std::size_t>> DatasetSplit::class_index() const {
  std::map<ClassLabel, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < records.size(); ++i) index[records[i].label].push_back(i);
  return index;
}

std::vector<std::size_t> DatasetSplit::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& r : records) {
    if (r.label >= 0 && static_cast<std::size_t>(r.label) < num_classes) ++counts[r.label];
  }
  return counts;
}

DatasetSplit select_classes(const DatasetSplit& split, std::span<const ClassLabel> classes) {
  const std::unordered_set<ClassLabel> wanted(classes.begin(), classes.end());
  DatasetSplit out{split.tag, split.image_shape, split.num_classes, {}};
  for (const auto& r : split.records)
    if (wanted.contains(r.label)) out.records.push_back(r);
  return out;
}

DatasetSplit downsample_2x(const DatasetSplit& split) {
  const std::size_t c = split.image_shape.at(0), h = split.image_shape.at(1), w = split.image_shape.at(2);
  const std::size_t oh = h / 2, ow = w / 2;
  DatasetSplit out{split.tag, {c, oh, ow}, split.num_classes, {}};
  out.records.reserve(split.size());
  for (const auto& r : split.records) {
    ImageRecord d{std::vector<std::uint8_t>(c * oh * ow), r.label, r.coarse_label};
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          const std::uint8_t* p = r.pixels.data() + (ch * h + 2 * y) * w + 2 * x;
          const unsigned sum = p[0] + p[1] + p[w] + p[w + 1];
          d.pixels[(ch * oh + y) * ow + x] = static_cast<std::uint8_t>((sum + 2) / 4);
        }
    out.records.push_back(std::move(d));
  }
  return out;
}

}  // namespace treecnn
