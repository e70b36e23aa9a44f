#include "treecnn/tree/label_transform.hpp"

#include <string>

#include "treecnn/common/error.hpp"

namespace treecnn {

std::optional<std::size_t> LabelTransform::find(ClassLabel label) const {
  const auto it = map_.find(label);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelTransform::at(ClassLabel label) const {
  const auto it = map_.find(label);
  if (it == map_.end()) throw TreeError("label transform has no entry for class " + std::to_string(label));
  return it->second;
}

void LabelTransform::assign(ClassLabel label, std::size_t child) { map_[label] = child; }

void LabelTransform::erase(ClassLabel label) { map_.erase(label); }

void LabelTransform::remove_child(std::size_t child) {
  for (auto it = map_.begin(); it != map_.end();) {
    if (it->second == child) {
      it = map_.erase(it);
    } else {
      if (it->second > child) --it->second;
      ++it;
    }
  }
}

std::vector<ClassLabel> LabelTransform::classes() const {
  std::vector<ClassLabel> out;
  for (const auto& [c, _] : map_) out.push_back(c);
  return out;
}

std::vector<ClassLabel> LabelTransform::classes_of(std::size_t child) const {
  std::vector<ClassLabel> out;
  for (const auto& [c, i] : map_)
    if (i == child) out.push_back(c);
  return out;
}

}  // namespace treecnn
