#include "treecnn/data/idx.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "treecnn/common/error.hpp"

namespace treecnn {

namespace {

void read_exact(std::istream& in, void* dst, std::size_t n, const char* what) {
  if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
    throw FormatError(std::string("idx: truncated ") + what);
}

}  // namespace

std::size_t idx_element_size(std::uint8_t type_code) {
  switch (type_code) {
    case 0x08:
    case 0x09:
      return 1;
    case 0x0B:
      return 2;
    case 0x0C:
    case 0x0D:
      return 4;
    case 0x0E:
      return 8;
    default:
      throw FormatError("idx: unknown element type 0x" + std::to_string(type_code));
  }
}

std::size_t IdxArray::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

IdxArray read_idx(std::istream& in) {
  std::uint8_t magic[4];
  read_exact(in, magic, 4, "magic");
  if (magic[0] != 0 || magic[1] != 0) throw FormatError("idx: bad magic");
  IdxArray a;
  a.type_code = magic[2];
  const std::size_t width = idx_element_size(a.type_code);
  if (magic[3] == 0) throw FormatError("idx: rank 0");
  for (std::uint8_t i = 0; i < magic[3]; ++i) {
    std::uint8_t b[4];
    read_exact(in, b, 4, "header");
    a.dims.push_back(std::uint32_t{b[0]} << 24 | std::uint32_t{b[1]} << 16 | std::uint32_t{b[2]} << 8 | b[3]);
  }
  a.payload.resize(a.element_count() * width);
  read_exact(in, a.payload.data(), a.payload.size(), "payload");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("idx: trailing bytes after payload");
  return a;
}

IdxArray load_idx_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  try {
    return read_idx(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_idx(const IdxArray& a, std::ostream& out) {
  if (a.dims.empty() || a.dims.size() > 255) throw FormatError("idx: rank must be 1..255");
  if (a.payload.size() != a.element_count() * idx_element_size(a.type_code))
    throw FormatError("idx: payload size does not match dims");
  const char magic[4] = {0, 0, static_cast<char>(a.type_code), static_cast<char>(a.dims.size())};
  out.write(magic, 4);
  for (auto d : a.dims) {
    const char b[4] = {static_cast<char>(d >> 24), static_cast<char>(d >> 16), static_cast<char>(d >> 8),
                       static_cast<char>(d)};
    out.write(b, 4);
  }
  out.write(reinterpret_cast<const char*>(a.payload.data()), static_cast<std::streamsize>(a.payload.size()));
}

void save_idx_array(const IdxArray& array, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  write_idx(array, out);
  if (!out) throw FormatError(path.string() + ": write failed");
}

DatasetSplit split_from_idx(const IdxArray& images, const IdxArray& labels, SplitTag tag,
                            std::optional<std::size_t> num_classes) {
  if (images.type_code != 0x08 || labels.type_code != 0x08)
    throw FormatError("idx: images and labels must be unsigned bytes");
  if (images.dims.size() != 3 && images.dims.size() != 4)
    throw FormatError("idx: images must have rank 3 or 4");
  if (labels.dims.size() != 1) throw FormatError("idx: labels must have rank 1");
  if (images.dims[0] != labels.dims[0])
    throw FormatError("idx: " + std::to_string(images.dims[0]) + " images but " + std::to_string(labels.dims[0]) +
                      " labels");
  DatasetSplit split;
  split.tag = tag;
  if (images.dims.size() == 3) {
    split.image_shape = {1, images.dims[1], images.dims[2]};
  } else {
    split.image_shape = {images.dims[1], images.dims[2], images.dims[3]};
  }
  const std::size_t per = shape_size(split.image_shape);
  const std::size_t n = images.dims[0];
  const std::size_t max_label =
      labels.payload.empty() ? 0 : *std::max_element(labels.payload.begin(), labels.payload.end());
  split.num_classes = num_classes.value_or(n == 0 ? 0 : max_label + 1);
  if (n > 0 && max_label >= split.num_classes)
    throw FormatError("idx: label " + std::to_string(max_label) + " out of range");
  split.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImageRecord r;
    r.label = labels.payload[i];
    r.pixels.assign(images.payload.begin() + i * per, images.payload.begin() + (i + 1) * per);
    split.records.push_back(std::move(r));
  }
  return split;
}

DatasetSplit load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, SplitTag tag,
                      std::optional<std::size_t> num_classes) {
  return split_from_idx(load_idx_array(images), load_idx_array(labels), tag, num_classes);
}

std::pair<IdxArray, IdxArray> split_to_idx(const DatasetSplit& split) {
  IdxArray images, labels;
  const auto n = static_cast<std::uint32_t>(split.size());
  const auto& s = split.image_shape;
  if (s.size() != 3) throw FormatError("idx: image shape must be {C, H, W}");
  if (s[0] == 1) {
    images.dims = {n, static_cast<std::uint32_t>(s[1]), static_cast<std::uint32_t>(s[2])};
  } else {
    images.dims = {n, static_cast<std::uint32_t>(s[0]), static_cast<std::uint32_t>(s[1]),
                   static_cast<std::uint32_t>(s[2])};
  }
  labels.dims = {n};
  const std::size_t per = shape_size(s);
  images.payload.reserve(split.size() * per);
  for (const auto& r : split.records) {
    if (r.pixels.size() != per) throw FormatError("idx: record has wrong pixel count");
    if (r.label < 0 || r.label > 255) throw FormatError("idx: label does not fit a byte");
    images.payload.insert(images.payload.end(), r.pixels.begin(), r.pixels.end());
    labels.payload.push_back(static_cast<std::uint8_t>(r.label));
  }
  return {std::move(images), std::move(labels)};
}

void save_idx(const DatasetSplit& split, const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto [img, lab] = split_to_idx(split);
  save_idx_array(img, images);
  save_idx_array(lab, labels);
}

}  // namespace treecnn
