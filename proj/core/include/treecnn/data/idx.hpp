#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "treecnn/data/dataset.hpp"

namespace treecnn {

// Raw IDX array: magic 00 00 <type> <rank>, big-endian u32 extents, then the
// payload in the file's own byte order.
struct IdxArray {
  std::uint8_t type_code = 0x08;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  std::size_t element_count() const;
  friend bool operator==(const IdxArray&, const IdxArray&) = default;
};

// Element width for a type code (0x08 u8, 0x09 i8, 0x0B i16, 0x0C i32,
// 0x0D f32, 0x0E f64); throws FormatError for anything else.
std::size_t idx_element_size(std::uint8_t type_code);

IdxArray read_idx(std::istream& in);
IdxArray load_idx_array(const std::filesystem::path& path);
void write_idx(const IdxArray& array, std::ostream& out);
void save_idx_array(const IdxArray& array, const std::filesystem::path& path);

// Image file of unsigned bytes shaped [N, H, W] or [N, C, H, W] plus a label
// file [N]. `num_classes` defaults to max label + 1.
DatasetSplit split_from_idx(const IdxArray& images, const IdxArray& labels, SplitTag tag,
                            std::optional<std::size_t> num_classes = std::nullopt);
DatasetSplit load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                      SplitTag tag = SplitTag::train,
                      std::optional<std::size_t> num_classes = std::nullopt);

// Single-channel splits are written as [N, H, W], others as [N, C, H, W].
std::pair<IdxArray, IdxArray> split_to_idx(const DatasetSplit& split);
void save_idx(const DatasetSplit& split, const std::filesystem::path& images,
              const std::filesystem::path& labels);

}  // namespace treecnn
