#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treecnn/data/dataset.hpp"

namespace treecnn {

// Published binary layout: per record 1 label byte (CIFAR-10) or coarse and
// fine label bytes (CIFAR-100), then 3072 channel-major pixel bytes.
enum class CifarVariant { cifar10 = 10, cifar100 = 100 };

std::size_t cifar_record_size(CifarVariant variant);

DatasetSplit read_cifar(std::istream& in, CifarVariant variant, SplitTag tag);
DatasetSplit load_cifar(const std::filesystem::path& path, CifarVariant variant,
                        SplitTag tag = SplitTag::train);
// Concatenates several batch files (e.g. data_batch_1..5.bin).
DatasetSplit load_cifar(std::span<const std::filesystem::path> paths, CifarVariant variant,
                        SplitTag tag);

// Loads the standard extracted directory (cifar-10-batches-bin or
// cifar-100-binary) and checks the documented per-class counts.
DatasetPair load_cifar_dir(const std::filesystem::path& dir, CifarVariant variant);

void write_cifar(const DatasetSplit& split, std::ostream& out, CifarVariant variant);
void save_cifar(const DatasetSplit& split, const std::filesystem::path& path, CifarVariant variant);

const std::vector<std::string>& cifar10_class_names();
const std::vector<std::string>& cifar100_class_names();

}  // namespace treecnn
