#include "treecnn/data/cifar.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "treecnn/common/error.hpp"

namespace treecnn {

namespace {

constexpr std::size_t kPixels = 3 * 32 * 32;

std::size_t label_bytes(CifarVariant v) { return v == CifarVariant::cifar10 ? 1 : 2; }

void read_into(std::istream& in, CifarVariant variant, DatasetSplit& split, const std::string& what) {
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::size_t rec = cifar_record_size(variant);
  if (bytes.empty()) throw FormatError(what + ": empty file");
  if (bytes.size() % rec != 0)
    throw FormatError(what + ": truncated; " + std::to_string(bytes.size()) + " bytes is not a multiple of the " +
                      std::to_string(rec) + "-byte record");
  const std::size_t n = bytes.size() / rec;
  const std::size_t classes = static_cast<std::size_t>(variant);
  split.records.reserve(split.records.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = bytes.data() + i * rec;
    ImageRecord r;
    if (variant == CifarVariant::cifar100) {
      r.coarse_label = p[0];
      r.label = p[1];
      if (p[0] >= 20) throw FormatError(what + ": record " + std::to_string(i) + " coarse label " + std::to_string(p[0]) + " out of range");
    } else {
      r.label = p[0];
    }
    if (static_cast<std::size_t>(r.label) >= classes)
      throw FormatError(what + ": record " + std::to_string(i) + " label " + std::to_string(r.label) + " out of range");
    const std::uint8_t* px = p + label_bytes(variant);
    r.pixels.assign(px, px + kPixels);
    split.records.push_back(std::move(r));
  }
}

DatasetSplit empty_split(CifarVariant variant, SplitTag tag) {
  return DatasetSplit{tag, {3, 32, 32}, static_cast<std::size_t>(variant), {}};
}

}  // namespace

std::size_t cifar_record_size(CifarVariant variant) { return label_bytes(variant) + kPixels; }

DatasetSplit read_cifar(std::istream& in, CifarVariant variant, SplitTag tag) {
  auto split = empty_split(variant, tag);
  read_into(in, variant, split, "cifar");
  return split;
}

DatasetSplit load_cifar(const std::filesystem::path& path, CifarVariant variant, SplitTag tag) {
  return load_cifar(std::span(&path, 1), variant, tag);
}

DatasetSplit load_cifar(std::span<const std::filesystem::path> paths, CifarVariant variant, SplitTag tag) {
  auto split = empty_split(variant, tag);
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FormatError(p.string() + ": cannot open");
    read_into(in, variant, split, p.string());
  }
  return split;
}

DatasetPair load_cifar_dir(const std::filesystem::path& dir, CifarVariant variant) {
  std::vector<std::filesystem::path> train_files, test_files;
  std::size_t train_per_class, test_per_class;
  if (variant == CifarVariant::cifar10) {
    for (int i = 1; i <= 5; ++i) train_files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    test_files.push_back(dir / "test_batch.bin");
    train_per_class = 5000;
    test_per_class = 1000;
  } else {
    train_files.push_back(dir / "train.bin");
    test_files.push_back(dir / "test.bin");
    train_per_class = 500;
    test_per_class = 100;
  }
  DatasetPair pair{load_cifar(train_files, variant, SplitTag::train), load_cifar(test_files, variant, SplitTag::test)};
  const auto check = [&](const DatasetSplit& s, std::size_t expected) {
    const auto counts = s.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[c] != expected)
        throw FormatError(dir.string() + ": " + std::string(to_string(s.tag)) + " class " + std::to_string(c) + " has " +
                          std::to_string(counts[c]) + " images, expected " + std::to_string(expected));
  };
  check(pair.train, train_per_class);
  check(pair.test, test_per_class);
  return pair;
}

void write_cifar(const DatasetSplit& split, std::ostream& out, CifarVariant variant) {
  if (split.image_shape != Shape{3, 32, 32}) throw FormatError("cifar: can only write 3x32x32 images");
  for (const auto& r : split.records) {
    if (r.pixels.size() != kPixels) throw FormatError("cifar: record has wrong pixel count");
    if (variant == CifarVariant::cifar100) out.put(static_cast<char>(r.coarse_label));
    out.put(static_cast<char>(r.label));
    out.write(reinterpret_cast<const char*>(r.pixels.data()), static_cast<std::streamsize>(kPixels));
  }
}

void save_cifar(const DatasetSplit& split, const std::filesystem::path& path, CifarVariant variant) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  write_cifar(split, out, variant);
  if (!out) throw FormatError(path.string() + ": write failed");
}

const std::vector<std::string>& cifar10_class_names() {
  static const std::vector<std::string> names{"airplane", "automobile", "bird",  "cat",  "deer",
                                              "dog",      "frog",       "horse", "ship", "truck"};
  return names;
}

const std::vector<std::string>& cifar100_class_names() {
  static const std::vector<std::string> names{
      "apple",       "aquarium_fish", "baby",         "bear",       "beaver",     "bed",
      "bee",         "beetle",        "bicycle",      "bottle",     "bowl",       "boy",
      "bridge",      "bus",           "butterfly",    "camel",      "can",        "castle",
      "caterpillar", "cattle",        "chair",        "chimpanzee", "clock",      "cloud",
      "cockroach",   "couch",         "crab",         "crocodile",  "cup",        "dinosaur",
      "dolphin",     "elephant",      "flatfish",     "forest",     "fox",        "girl",
      "hamster",     "house",         "kangaroo",     "keyboard",   "lamp",       "lawn_mower",
      "leopard",     "lion",          "lizard",       "lobster",    "man",        "maple_tree",
      "motorcycle",  "mountain",      "mouse",        "mushroom",   "oak_tree",   "orange",
      "orchid",      "otter",         "palm_tree",    "pear",       "pickup_truck", "pine_tree",
      "plain",       "plate",         "poppy",        "porcupine",  "possum",     "rabbit",
      "raccoon",     "ray",           "road",         "rocket",     "rose",       "sea",
      "seal",        "shark",         "shrew",        "skunk",      "skyscraper", "snail",
      "snake",       "spider",        "squirrel",     "streetcar",  "sunflower",  "sweet_pepper",
      "table",       "tank",          "telephone",    "television", "tiger",      "tractor",
      "train",       "trout",         "tulip",        "turtle",     "wardrobe",   "whale",
      "willow_tree", "wolf",          "woman",        "worm"};
  return names;
}

}  // namespace treecnn
