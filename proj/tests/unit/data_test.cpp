#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "treecnn/data/augment.hpp"
#include "treecnn/data/cifar.hpp"
#include "treecnn/data/idx.hpp"
#include "treecnn/data/preprocess.hpp"
#include "treecnn/data/schedule.hpp"
#include "treecnn/data/synthetic.hpp"

using namespace treecnn;

namespace {

const std::filesystem::path kData = TREECNN_TEST_DATA;

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cifar, TenRecordFixture) {
  const auto split = load_cifar(kData / "cifar10_two.bin", CifarVariant::cifar10);
  ASSERT_EQ(split.size(), 2u);
  EXPECT_EQ(split.records[0].label, 3);
  EXPECT_EQ(split.records[1].label, 9);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t k = 0; k < 3072; ++k)
      ASSERT_EQ(split.records[r].pixels[k], (k * 7 + r * 13) % 256) << r << " " << k;

  std::ostringstream out;
  write_cifar(split, out, CifarVariant::cifar10);
  EXPECT_EQ(out.str(), file_bytes(kData / "cifar10_two.bin"));
}

TEST(Cifar, HundredUsesFineLabel) {
  const auto split = load_cifar(kData / "cifar100_two.bin", CifarVariant::cifar100);
  ASSERT_EQ(split.size(), 2u);
  EXPECT_EQ(split.records[0].label, 30);
  EXPECT_EQ(split.records[1].label, 99);
  EXPECT_EQ(split.records[1].coarse_label, 19);
  EXPECT_EQ(split.records[1].pixels[5], (5 * 5 + 101) % 256);
  std::ostringstream out;
  write_cifar(split, out, CifarVariant::cifar100);
  EXPECT_EQ(out.str(), file_bytes(kData / "cifar100_two.bin"));
}

TEST(Cifar, RecordCountFollowsLength) {
  std::string bytes(10000 * 3073, '\0');
  std::istringstream in(bytes);
  EXPECT_EQ(read_cifar(in, CifarVariant::cifar10, SplitTag::train).size(), 10000u);
}

TEST(Cifar, Errors) {
  std::istringstream empty("");
  EXPECT_THROW(read_cifar(empty, CifarVariant::cifar10, SplitTag::train), FormatError);
  std::istringstream truncated(std::string(3072, '\0'));
  EXPECT_THROW(read_cifar(truncated, CifarVariant::cifar10, SplitTag::train), FormatError);
  std::string bad(3073, '\0');
  bad[0] = 10;
  std::istringstream out_of_range(bad);
  EXPECT_THROW(read_cifar(out_of_range, CifarVariant::cifar10, SplitTag::train), FormatError);
}

TEST(Idx, OneImageFixture) {
  const auto split = load_idx(kData / "one_image.idx", kData / "one_label.idx");
  ASSERT_EQ(split.size(), 1u);
  EXPECT_EQ(split.image_shape, (Shape{1, 3, 4}));
  EXPECT_EQ(split.records[0].label, 7);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(split.records[0].pixels[k], 20 * k + 1);

  const auto [images, labels] = split_to_idx(split);
  std::ostringstream a, b;
  write_idx(images, a);
  write_idx(labels, b);
  EXPECT_EQ(a.str(), file_bytes(kData / "one_image.idx"));
  EXPECT_EQ(b.str(), file_bytes(kData / "one_label.idx"));
}

TEST(Idx, HeaderOnlyIsEmpty) {
  const auto split = load_idx(kData / "empty_images.idx", kData / "empty_labels.idx");
  EXPECT_TRUE(split.empty());
  EXPECT_EQ(split.image_shape, (Shape{1, 28, 28}));
}

TEST(Idx, WrongMagic) {
  std::istringstream in(std::string("\x01\x00\x08\x01\x00\x00\x00\x00", 8));
  EXPECT_THROW(read_idx(in), FormatError);
  std::istringstream bad_type(std::string("\x00\x00\x07\x01\x00\x00\x00\x00", 8));
  EXPECT_THROW(read_idx(bad_type), FormatError);
}

TEST(Preprocess, ConstantImageBecomesZeros) {
  std::vector<float> img(50, 0.7f);
  global_contrast_normalize(img, 1e-8);
  for (float v : img) EXPECT_EQ(v, 0.0f);
}

TEST(Preprocess, GcnMeanZeroRmsOne) {
  Rng rng(1);
  std::vector<float> img(300);
  for (auto& v : img) v = static_cast<float>(uniform01(rng));
  global_contrast_normalize(img, 1e-8);
  double mean = 0, sq = 0;
  for (float v : img) mean += v;
  mean /= img.size();
  for (float v : img) sq += v * v;
  EXPECT_NEAR(mean, 0.0, 1e-6);
  EXPECT_NEAR(std::sqrt(sq / img.size()), 1.0, 1e-5);
}

namespace {

DatasetSplit correlated_split(std::size_t n, std::uint64_t seed) {
  // 2x2 single-channel images with strongly correlated pixels
  DatasetSplit s{SplitTag::train, {1, 2, 2}, 2, {}};
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = uniform01(rng), b = uniform01(rng), c = uniform01(rng);
    ImageRecord r;
    r.label = static_cast<int>(i % 2);
    r.pixels = {static_cast<std::uint8_t>(40 + 150 * a), static_cast<std::uint8_t>(30 + 100 * a + 60 * b),
                static_cast<std::uint8_t>(200 * b + 20 * c), static_cast<std::uint8_t>(10 + 80 * c + 40 * a)};
    s.records.push_back(r);
  }
  return s;
}

}  // namespace

TEST(Preprocess, WhitenedCovarianceIsIdentity) {
  const auto train = correlated_split(2000, 3);
  PreprocessConfig cfg;
  cfg.gcn = false;
  cfg.zca_regularization = 1e-9;
  const auto stats = fit_preprocess(train, cfg);
  const auto f = preprocess(train, cfg, stats);
  const std::size_t d = 4, n = f.size();
  std::vector<double> mean(d, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += f.sample(i)[j] / n;
  for (std::size_t a = 0; a < d; ++a) {
    EXPECT_NEAR(mean[a], 0.0, 1e-4);
    for (std::size_t b = 0; b < d; ++b) {
      double cov = 0;
      for (std::size_t i = 0; i < n; ++i) cov += (f.sample(i)[a] - mean[a]) * (f.sample(i)[b] - mean[b]);
      cov /= n;
      EXPECT_NEAR(cov, a == b ? 1.0 : 0.0, 1e-3) << a << "," << b;
    }
  }
}

TEST(Preprocess, StatisticsIgnoreTestSplit) {
  DatasetPair pair{correlated_split(500, 1), correlated_split(100, 2)};
  pair.test.tag = SplitTag::test;
  PreprocessConfig cfg;
  const auto a = preprocess_pair(pair, cfg);
  auto altered = pair;
  for (auto& r : altered.test.records) r.pixels[0] = 255;
  const auto b = preprocess_pair(altered, cfg);
  EXPECT_EQ(a.train.values, b.train.values);
  EXPECT_THROW(fit_preprocess(pair.test, cfg), ConfigError);
}

TEST(Augment, FlipProbabilities) {
  Tensor batch({3, 2, 2, 3});
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = static_cast<float>(i);
  const auto original = batch;
  Rng rng(1);
  augment_flip(batch, 0.0, rng);
  EXPECT_EQ(batch, original);
  augment_flip(batch, 1.0, rng);
  EXPECT_EQ(batch[0], 2.0f);
  EXPECT_EQ(batch[2], 0.0f);
  EXPECT_EQ(batch[3], 5.0f);
  augment_flip(batch, 1.0, rng);
  EXPECT_EQ(batch, original);
}

TEST(Augment, FlipCountWithinThreeSigma) {
  Tensor batch({10000, 1, 1, 2});
  for (std::size_t i = 0; i < 10000; ++i) batch[2 * i + 1] = 1.0f;
  Rng rng(12345);
  augment_flip(batch, 0.5, rng);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < 10000; ++i) flipped += batch[2 * i] == 1.0f;
  // sd of Binomial(10000, 0.5) is 50
  EXPECT_GE(flipped, 4850u);
  EXPECT_LE(flipped, 5150u);
}

TEST(Schedule, BundledListing) {
  const auto& names = cifar100_class_names();
  const auto s = load_schedule(std::filesystem::path(TREECNN_SOURCE_DIR) / "schedules" / "cifar100-paper.txt", names);
  ASSERT_EQ(s.stages(), 10u);
  std::set<ClassLabel> all;
  for (const auto& g : s.groups) {
    EXPECT_EQ(g.size(), 10u);
    all.insert(g.begin(), g.end());
  }
  EXPECT_EQ(all.size(), 100u);
  EXPECT_EQ(names[s.groups[0][0]], "chair");
  EXPECT_EQ(names[s.groups[0][4]], "lawn_mower");
  EXPECT_EQ(names[s.groups[9][9]], "cup");
  EXPECT_EQ(parse_schedule(to_text(s, names), names), s);
}

TEST(Schedule, Errors) {
  EXPECT_THROW(parse_schedule("0: 1, 2\n1: 2, 3\n"), ConfigError);
  EXPECT_THROW(parse_schedule("1: 1, 2\n"), ConfigError);
  EXPECT_THROW(parse_schedule("0: 1, unicorn\n", cifar10_class_names()), ConfigError);
  EXPECT_THROW(parse_schedule("0: 1,, 2\n"), ConfigError);
  const auto ok = parse_schedule("# c\n0: cat, Dog # tail\n\n1: 0\n", cifar10_class_names());
  EXPECT_EQ(ok.groups, (std::vector<std::vector<ClassLabel>>{{3, 5}, {0}}));
}

TEST(Schedule, StageSlices) {
  DatasetSplit split{SplitTag::train, {1, 1, 1}, 100, {}};
  for (int c = 0; c < 100; ++c)
    for (int i = 0; i < 500; ++i) split.records.push_back({{static_cast<std::uint8_t>(i % 256)}, c, 0});
  const auto s = load_schedule(std::filesystem::path(TREECNN_SOURCE_DIR) / "schedules" / "cifar100-paper.txt",
                               cifar100_class_names());
  const auto t0 = stage_slices(split, s, 0);
  EXPECT_EQ(t0.cumulative.size(), 5000u);
  EXPECT_EQ(t0.added.size(), 5000u);
  const auto t1 = stage_slices(split, s, 1);
  EXPECT_EQ(t1.cumulative.size(), 10000u);
  EXPECT_EQ(t1.added.size(), 5000u);
  std::size_t prev = 0;
  for (std::size_t t = 0; t < s.stages(); ++t) {
    const auto cum = stage_slices(split, s, t).cumulative.size();
    EXPECT_GT(cum, prev);
    prev = cum;
  }
  EXPECT_EQ(prev, split.size());
  EXPECT_THROW(stage_slices(split, s, 10), ConfigError);
}

TEST(Synthetic, DeterministicBalancedSplits) {
  SevenSegmentConfig cfg;
  cfg.train_per_class = 20;
  cfg.test_per_class = 5;
  const auto a = make_seven_segment(cfg);
  const auto b = make_seven_segment(cfg);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.train.size(), 200u);
  EXPECT_EQ(a.test.size(), 50u);
  for (auto c : a.train.class_counts()) EXPECT_EQ(c, 20u);
  EXPECT_EQ(a.train.image_shape, (Shape{1, 28, 28}));
  cfg.seed = 2;
  EXPECT_NE(make_seven_segment(cfg).train, a.train);
}

TEST(Synthetic, DownsampleAveragesBlocks) {
  DatasetSplit s{SplitTag::train, {1, 2, 4}, 1, {{{0, 10, 100, 101, 4, 6, 200, 99}, 0, 0}}};
  const auto d = downsample_2x(s);
  EXPECT_EQ(d.image_shape, (Shape{1, 1, 2}));
  EXPECT_EQ(d.records[0].pixels, (std::vector<std::uint8_t>{5, 125}));
}
