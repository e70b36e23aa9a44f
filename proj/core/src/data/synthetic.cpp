#include "treecnn/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "treecnn/common/random.hpp"

namespace treecnn {

namespace {

constexpr std::size_t kSide = 28;

struct Segment {
  double x0, y0, x1, y1;  // glyph units: x in [0, 1], y in [0, 2]
};

// a b c d e f g
constexpr std::array<Segment, 7> kSegments{{{0, 0, 1, 0},
                                            {1, 0, 1, 1},
                                            {1, 1, 1, 2},
                                            {0, 2, 1, 2},
                                            {0, 1, 0, 2},
                                            {0, 0, 0, 1},
                                            {0, 1, 1, 1}}};

constexpr std::array<std::uint8_t, 10> kDigits{0b0111111, 0b0000110, 0b1011011, 0b1001111, 0b1100110,
                                               0b1101101, 0b1111101, 0b0000111, 0b1111111, 0b1101111};

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = ax + t * dx - px, ey = ay + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

ImageRecord render(int digit, const SevenSegmentConfig& config, Rng& rng) {
  const double width = uniform(rng, 9.0, 14.0);
  const double height = uniform(rng, 17.0, 23.0);
  const double cx = 14.0 + uniform(rng, -3.0, 3.0);
  const double cy = 14.0 + uniform(rng, -2.5, 2.5);
  const double shear = uniform(rng, -0.25, 0.25);
  const double thickness = uniform(rng, 1.6, 3.2);
  const double background = uniform(rng, 0.0, 50.0);
  const double foreground = uniform(rng, 170.0, 255.0);

  std::array<double, 7> strength{};
  for (std::size_t s = 0; s < 7; ++s)
    if (kDigits[digit] >> s & 1) strength[s] = uniform(rng, 0.7, 1.0);
  if (uniform01(rng) < config.spurious_rate) {
    const auto s = uniform_index(rng, 7);
    strength[s] = std::max(strength[s], uniform(rng, 0.2, 0.45));
  }

  ImageRecord r;
  r.label = digit;
  r.pixels.resize(kSide * kSide);
  for (std::size_t y = 0; y < kSide; ++y) {
    for (std::size_t x = 0; x < kSide; ++x) {
      const double v = y + 0.5 - cy;
      const double u = x + 0.5 - cx - shear * v;
      double cover = 0.0;
      for (std::size_t s = 0; s < 7; ++s) {
        if (strength[s] == 0.0) continue;
        const auto& seg = kSegments[s];
        const double d = segment_distance(u, v, (seg.x0 - 0.5) * width, (seg.y0 - 1.0) * height / 2,
                                          (seg.x1 - 0.5) * width, (seg.y1 - 1.0) * height / 2);
        cover = std::max(cover, strength[s] * std::clamp(thickness / 2 + 0.5 - d, 0.0, 1.0));
      }
      // sum of four uniforms approximates a normal draw
      double n = 0.0;
      for (int k = 0; k < 4; ++k) n += uniform01(rng);
      n = (n - 2.0) * std::sqrt(3.0) * config.noise;
      const double value = background + (foreground - background) * cover + n;
      r.pixels[y * kSide + x] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
    }
  }
  return r;
}

DatasetSplit make_split(const SevenSegmentConfig& config, SplitTag tag, std::size_t per_class) {
  DatasetSplit split{tag, {1, kSide, kSide}, 10, {}};
  Rng rng(derive_seed(config.seed, to_string(tag)));
  std::vector<int> order;
  for (int d = 0; d < 10; ++d) order.insert(order.end(), per_class, d);
  shuffle(order.begin(), order.end(), rng);
  split.records.reserve(order.size());
  for (int d : order) split.records.push_back(render(d, config, rng));
  return split;
}

}  // namespace

DatasetPair make_seven_segment(const SevenSegmentConfig& config) {
  return {make_split(config, SplitTag::train, config.train_per_class),
          make_split(config, SplitTag::test, config.test_per_class)};
}

const std::vector<std::string>& seven_segment_class_names() {
  static const std::vector<std::string> names{"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
  return names;
}

}  // namespace treecnn
