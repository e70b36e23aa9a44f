#include "layers.hpp"

#include "treecnn/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace treecnn::detail {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.1;

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(const LayerSpec& spec, const Shape& in, const Shape& out, std::uint64_t seed)
      : Layer<T>(spec, in, out) {
    const std::size_t patch = in[0] * spec.kernel * spec.kernel;
    this->params.emplace_back(Shape{spec.out_channels, patch});
    Rng rng(seed);
    fan_in_uniform<T>(this->params[0].values(), patch, rng);
    if (spec.bias) this->params.emplace_back(Shape{spec.out_channels});
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ConvLayer>(*this); }

  void forward(const BasicTensor<T>& in, BasicTensor<T>& out, Scratch<T>& s, bool, Rng&) const override {
    const std::size_t batch = in.extent(0);
    const std::size_t patch = patch_size();
    const std::size_t pixels = this->out_[1] * this->out_[2];
    out.resize(this->batch_shape(batch));
    s.values.resize(batch * patch * pixels);

    CMapR<T> w(this->params[0].data(), this->out_[0], patch);
    for (std::size_t b = 0; b < batch; ++b) {
      T* col = s.values.data() + b * patch * pixels;
      im2col(in.data() + b * shape_size(this->in_), col);
      MapR<T> o(out.data() + b * this->out_[0] * pixels, this->out_[0], pixels);
      o.noalias() = w * CMapR<T>(col, patch, pixels);
      if (this->spec_.bias) {
        for (std::size_t c = 0; c < this->out_[0]; ++c) o.row(c).array() += this->params[1][c];
      }
    }
  }

  void backward(const BasicTensor<T>& in, const BasicTensor<T>&, const BasicTensor<T>& dout,
                BasicTensor<T>* din, const Scratch<T>& s, bool param_grads,
                std::vector<BasicTensor<T>>& grads) const override {
    const std::size_t batch = in.extent(0);
    const std::size_t patch = patch_size();
    const std::size_t pixels = this->out_[1] * this->out_[2];
    const std::size_t channels = this->out_[0];
    CMapR<T> w(this->params[0].data(), channels, patch);

    MatR<T> dcol(patch, pixels);
    if (din) {
      din->resize(in.shape());
      din->fill(T{0});
    }
    for (std::size_t b = 0; b < batch; ++b) {
      CMapR<T> d(dout.data() + b * channels * pixels, channels, pixels);
      if (param_grads) {
        CMapR<T> col(s.values.data() + b * patch * pixels, patch, pixels);
        MapR<T>(grads[0].data(), channels, patch).noalias() += d * col.transpose();
        if (this->spec_.bias) {
          for (std::size_t c = 0; c < channels; ++c) grads[1][c] += d.row(c).sum();
        }
      }
      if (din) {
        dcol.noalias() = w.transpose() * d;
        col2im(dcol.data(), din->data() + b * shape_size(this->in_));
      }
    }
  }

 private:
  std::size_t patch_size() const { return this->in_[0] * this->spec_.kernel * this->spec_.kernel; }

  void im2col(const T* image, T* col) const {
    const auto [channels, height, width] = dims();
    const long k = static_cast<long>(this->spec_.kernel);
    const long pad = (k - 1) / 2;
    const long stride = static_cast<long>(this->spec_.stride);
    const long oh = static_cast<long>(this->out_[1]);
    const long ow = static_cast<long>(this->out_[2]);
    for (long c = 0; c < channels; ++c) {
      for (long ky = 0; ky < k; ++ky) {
        for (long kx = 0; kx < k; ++kx) {
          T* row = col + ((c * k + ky) * k + kx) * oh * ow;
          for (long oy = 0; oy < oh; ++oy) {
            const long iy = oy * stride + ky - pad;
            T* dst = row + oy * ow;
            if (iy < 0 || iy >= height) {
              std::fill(dst, dst + ow, T{0});
              continue;
            }
            const T* src = image + (c * height + iy) * width;
            for (long ox = 0; ox < ow; ++ox) {
              const long ix = ox * stride + kx - pad;
              dst[ox] = (ix >= 0 && ix < width) ? src[ix] : T{0};
            }
          }
        }
      }
    }
  }

  void col2im(const T* col, T* image) const {
    const auto [channels, height, width] = dims();
    const long k = static_cast<long>(this->spec_.kernel);
    const long pad = (k - 1) / 2;
    const long stride = static_cast<long>(this->spec_.stride);
    const long oh = static_cast<long>(this->out_[1]);
    const long ow = static_cast<long>(this->out_[2]);
    for (long c = 0; c < channels; ++c) {
      for (long ky = 0; ky < k; ++ky) {
        for (long kx = 0; kx < k; ++kx) {
          const T* row = col + ((c * k + ky) * k + kx) * oh * ow;
          for (long oy = 0; oy < oh; ++oy) {
            const long iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= height) continue;
            T* dst = image + (c * height + iy) * width;
            for (long ox = 0; ox < ow; ++ox) {
              const long ix = ox * stride + kx - pad;
              if (ix >= 0 && ix < width) dst[ix] += row[oy * ow + ox];
            }
          }
        }
      }
    }
  }

  std::tuple<long, long, long> dims() const {
    return {static_cast<long>(this->in_[0]), static_cast<long>(this->in_[1]),
            static_cast<long>(this->in_[2])};
  }
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(const LayerSpec& spec, const Shape& in, const Shape& out, std::uint64_t seed)
      : Layer<T>(spec, in, out) {
    const std::size_t fan_in = shape_size(in);
    this->params.emplace_back(Shape{spec.out_features, fan_in});
    Rng rng(seed);
    fan_in_uniform<T>(this->params[0].values(), fan_in, rng);
    if (spec.bias) this->params.emplace_back(Shape{spec.out_features});
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DenseLayer>(*this); }

  void forward(const BasicTensor<T>& in, BasicTensor<T>& out, Scratch<T>&, bool, Rng&) const override {
    const std::size_t batch = in.extent(0);
    const std::size_t fan_in = shape_size(this->in_);
    const std::size_t units = this->out_[0];
    out.resize(this->batch_shape(batch));
    MapR<T> o(out.data(), batch, units);
    o.noalias() = CMapR<T>(in.data(), batch, fan_in) *
                  CMapR<T>(this->params[0].data(), units, fan_in).transpose();
    if (this->spec_.bias) {
      Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(this->params[1].data(), units);
      o.rowwise() += bias;
    }
  }

  void backward(const BasicTensor<T>& in, const BasicTensor<T>&, const BasicTensor<T>& dout,
                BasicTensor<T>* din, const Scratch<T>&, bool param_grads,
                std::vector<BasicTensor<T>>& grads) const override {
    const std::size_t batch = in.extent(0);
    const std::size_t fan_in = shape_size(this->in_);
    const std::size_t units = this->out_[0];
    CMapR<T> d(dout.data(), batch, units);
    if (param_grads) {
      MapR<T>(grads[0].data(), units, fan_in).noalias() +=
          d.transpose() * CMapR<T>(in.data(), batch, fan_in);
      if (this->spec_.bias) {
        for (std::size_t u = 0; u < units; ++u) grads[1][u] += d.col(u).sum();
      }
    }
    if (din) {
      din->resize(in.shape());
      MapR<T>(din->data(), batch, fan_in).noalias() =
          d * CMapR<T>(this->params[0].data(), units, fan_in);
    }
  }
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReluLayer>(*this); }

  void forward(const BasicTensor<T>& in, BasicTensor<T>& out, Scratch<T>&, bool, Rng&) const override {
    out.resize(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::max(in[i], T{0});
  }

  void backward(const BasicTensor<T>&, const BasicTensor<T>& out, const BasicTensor<T>& dout,
                BasicTensor<T>* din, const Scratch<T>&, bool,
                std::vector<BasicTensor<T>>&) const override {
    if (!din) return;
    din->resize(out.shape());
    for (std::size_t i = 0; i < out.size(); ++i) (*din)[i] = out[i] > T{0} ? dout[i] : T{0};
  }
};

// Inverted dropout: kept units are scaled by 1/(1-p) during training so that
// evaluation is the identity.
template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DropoutLayer>(*this); }

  void forward(const BasicTensor<T>& in, BasicTensor<T>& out, Scratch<T>& s, bool train,
               Rng& rng) const override {
    out = in;
    s.values.clear();
    const double p = this->spec_.dropout;
    if (!train || p <= 0.0) return;
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    s.values.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      s.values[i] = uniform01(rng) < p ? T{0} : scale;
      out[i] *= s.values[i];
    }
  }

  void backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>& dout,
                BasicTensor<T>* din, const Scratch<T>& s, bool,
                std::vector<BasicTensor<T>>&) const override {
    if (!din) return;
    *din = dout;
    if (s.values.empty()) return;
    for (std::size_t i = 0; i < dout.size(); ++i) (*din)[i] *= s.values[i];
  }
};

template <typename T>
class PoolLayer final : public Layer<T> {
 public:
  PoolLayer(const LayerSpec& spec, const Shape& in, const Shape& out)
      : Layer<T>(spec, in, out), max_(spec.kind == LayerKind::max_pool) {}

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<PoolLayer>(*this); }

  void forward(const BasicTensor<T>& in, BasicTensor<T>& out, Scratch<T>& s, bool, Rng&) const override {
    const std::size_t batch = in.extent(0);
    const std::size_t w = this->spec_.window;
    const std::size_t ih = this->in_[1], iw = this->in_[2];
    const std::size_t oh = this->out_[1], ow = this->out_[2];
    const std::size_t planes = batch * this->in_[0];
    out.resize(this->batch_shape(batch));
    if (max_) s.indices.resize(out.size());
    const T inv_area = T{1} / static_cast<T>(w * w);

    for (std::size_t p = 0; p < planes; ++p) {
      const T* src = in.data() + p * ih * iw;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const std::size_t o = (p * oh + oy) * ow + ox;
          if (max_) {
            std::size_t best = oy * w * iw + ox * w;
            for (std::size_t dy = 0; dy < w; ++dy)
              for (std::size_t dx = 0; dx < w; ++dx) {
                const std::size_t idx = (oy * w + dy) * iw + ox * w + dx;
                if (src[idx] > src[best]) best = idx;
              }
            out[o] = src[best];
            s.indices[o] = static_cast<std::uint32_t>(p * ih * iw + best);
          } else {
            T sum{0};
            for (std::size_t dy = 0; dy < w; ++dy)
              for (std::size_t dx = 0; dx < w; ++dx) sum += src[(oy * w + dy) * iw + ox * w + dx];
            out[o] = sum * inv_area;
          }
        }
      }
    }
  }

  void backward(const BasicTensor<T>& in, const BasicTensor<T>&, const BasicTensor<T>& dout,
                BasicTensor<T>* din, const Scratch<T>& s, bool,
                std::vector<BasicTensor<T>>&) const override {
    if (!din) return;
    din->resize(in.shape());
    din->fill(T{0});
    if (max_) {
      for (std::size_t o = 0; o < dout.size(); ++o) (*din)[s.indices[o]] += dout[o];
      return;
    }
    const std::size_t w = this->spec_.window;
    const std::size_t ih = this->in_[1], iw = this->in_[2];
    const std::size_t oh = this->out_[1], ow = this->out_[2];
    const std::size_t planes = in.extent(0) * this->in_[0];
    const T inv_area = T{1} / static_cast<T>(w * w);
    for (std::size_t p = 0; p < planes; ++p) {
      T* dst = din->data() + p * ih * iw;
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T g = dout[(p * oh + oy) * ow + ox] * inv_area;
          for (std::size_t dy = 0; dy < w; ++dy)
            for (std::size_t dx = 0; dx < w; ++dx) dst[(oy * w + dy) * iw + ox * w + dx] += g;
        }
    }
  }

 private:
  bool max_;
};

// Per-channel normalization for {C,H,W} inputs, per-feature for flat inputs.
// params: gamma, beta. buffers: running mean, running variance.
template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  BatchNormLayer(const LayerSpec& spec, const Shape& in, const Shape& out)
      : Layer<T>(spec, in, out) {
    const std::size_t c = channels();
    this->params.emplace_back(Shape{c}, T{1});
    this->params.emplace_back(Shape{c}, T{0});
    this->buffers.emplace_back(Shape{c}, T{0});
    this->buffers.emplace_back(Shape{c}, T{1});
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNormLayer>(*this); }

  // scratch.values holds x-hat; scratch.stats holds [mean | var | inv_std].
  void forward(const BasicTensor<T>& in, BasicTensor<T>& out, Scratch<T>& s, bool train,
               Rng&) const override {
    const std::size_t batch = in.extent(0);
    const std::size_t c_count = channels();
    const std::size_t spatial = shape_size(this->in_) / c_count;
    const double m = static_cast<double>(batch * spatial);
    out.resize(in.shape());
    s.values.resize(in.size());
    s.stats.assign(3 * c_count, 0.0);
    s.batch_stats = train && batch * spatial > 1;

    for (std::size_t c = 0; c < c_count; ++c) {
      double mean = 0.0, var = 0.0;
      if (s.batch_stats) {
        for (std::size_t b = 0; b < batch; ++b) {
          const T* x = in.data() + (b * c_count + c) * spatial;
          for (std::size_t i = 0; i < spatial; ++i) mean += x[i];
        }
        mean /= m;
        for (std::size_t b = 0; b < batch; ++b) {
          const T* x = in.data() + (b * c_count + c) * spatial;
          for (std::size_t i = 0; i < spatial; ++i) {
            const double d = x[i] - mean;
            var += d * d;
          }
        }
        var /= m;
      } else {
        mean = this->buffers[0][c];
        var = this->buffers[1][c];
      }
      const double inv_std = 1.0 / std::sqrt(var + kBnEpsilon);
      s.stats[c] = mean;
      s.stats[c_count + c] = var;
      s.stats[2 * c_count + c] = inv_std;
      const T gamma = this->params[0][c], beta = this->params[1][c];
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * c_count + c) * spatial;
        for (std::size_t i = 0; i < spatial; ++i) {
          const T xhat = static_cast<T>((in[off + i] - mean) * inv_std);
          s.values[off + i] = xhat;
          out[off + i] = gamma * xhat + beta;
        }
      }
    }
  }

  void backward(const BasicTensor<T>& in, const BasicTensor<T>&, const BasicTensor<T>& dout,
                BasicTensor<T>* din, const Scratch<T>& s, bool param_grads,
                std::vector<BasicTensor<T>>& grads) const override {
    const std::size_t batch = in.extent(0);
    const std::size_t c_count = channels();
    const std::size_t spatial = shape_size(this->in_) / c_count;
    const double m = static_cast<double>(batch * spatial);
    if (din) din->resize(in.shape());

    for (std::size_t c = 0; c < c_count; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * c_count + c) * spatial;
        for (std::size_t i = 0; i < spatial; ++i) {
          sum_dy += dout[off + i];
          sum_dy_xhat += static_cast<double>(dout[off + i]) * s.values[off + i];
        }
      }
      if (param_grads) {
        grads[0][c] += static_cast<T>(sum_dy_xhat);
        grads[1][c] += static_cast<T>(sum_dy);
      }
      if (!din) continue;
      const double gamma = this->params[0][c];
      const double inv_std = s.stats[2 * c_count + c];
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * c_count + c) * spatial;
        for (std::size_t i = 0; i < spatial; ++i) {
          double g;
          if (s.batch_stats) {
            g = gamma * inv_std / m * (m * dout[off + i] - sum_dy - s.values[off + i] * sum_dy_xhat);
          } else {
            g = gamma * inv_std * dout[off + i];
          }
          (*din)[off + i] = static_cast<T>(g);
        }
      }
    }
  }

  void commit(const Scratch<T>& s) override {
    if (!s.batch_stats) return;
    const std::size_t c_count = channels();
    const double m = static_cast<double>(s.values.size() / c_count);
    const double unbias = m > 1 ? m / (m - 1) : 1.0;
    for (std::size_t c = 0; c < c_count; ++c) {
      auto& mean = this->buffers[0][c];
      auto& var = this->buffers[1][c];
      mean = static_cast<T>((1 - kBnMomentum) * mean + kBnMomentum * s.stats[c]);
      var = static_cast<T>((1 - kBnMomentum) * var + kBnMomentum * s.stats[c_count + c] * unbias);
    }
  }

 private:
  std::size_t channels() const { return this->in_.size() == 3 ? this->in_[0] : shape_size(this->in_); }
};

template <typename T>
class SoftmaxLayer final : public Layer<T> {
 public:
  using Layer<T>::Layer;

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<SoftmaxLayer>(*this); }

  void forward(const BasicTensor<T>& in, BasicTensor<T>& out, Scratch<T>&, bool, Rng&) const override {
    out = softmax_rows(in);
  }

  void backward(const BasicTensor<T>&, const BasicTensor<T>& out, const BasicTensor<T>& dout,
                BasicTensor<T>* din, const Scratch<T>&, bool,
                std::vector<BasicTensor<T>>&) const override {
    if (!din) return;
    din->resize(out.shape());
    const std::size_t n = out.extent(1);
    for (std::size_t b = 0; b < out.extent(0); ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += static_cast<double>(dout[b * n + j]) * out[b * n + j];
      for (std::size_t j = 0; j < n; ++j)
        (*din)[b * n + j] = static_cast<T>(out[b * n + j] * (dout[b * n + j] - dot));
    }
  }
};

}  // namespace

template <typename T>
void fan_in_uniform(std::span<T> values, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (auto& v : values) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * limit);
}

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in, const Shape& out,
                                     std::uint64_t seed) {
  switch (spec.kind) {
    case LayerKind::conv:
      return std::make_unique<ConvLayer<T>>(spec, in, out, seed);
    case LayerKind::fully_connected:
      return std::make_unique<DenseLayer<T>>(spec, in, out, seed);
    case LayerKind::relu:
      return std::make_unique<ReluLayer<T>>(spec, in, out);
    case LayerKind::dropout:
      return std::make_unique<DropoutLayer<T>>(spec, in, out);
    case LayerKind::max_pool:
    case LayerKind::avg_pool:
      return std::make_unique<PoolLayer<T>>(spec, in, out);
    case LayerKind::batch_norm:
      return std::make_unique<BatchNormLayer<T>>(spec, in, out);
    case LayerKind::softmax:
      return std::make_unique<SoftmaxLayer<T>>(spec, in, out);
  }
  throw ConfigError("layers", "unhandled layer kind");
}

template std::unique_ptr<Layer<float>> make_layer<float>(const LayerSpec&, const Shape&,
                                                         const Shape&, std::uint64_t);
template std::unique_ptr<Layer<double>> make_layer<double>(const LayerSpec&, const Shape&,
                                                           const Shape&, std::uint64_t);
template void fan_in_uniform<float>(std::span<float>, std::size_t, Rng&);
template void fan_in_uniform<double>(std::span<double>, std::size_t, Rng&);

}  // namespace treecnn::detail
