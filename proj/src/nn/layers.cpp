#include "handsynth/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "handsynth/core/error.hpp"

namespace handsynth::nn {

namespace {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

int conv_out(int size, int kernel, int stride, int padding) { return (size + 2 * padding - kernel) / stride + 1; }

/// Unfolds a C×H×W image into (C·k·k) × (Ho·Wo) columns.
void im2col(const float* img, int channels, int h, int w, int k, int s, int p, int ho, int wo, float* cols) {
  const std::size_t plane_out = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * plane_out;
        const float* src = img + static_cast<std::size_t>(c) * h * w;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s - p + ky;
          float* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0f);
            continue;
          }
          const float* src_row = src + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s - p + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src_row[ix] : 0.0f;
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters columns back into the image (accumulating).
void col2im(const float* cols, int channels, int h, int w, int k, int s, int p, int ho, int wo, float* img) {
  const std::size_t plane_out = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * plane_out;
        float* dst = img + static_cast<std::size_t>(c) * h * w;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= h) continue;
          float* dst_row = dst + static_cast<std::size_t>(iy) * w;
          const float* src = row + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s - p + kx;
            if (ix >= 0 && ix < w) dst_row[ix] += src[ox];
          }
        }
      }
    }
  }
}

// A non-positive stddev selects fan-in scaling, √(2/fan_in).
void fill_normal(FloatBuffer& v, std::mt19937_64& rng, float stddev, double fan_in) {
  if (stddev <= 0.0f) stddev = static_cast<float>(std::sqrt(2.0 / fan_in));
  std::normal_distribution<float> dist(0.0f, stddev);
  for (float& x : v) x = dist(rng);
}

void require_channels(const Shape& s, int expected, const char* layer) {
  if (s.c != expected) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(layer) + " expects " + std::to_string(expected) + " channels, got " + s.str());
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), padding_(padding), has_bias_(bias),
      weight_("weight", static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel),
      bias_("bias", bias ? static_cast<std::size_t>(out_channels) : 0) {}

Shape Conv2d::output_shape(const Shape& in) const {
  require_channels(in, in_, "Conv2d");
  const int ho = conv_out(in.h, kernel_, stride_, padding_);
  const int wo = conv_out(in.w, kernel_, stride_, padding_);
  if (ho < 1 || wo < 1) throw Error(ErrorCode::InputTooSmall, "Conv2d input " + in.str() + " smaller than kernel");
  return {in.n, out_, ho, wo};
}

Tensor Conv2d::run(const Tensor& x, std::vector<FloatBuffer>* cols_out) const {
  const Shape os = output_shape(x.shape());
  const Shape& is = x.shape();
  const int kk = in_ * kernel_ * kernel_;
  const int plane = os.h * os.w;
  Tensor y(os);
  ConstMapRM w(weight_.value.data(), out_, kk);
  FloatBuffer scratch;
  if (cols_out) cols_out->resize(os.n);
  for (int n = 0; n < os.n; ++n) {
    FloatBuffer& cols = cols_out ? (*cols_out)[n] : scratch;
    cols.resize(static_cast<std::size_t>(kk) * plane);
    im2col(x.sample(n), in_, is.h, is.w, kernel_, stride_, padding_, os.h, os.w, cols.data());
    MapRM out(y.sample(n), out_, plane);
    out.noalias() = w * ConstMapRM(cols.data(), kk, plane);
    if (has_bias_) {
      for (int c = 0; c < out_; ++c) out.row(c).array() += bias_.value[c];
    }
  }
  return y;
}

Tensor Conv2d::forward(const Tensor& x) {
  in_shape_ = x.shape();
  return run(x, &cols_);
}

Tensor Conv2d::infer(const Tensor& x) const { return run(x, nullptr); }

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Shape& gs = grad_out.shape();
  const int kk = in_ * kernel_ * kernel_;
  const int plane = gs.h * gs.w;
  Tensor dx(in_shape_);
  ConstMapRM w(weight_.value.data(), out_, kk);
  MapRM dw(weight_.grad.data(), out_, kk);
  FloatBuffer dcols(static_cast<std::size_t>(kk) * plane);
  for (int n = 0; n < gs.n; ++n) {
    ConstMapRM dy(grad_out.sample(n), out_, plane);
    dw.noalias() += dy * ConstMapRM(cols_[n].data(), kk, plane).transpose();
    if (has_bias_) {
      for (int c = 0; c < out_; ++c) bias_.grad[c] += dy.row(c).sum();
    }
    MapRM dc(dcols.data(), kk, plane);
    dc.noalias() = w.transpose() * dy;
    col2im(dcols.data(), in_, in_shape_.h, in_shape_.w, kernel_, stride_, padding_, gs.h, gs.w, dx.sample(n));
  }
  return dx;
}

void Conv2d::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

void Conv2d::initialize(std::mt19937_64& rng, float stddev) {
  fill_normal(weight_.value, rng, stddev, double(in_) * kernel_ * kernel_);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0f);
}

void Conv2d::set_prefix(const std::string& prefix) {
  weight_.name = prefix + "weight";
  bias_.name = prefix + "bias";
}

// ------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int padding,
                                 int output_padding, bool bias)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), padding_(padding),
      output_padding_(output_padding), has_bias_(bias),
      weight_("weight", static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel),
      bias_("bias", bias ? static_cast<std::size_t>(out_channels) : 0) {
  if (output_padding >= stride) throw Error(ErrorCode::ConfigInvalid, "output_padding must be < stride");
}

Shape ConvTranspose2d::output_shape(const Shape& in) const {
  require_channels(in, in_, "ConvTranspose2d");
  return {in.n, out_, (in.h - 1) * stride_ - 2 * padding_ + kernel_ + output_padding_,
          (in.w - 1) * stride_ - 2 * padding_ + kernel_ + output_padding_};
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor ConvTranspose2d::infer(const Tensor& x) const {
  const Shape os = output_shape(x.shape());
  const Shape& is = x.shape();
  const int kk = out_ * kernel_ * kernel_;
  const int plane = is.h * is.w;
  Tensor y(os);
  ConstMapRM w(weight_.value.data(), in_, kk);
  FloatBuffer cols(static_cast<std::size_t>(kk) * plane);
  for (int n = 0; n < is.n; ++n) {
    MapRM c(cols.data(), kk, plane);
    c.noalias() = w.transpose() * ConstMapRM(x.sample(n), in_, plane);
    col2im(cols.data(), out_, os.h, os.w, kernel_, stride_, padding_, is.h, is.w, y.sample(n));
    if (has_bias_) {
      float* yn = y.sample(n);
      for (int ch = 0; ch < out_; ++ch) {
        float* p = yn + static_cast<std::size_t>(ch) * os.plane();
        for (std::size_t i = 0; i < os.plane(); ++i) p[i] += bias_.value[ch];
      }
    }
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
  const Shape& is = input_.shape();
  const Shape& gs = grad_out.shape();
  const int kk = out_ * kernel_ * kernel_;
  const int plane = is.h * is.w;
  Tensor dx(is);
  ConstMapRM w(weight_.value.data(), in_, kk);
  MapRM dw(weight_.grad.data(), in_, kk);
  FloatBuffer dcols(static_cast<std::size_t>(kk) * plane);
  for (int n = 0; n < is.n; ++n) {
    im2col(grad_out.sample(n), out_, gs.h, gs.w, kernel_, stride_, padding_, is.h, is.w, dcols.data());
    ConstMapRM dc(dcols.data(), kk, plane);
    MapRM(dx.sample(n), in_, plane).noalias() = w * dc;
    dw.noalias() += ConstMapRM(input_.sample(n), in_, plane) * dc.transpose();
    if (has_bias_) {
      const float* g = grad_out.sample(n);
      for (int ch = 0; ch < out_; ++ch) {
        const float* p = g + static_cast<std::size_t>(ch) * gs.plane();
        double sum = 0.0;
        for (std::size_t i = 0; i < gs.plane(); ++i) sum += p[i];
        bias_.grad[ch] += static_cast<float>(sum);
      }
    }
  }
  return dx;
}

void ConvTranspose2d::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

void ConvTranspose2d::initialize(std::mt19937_64& rng, float stddev) {
  // Each output pixel sees about k²/s² taps per input channel.
  fill_normal(weight_.value, rng, stddev, double(in_) * kernel_ * kernel_ / (stride_ * stride_));
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0f);
}

void ConvTranspose2d::set_prefix(const std::string& prefix) {
  weight_.name = prefix + "weight";
  bias_.name = prefix + "bias";
}

// -------------------------------------------------------- InstanceNorm2d

Tensor InstanceNorm2d::forward(const Tensor& x) {
  normalized_ = run(x, &inv_std_);
  return normalized_;
}

Tensor InstanceNorm2d::infer(const Tensor& x) const { return run(x, nullptr); }

Tensor InstanceNorm2d::run(const Tensor& x, std::vector<float>* inv_std) const {
  const Shape& s = x.shape();
  const std::size_t plane = s.plane();
  Tensor normalized(s);
  if (inv_std) inv_std->assign(static_cast<std::size_t>(s.n) * s.c, 0.0f);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = x.sample(n) + static_cast<std::size_t>(c) * plane;
      float* dst = normalized.sample(n) + static_cast<std::size_t>(c) * plane;
      double mean = 0.0;
      for (std::size_t i = 0; i < plane; ++i) mean += src[i];
      mean /= static_cast<double>(plane);
      double var = 0.0;
      for (std::size_t i = 0; i < plane; ++i) var += (src[i] - mean) * (src[i] - mean);
      var /= static_cast<double>(plane);
      const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
      if (inv_std) (*inv_std)[static_cast<std::size_t>(n) * s.c + c] = inv;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(src[i] - mean) * inv;
    }
  }
  return normalized;
}

Tensor InstanceNorm2d::backward(const Tensor& grad_out) {
  const Shape& s = grad_out.shape();
  const std::size_t plane = s.plane();
  Tensor dx(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* dy = grad_out.sample(n) + static_cast<std::size_t>(c) * plane;
      const float* xh = normalized_.sample(n) + static_cast<std::size_t>(c) * plane;
      float* out = dx.sample(n) + static_cast<std::size_t>(c) * plane;
      double mean_dy = 0.0;
      double mean_dy_xh = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        mean_dy += dy[i];
        mean_dy_xh += dy[i] * xh[i];
      }
      mean_dy /= static_cast<double>(plane);
      mean_dy_xh /= static_cast<double>(plane);
      const float inv = inv_std_[static_cast<std::size_t>(n) * s.c + c];
      for (std::size_t i = 0; i < plane; ++i) {
        out[i] = inv * static_cast<float>(dy[i] - mean_dy - xh[i] * mean_dy_xh);
      }
    }
  }
  return dx;
}

// ------------------------------------------------------- ReflectionPad2d

namespace {
int reflect(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}
}  // namespace

Tensor ReflectionPad2d::forward(const Tensor& x) {
  in_shape_ = x.shape();
  return infer(x);
}

Tensor ReflectionPad2d::infer(const Tensor& x) const {
  const Shape& s = x.shape();
  if (pad_ >= s.h || pad_ >= s.w) {
    throw Error(ErrorCode::InputTooSmall, "reflection pad " + std::to_string(pad_) + " on " + s.str());
  }
  Tensor y(output_shape(s));
  const int ho = s.h + 2 * pad_;
  const int wo = s.w + 2 * pad_;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < ho; ++oy) {
        const int iy = reflect(oy - pad_, s.h);
        for (int ox = 0; ox < wo; ++ox) y.at(n, c, oy, ox) = x.at(n, c, iy, reflect(ox - pad_, s.w));
      }
    }
  }
  return y;
}

Tensor ReflectionPad2d::backward(const Tensor& grad_out) {
  const Shape& s = in_shape_;
  Tensor dx(s);
  const int ho = s.h + 2 * pad_;
  const int wo = s.w + 2 * pad_;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < ho; ++oy) {
        const int iy = reflect(oy - pad_, s.h);
        for (int ox = 0; ox < wo; ++ox) dx.at(n, c, iy, reflect(ox - pad_, s.w)) += grad_out.at(n, c, oy, ox);
      }
    }
  }
  return dx;
}

// ------------------------------------------------------------ activations

Tensor ReLU::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor ReLU::infer(const Tensor& x) const {
  Tensor y = x;
  for (float& v : y.data()) v = v > 0.0f ? v : 0.0f;
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.numel(); ++i) {
    if (!(input_.data()[i] > 0.0f)) dx.data()[i] = 0.0f;
  }
  return dx;
}

Tensor LeakyReLU::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor LeakyReLU::infer(const Tensor& x) const {
  Tensor y = x;
  for (float& v : y.data()) v = v > 0.0f ? v : v * slope_;
  return y;
}

Tensor LeakyReLU::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.numel(); ++i) {
    if (!(input_.data()[i] > 0.0f)) dx.data()[i] *= slope_;
  }
  return dx;
}

Tensor Tanh::forward(const Tensor& x) {
  output_ = infer(x);
  return output_;
}

Tensor Tanh::infer(const Tensor& x) const {
  Tensor y = x;
  for (float& v : y.data()) v = std::tanh(v);
  return y;
}

Tensor Tanh::backward(const Tensor& grad_out) {
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.numel(); ++i) {
    const float t = output_.data()[i];
    dx.data()[i] *= 1.0f - t * t;
  }
  return dx;
}

// ------------------------------------------------------------ Sequential

Sequential& Sequential::add(LayerPtr layer) {
  layers_.push_back(std::move(layer));
  layers_.back()->set_prefix(prefix_ + std::to_string(layers_.size() - 1) + ".");
  return *this;
}

Tensor Sequential::forward(const Tensor& x) {
  Tensor cur = x;
  for (auto& l : layers_) cur = l->forward(cur);
  return cur;
}

Tensor Sequential::infer(const Tensor& x) const {
  Tensor cur = x;
  for (const auto& l : layers_) cur = l->infer(cur);
  return cur;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor cur = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

Shape Sequential::output_shape(const Shape& in) const {
  Shape cur = in;
  for (const auto& l : layers_) cur = l->output_shape(cur);
  return cur;
}

void Sequential::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->collect_parameters(out);
}

void Sequential::initialize(std::mt19937_64& rng, float stddev) {
  for (auto& l : layers_) l->initialize(rng, stddev);
}

void Sequential::collect_geometry(std::vector<ConvGeometry>& out) const {
  for (const auto& l : layers_) l->collect_geometry(out);
}

void Sequential::set_prefix(const std::string& prefix) {
  prefix_ = prefix;
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->set_prefix(prefix_ + std::to_string(i) + ".");
}

// --------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(int channels, bool normalize) {
  body_.emplace<ReflectionPad2d>(1);
  body_.emplace<Conv2d>(channels, channels, 3);
  if (normalize) body_.emplace<InstanceNorm2d>();
  body_.emplace<ReLU>();
  body_.emplace<ReflectionPad2d>(1);
  body_.emplace<Conv2d>(channels, channels, 3);
  if (normalize) body_.emplace<InstanceNorm2d>();
}

Tensor ResidualBlock::forward(const Tensor& x) {
  Tensor y = body_.forward(x);
  for (std::size_t i = 0; i < y.numel(); ++i) y.data()[i] += x.data()[i];
  return y;
}

Tensor ResidualBlock::infer(const Tensor& x) const {
  Tensor y = body_.infer(x);
  for (std::size_t i = 0; i < y.numel(); ++i) y.data()[i] += x.data()[i];
  return y;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
  Tensor dx = body_.backward(grad_out);
  for (std::size_t i = 0; i < dx.numel(); ++i) dx.data()[i] += grad_out.data()[i];
  return dx;
}

// ---------------------------------------------------------------- helpers

int receptive_field(const std::vector<ConvGeometry>& chain) {
  int rf = 1;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) rf = (rf - 1) * it->stride + it->kernel;
  return rf;
}

std::size_t parameter_count(const std::vector<Parameter*>& params) {
  std::size_t total = 0;
  for (const auto* p : params) total += p->value.size();
  return total;
}

void zero_grad(const std::vector<Parameter*>& params) {
  for (auto* p : params) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
}

std::vector<NamedTensor> export_state(const std::vector<Parameter*>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back({p->name, {p->value.begin(), p->value.end()}});
  return out;
}

void import_state(const std::vector<Parameter*>& params, const std::vector<NamedTensor>& state) {
  if (params.size() != state.size()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(params.size()) + " tensors, got " +
                                              std::to_string(state.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name != state[i].name || params[i]->value.size() != state[i].values.size()) {
      throw Error(ErrorCode::ShapeMismatch, "tensor '" + state[i].name + "' does not match '" + params[i]->name + "'");
    }
    params[i]->value.assign(state[i].values.begin(), state[i].values.end());
  }
}

}  // namespace handsynth::nn
