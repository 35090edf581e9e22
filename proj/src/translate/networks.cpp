#include "handsynth/translate/networks.hpp"

#include <algorithm>

#include "handsynth/core/error.hpp"

namespace handsynth::translate {

using nn::Conv2d;
using nn::ConvTranspose2d;
using nn::InstanceNorm2d;
using nn::LeakyReLU;
using nn::ReflectionPad2d;
using nn::ReLU;
using nn::ResidualBlock;
using nn::Shape;
using nn::Tanh;
using nn::Tensor;

std::string to_string(Normalization norm) { return norm == Normalization::Instance ? "instance" : "none"; }

Normalization parse_normalization(const std::string& name) {
  if (name == "instance") return Normalization::Instance;
  if (name == "none") return Normalization::None;
  throw Error(ErrorCode::ConfigInvalid, "unknown normalization '" + name + "'");
}

// ------------------------------------------------------------------ configs

void GeneratorConfig::validate() const {
  if (input_size < 1 || base_channels < 1 || n_res_blocks < 0 || n_downsamples < 0 || in_channels < 1 ||
      out_channels < 1) {
    throw Error(ErrorCode::ConfigInvalid, "generator sizes must be positive");
  }
  if (input_size % (1 << n_downsamples) != 0) {
    throw Error(ErrorCode::ConfigInvalid, "input_size " + std::to_string(input_size) + " not divisible by 2^" +
                                              std::to_string(n_downsamples));
  }
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"input_size", input_size},       {"base_channels", base_channels}, {"n_res_blocks", n_res_blocks},
          {"n_downsamples", n_downsamples}, {"in_channels", in_channels},     {"out_channels", out_channels},
          {"norm", to_string(norm)}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.input_size = j.at("input_size");
  c.base_channels = j.at("base_channels");
  c.n_res_blocks = j.at("n_res_blocks");
  c.n_downsamples = j.at("n_downsamples");
  c.in_channels = j.at("in_channels");
  c.out_channels = j.at("out_channels");
  c.norm = parse_normalization(j.at("norm"));
  return c;
}

int patch_receptive_field(int n_layers) {
  // head (k4 s1) and the stride-1 layer, then n_layers stride-2 k4 layers
  std::vector<nn::ConvGeometry> chain(static_cast<std::size_t>(std::max(0, n_layers)), {4, 2, 1});
  chain.push_back({4, 1, 1});
  chain.push_back({4, 1, 1});
  return nn::receptive_field(chain);
}

void DiscriminatorConfig::validate() const {
  if (base_channels < 1 || n_layers < 0 || in_channels < 1) {
    throw Error(ErrorCode::ConfigInvalid, "discriminator sizes must be positive");
  }
  const int rf = translate::patch_receptive_field(n_layers);
  if (rf != patch_receptive_field) {
    throw Error(ErrorCode::ConfigInvalid, std::to_string(n_layers) + " stride-2 layers give a " + std::to_string(rf) +
                                              "px receptive field, config asks for " +
                                              std::to_string(patch_receptive_field));
  }
}

nlohmann::json DiscriminatorConfig::to_json() const {
  return {{"patch_receptive_field", patch_receptive_field},
          {"base_channels", base_channels},
          {"n_layers", n_layers},
          {"in_channels", in_channels},
          {"norm", to_string(norm)}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
  DiscriminatorConfig c;
  c.patch_receptive_field = j.at("patch_receptive_field");
  c.base_channels = j.at("base_channels");
  c.n_layers = j.at("n_layers");
  c.in_channels = j.at("in_channels");
  c.norm = parse_normalization(j.at("norm"));
  return c;
}

// ---------------------------------------------------------------- generator

Generator::Generator(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const bool norm = cfg_.norm == Normalization::Instance;
  int ch = cfg_.base_channels;

  net_.emplace<ReflectionPad2d>(3);
  net_.emplace<Conv2d>(cfg_.in_channels, ch, 7);
  if (norm) net_.emplace<InstanceNorm2d>();
  net_.emplace<ReLU>();

  for (int i = 0; i < cfg_.n_downsamples; ++i) {
    net_.emplace<Conv2d>(ch, ch * 2, 3, 2, 1);
    if (norm) net_.emplace<InstanceNorm2d>();
    net_.emplace<ReLU>();
    ch *= 2;
  }

  first_block_index_ = net_.size();
  for (int i = 0; i < cfg_.n_res_blocks; ++i) blocks_.push_back(&net_.emplace<ResidualBlock>(ch, norm));

  for (int i = 0; i < cfg_.n_downsamples; ++i) {
    net_.emplace<ConvTranspose2d>(ch, ch / 2, 3, 2, 1, 1);
    if (norm) net_.emplace<InstanceNorm2d>();
    net_.emplace<ReLU>();
    ch /= 2;
  }

  net_.emplace<ReflectionPad2d>(3);
  net_.emplace<Conv2d>(ch, cfg_.out_channels, 7);
  net_.emplace<Tanh>();
}

Tensor Generator::infer(const Tensor& x) const { return net_.infer(x); }

Shape Generator::bottleneck_shape(const Shape& in) const {
  Shape cur = in;
  for (std::size_t i = 0; i < first_block_index_; ++i) cur = net_.at(i).output_shape(cur);
  return cur;
}

std::vector<nn::Parameter*> Generator::parameters() {
  std::vector<nn::Parameter*> out;
  net_.collect_parameters(out);
  return out;
}

std::size_t Generator::parameter_count() { return nn::parameter_count(parameters()); }

void Generator::initialize(std::uint64_t seed, float stddev) {
  std::mt19937_64 rng(seed);
  net_.initialize(rng, stddev);
}

void Generator::zero_residual_path() {
  for (auto* block : blocks_) {
    std::vector<nn::Parameter*> params;
    block->collect_parameters(params);
    for (auto* p : params) std::fill(p->value.begin(), p->value.end(), 0.0f);
  }
}

// ------------------------------------------------------------ discriminator

Discriminator::Discriminator(const DiscriminatorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const bool norm = cfg_.norm == Normalization::Instance;
  const int base = cfg_.base_channels;
  int prev = cfg_.in_channels;
  int ch = base;

  for (int i = 0; i < cfg_.n_layers; ++i) {
    ch = base * std::min(1 << i, 8);
    net_.emplace<Conv2d>(prev, ch, 4, 2, 1);
    if (norm && i > 0) net_.emplace<InstanceNorm2d>();
    net_.emplace<LeakyReLU>(0.2f);
    prev = ch;
  }
  ch = base * std::min(1 << cfg_.n_layers, 8);
  net_.emplace<Conv2d>(prev, ch, 4, 1, 1);
  if (norm && cfg_.n_layers > 0) net_.emplace<InstanceNorm2d>();
  net_.emplace<LeakyReLU>(0.2f);
  net_.emplace<Conv2d>(ch, 1, 4, 1, 1);
}

void Discriminator::check_input(const Shape& in) const {
  const int rf = receptive_field();
  if (in.h < rf || in.w < rf) {
    throw Error(ErrorCode::InputTooSmall, "input " + std::to_string(in.h) + "x" + std::to_string(in.w) +
                                              " is smaller than the " + std::to_string(rf) + "px patch");
  }
}

Tensor Discriminator::forward(const Tensor& x) {
  check_input(x.shape());
  return net_.forward(x);
}

Tensor Discriminator::infer(const Tensor& x) const {
  check_input(x.shape());
  return net_.infer(x);
}

Shape Discriminator::score_shape(const Shape& in) const {
  check_input(in);
  return net_.output_shape(in);
}

int Discriminator::receptive_field() const {
  std::vector<nn::ConvGeometry> chain;
  net_.collect_geometry(chain);
  return nn::receptive_field(chain);
}

std::vector<nn::Parameter*> Discriminator::parameters() {
  std::vector<nn::Parameter*> out;
  net_.collect_parameters(out);
  return out;
}

std::size_t Discriminator::parameter_count() { return nn::parameter_count(parameters()); }

std::size_t Discriminator::dense_head_parameter_count(int input_size) {
  Shape cur{1, cfg_.in_channels, input_size, input_size};
  for (std::size_t i = 0; i + 1 < net_.size(); ++i) cur = net_.at(i).output_shape(cur);
  std::vector<nn::Parameter*> head;
  net_.at(net_.size() - 1).collect_parameters(head);
  const std::size_t trunk = parameter_count() - nn::parameter_count(head);
  return trunk + static_cast<std::size_t>(cur.c) * cur.h * cur.w + 1;
}

void Discriminator::initialize(std::uint64_t seed, float stddev) {
  std::mt19937_64 rng(seed);
  net_.initialize(rng, stddev);
}

// ------------------------------------------------------------------ builders

Generator build_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  Generator g(cfg);
  g.initialize(seed);
  return g;
}

Discriminator build_patch_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  Discriminator d(cfg);
  d.initialize(seed);
  return d;
}

Generator make_passthrough_generator(const GeneratorConfig& cfg) {
  if (cfg.norm != Normalization::None || cfg.in_channels != 3 || cfg.out_channels != 3 ||
      cfg.base_channels < 6 * (1 << cfg.n_downsamples)) {
    throw Error(ErrorCode::ConfigInvalid, "passthrough generator needs norm=none, RGB io and base_channels >= 6*2^n");
  }
  Generator g(cfg);
  for (auto* p : g.parameters()) std::fill(p->value.begin(), p->value.end(), 0.0f);

  auto& net = g.network();
  std::vector<Conv2d*> convs;
  std::vector<ConvTranspose2d*> ups;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (auto* c = dynamic_cast<Conv2d*>(&net.at(i))) convs.push_back(c);
    if (auto* u = dynamic_cast<ConvTranspose2d*>(&net.at(i))) ups.push_back(u);
  }
  // convs: input conv, n_downsamples stride-2 convs, output conv (residual convs live inside blocks)
  auto set_conv = [](Conv2d& conv, int out, int in, int ky, int kx, float v) {
    const int k = conv.kernel();
    conv.weight().value[((static_cast<std::size_t>(out) * conv.in_channels() + in) * k + ky) * k + kx] = v;
  };

  // ±x split: channel j carries sign (j / 3) of colour (j % 3).
  for (int j = 0; j < 6; ++j) set_conv(*convs.front(), j, j % 3, 3, 3, j < 3 ? 1.0f : -1.0f);

  int signal = 6;
  for (int level = 0; level < cfg.n_downsamples; ++level) {
    Conv2d& down = *convs[1 + level];
    ConvTranspose2d& up = *ups[cfg.n_downsamples - 1 - level];
    for (int j = 0; j < signal; ++j) {
      for (int q = 0; q < 4; ++q) {
        const int dy = q / 2;
        const int dx = q % 2;
        set_conv(down, j * 4 + q, j, dy + 1, dx + 1, 1.0f);
        // ConvTranspose weights are Cin×Cout×k×k.
        const std::size_t idx = ((static_cast<std::size_t>(j * 4 + q) * up.out_channels() + j) * 3 + dy + 1) * 3 + dx + 1;
        up.weight().value[idx] = 1.0f;
      }
    }
    signal *= 4;
  }

  for (int c = 0; c < 3; ++c) {
    set_conv(*convs.back(), c, c, 3, 3, 1.0f);
    set_conv(*convs.back(), c, c + 3, 3, 3, -1.0f);
  }
  return g;
}

ImageFrame translate(const ImageFrame& frame, const Generator& gen) {
  const int factor = 1 << gen.config().n_downsamples;
  if (frame.height() % factor != 0 || frame.width() % factor != 0) {
    throw Error(ErrorCode::ShapeIncompatible, "frame " + std::to_string(frame.height()) + "x" +
                                                  std::to_string(frame.width()) + " not divisible by " +
                                                  std::to_string(factor));
  }
  if (gen.config().in_channels != 3) throw Error(ErrorCode::ShapeIncompatible, "generator does not take RGB input");
  return nn::tensor_to_image(gen.infer(nn::image_to_tensor(frame)));
}

}  // namespace handsynth::translate
