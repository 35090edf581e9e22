#include "handsynth/compose/composer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "handsynth/core/error.hpp"
#include "handsynth/core/image_io.hpp"
#include "handsynth/translate/losses.hpp"

namespace handsynth::compose {

namespace fs = std::filesystem;
using nn::Tensor;
using translate::DiscriminatorConfig;
using translate::GeneratorConfig;
using translate::Normalization;

// ------------------------------------------------------------- architecture

void ComposerArchitecture::validate() const {
  if (image_size < 1 || base_channels < 1 || n_res_blocks < 0 || n_downsamples < 0 || disc_layers < 0 ||
      disc_base_channels < 1 || noise_channels < 1) {
    throw Error(ErrorCode::ConfigInvalid, "composer architecture sizes must be positive");
  }
  if (!(init_stddev >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "compose init_stddev must be >= 0");
  if (image_size % (1 << n_downsamples) != 0) {
    throw Error(ErrorCode::ConfigInvalid, "compose image_size must be divisible by 2^n_downsamples");
  }
  if (image_size < translate::patch_receptive_field(disc_layers)) {
    throw Error(ErrorCode::ConfigInvalid, "compose image_size is smaller than the discriminator patch");
  }
}

nlohmann::json ComposerArchitecture::to_json() const {
  return {{"image_size", image_size},       {"base_channels", base_channels},
          {"n_res_blocks", n_res_blocks},   {"n_downsamples", n_downsamples},
          {"disc_layers", disc_layers},     {"disc_base_channels", disc_base_channels},
          {"noise_channels", noise_channels}, {"init_stddev", init_stddev}};
}

ComposerArchitecture ComposerArchitecture::from_json(const nlohmann::json& j) {
  ComposerArchitecture a;
  a.image_size = j.at("image_size");
  a.base_channels = j.at("base_channels");
  a.n_res_blocks = j.at("n_res_blocks");
  a.n_downsamples = j.at("n_downsamples");
  a.disc_layers = j.at("disc_layers");
  a.disc_base_channels = j.at("disc_base_channels");
  a.noise_channels = j.at("noise_channels");
  a.init_stddev = j.value("init_stddev", 0.0);
  return a;
}

ComposerArchitecture ComposerArchitecture::from_config(const KeyValueConfig& cfg) {
  ComposerArchitecture a;
  a.image_size = static_cast<int>(cfg.get_int("compose.image_size", a.image_size));
  a.base_channels = static_cast<int>(cfg.get_int("compose.base_channels", a.base_channels));
  a.n_res_blocks = static_cast<int>(cfg.get_int("compose.n_res_blocks", a.n_res_blocks));
  a.n_downsamples = static_cast<int>(cfg.get_int("compose.n_downsamples", a.n_downsamples));
  a.disc_layers = static_cast<int>(cfg.get_int("compose.disc_layers", a.disc_layers));
  a.disc_base_channels = static_cast<int>(cfg.get_int("compose.disc_base_channels", a.disc_base_channels));
  a.noise_channels = static_cast<int>(cfg.get_int("compose.noise_channels", a.noise_channels));
  a.init_stddev = cfg.get_double("compose.init_stddev", a.init_stddev);
  try {
    a.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("compose.*: ") + e.what());
  }
  return a;
}

GeneratorConfig ComposerArchitecture::background_generator(int vocab) const {
  GeneratorConfig g;
  g.input_size = image_size;
  g.base_channels = base_channels;
  g.n_res_blocks = n_res_blocks;
  g.n_downsamples = n_downsamples;
  g.in_channels = noise_channels + vocab;
  g.out_channels = 3;
  g.norm = Normalization::None;
  return g;
}

GeneratorConfig ComposerArchitecture::foreground_generator(int vocab) const {
  GeneratorConfig g = background_generator(vocab);
  g.in_channels = 3 + 1 + 1 + vocab;
  return g;
}

DiscriminatorConfig ComposerArchitecture::background_discriminator(int vocab) const {
  DiscriminatorConfig d;
  d.n_layers = disc_layers;
  d.patch_receptive_field = translate::patch_receptive_field(disc_layers);
  d.base_channels = disc_base_channels;
  d.in_channels = 3 + vocab;
  d.norm = Normalization::None;
  return d;
}

DiscriminatorConfig ComposerArchitecture::foreground_discriminator(int vocab) const {
  DiscriminatorConfig d = background_discriminator(vocab);
  d.in_channels = 3 + 1 + 1 + vocab;
  return d;
}

// ----------------------------------------------------------------- schedule

void ComposerSchedule::validate() const {
  if (fg_epochs < 0 || bg_epochs < 0) throw Error(ErrorCode::ConfigInvalid, "composer epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::ConfigInvalid, "composer batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw Error(ErrorCode::ConfigInvalid, "composer lr0 must be > 0");
  if (l1_weight < 0.0) throw Error(ErrorCode::ConfigInvalid, "composer l1_weight must be >= 0");
  if (disc_weight_decay < 0.0) throw Error(ErrorCode::ConfigInvalid, "composer disc_weight_decay must be >= 0");
  if (instance_noise < 0.0) throw Error(ErrorCode::ConfigInvalid, "composer instance_noise must be >= 0");
}

nlohmann::json ComposerSchedule::to_json() const {
  return {{"fg_epochs", fg_epochs}, {"bg_epochs", bg_epochs},         {"batch_size", batch_size},
          {"lr0", lr0},             {"seed", seed},                   {"beta1", optimizer.beta1},
          {"beta2", optimizer.beta2}, {"l1_weight", l1_weight}, {"instance_noise", instance_noise},
          {"disc_weight_decay", disc_weight_decay}};
}

ComposerSchedule ComposerSchedule::from_json(const nlohmann::json& j) {
  ComposerSchedule s;
  s.fg_epochs = j.at("fg_epochs");
  s.bg_epochs = j.at("bg_epochs");
  s.batch_size = j.at("batch_size");
  s.lr0 = j.at("lr0");
  s.seed = j.at("seed");
  s.optimizer.beta1 = j.at("beta1");
  s.optimizer.beta2 = j.at("beta2");
  s.l1_weight = j.at("l1_weight");
  s.instance_noise = j.at("instance_noise");
  s.disc_weight_decay = j.at("disc_weight_decay");
  return s;
}

ComposerSchedule ComposerSchedule::from_config(const KeyValueConfig& cfg) {
  ComposerSchedule s;
  s.fg_epochs = static_cast<int>(cfg.get_int("compose.fg_epochs", s.fg_epochs));
  s.bg_epochs = static_cast<int>(cfg.get_int("compose.bg_epochs", s.bg_epochs));
  s.batch_size = static_cast<int>(cfg.get_int("compose.batch_size", s.batch_size));
  s.lr0 = cfg.get_double("compose.lr0", s.lr0);
  s.l1_weight = cfg.get_double("compose.l1_weight", s.l1_weight);
  s.instance_noise = cfg.get_double("compose.instance_noise", s.instance_noise);
  s.disc_weight_decay = cfg.get_double("compose.disc_weight_decay", s.disc_weight_decay);
  s.seed = static_cast<std::uint64_t>(cfg.get_int("compose.seed", static_cast<long long>(s.seed)));
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("compose.*: ") + e.what());
  }
  return s;
}

// --------------------------------------------------------------- checkpoint

namespace {

std::vector<double> flatten(const std::vector<PhaseLoss>& h) {
  std::vector<double> out;
  for (const auto& p : h) out.insert(out.end(), {p.loss_d, p.loss_g});
  return out;
}

std::vector<PhaseLoss> unflatten(const std::vector<double>& flat) {
  if (flat.size() % 2 != 0) throw Error(ErrorCode::ShapeMismatch, "composer history has odd length");
  std::vector<PhaseLoss> out;
  for (std::size_t i = 0; i < flat.size(); i += 2) out.push_back({flat[i], flat[i + 1]});
  return out;
}

}  // namespace

CheckpointFile ComposerCheckpoint::to_file() const {
  CheckpointFile f;
  nlohmann::json cfg = {{"architecture", architecture.to_json()}, {"schedule", schedule.to_json()},
                        {"vocabulary", vocabulary},               {"bg_epochs_done", bg_epochs_done},
                        {"fg_epochs_done", fg_epochs_done}};
  f.put_text("composer/config", cfg.dump());
  f.put_tensors("composer/bg_gen", bg_gen);
  f.put_tensors("composer/bg_disc", bg_disc);
  f.put_tensors("composer/fg_gen", fg_gen);
  f.put_tensors("composer/fg_disc", fg_disc);
  f.put_doubles("composer/bg_history", flatten(bg_history));
  f.put_doubles("composer/fg_history", flatten(fg_history));
  return f;
}

ComposerCheckpoint ComposerCheckpoint::from_file(const CheckpointFile& f) {
  ComposerCheckpoint ck;
  const auto cfg = nlohmann::json::parse(f.text("composer/config"));
  ck.architecture = ComposerArchitecture::from_json(cfg.at("architecture"));
  ck.schedule = ComposerSchedule::from_json(cfg.at("schedule"));
  ck.vocabulary = cfg.at("vocabulary").get<std::vector<std::string>>();
  ck.bg_epochs_done = cfg.at("bg_epochs_done");
  ck.fg_epochs_done = cfg.at("fg_epochs_done");
  ck.bg_gen = f.tensors("composer/bg_gen");
  ck.bg_disc = f.tensors("composer/bg_disc");
  ck.fg_gen = f.tensors("composer/fg_gen");
  ck.fg_disc = f.tensors("composer/fg_disc");
  ck.bg_history = unflatten(f.doubles("composer/bg_history"));
  ck.fg_history = unflatten(f.doubles("composer/fg_history"));
  if (ck.vocabulary.empty()) throw Error(ErrorCode::ConfigInvalid, "composer checkpoint has an empty vocabulary");
  return ck;
}

bool operator==(const ComposerCheckpoint& a, const ComposerCheckpoint& b) {
  return a.architecture.to_json() == b.architecture.to_json() && a.schedule.to_json() == b.schedule.to_json() &&
         a.vocabulary == b.vocabulary && a.bg_gen == b.bg_gen && a.bg_disc == b.bg_disc && a.fg_gen == b.fg_gen &&
         a.fg_disc == b.fg_disc && a.bg_epochs_done == b.bg_epochs_done && a.fg_epochs_done == b.fg_epochs_done &&
         a.bg_history == b.bg_history && a.fg_history == b.fg_history;
}

// ----------------------------------------------------------- SceneComposer

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int checked_vocab(const std::vector<std::string>& vocab) {
  if (vocab.empty()) throw Error(ErrorCode::ConfigInvalid, "composer vocabulary is empty");
  return static_cast<int>(vocab.size());
}

Tensor gaussian_noise(int channels, int h, int w, std::mt19937_64& rng) {
  Tensor t({1, channels, h, w});
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

SceneComposer::SceneComposer(const ComposerArchitecture& arch, std::vector<std::string> vocabulary, std::uint64_t seed)
    : arch_(arch),
      vocab_(std::move(vocabulary)),
      bg_gen_(arch.background_generator(checked_vocab(vocab_))),
      fg_gen_(arch.foreground_generator(checked_vocab(vocab_))),
      bg_disc_(arch.background_discriminator(checked_vocab(vocab_))),
      fg_disc_(arch.foreground_discriminator(checked_vocab(vocab_))) {
  arch_.validate();
  const auto stddev = static_cast<float>(arch_.init_stddev);
  bg_gen_.initialize(mix_seed(seed, 0), stddev);
  fg_gen_.initialize(mix_seed(seed, 1), stddev);
  bg_disc_.initialize(mix_seed(seed, 2), stddev);
  fg_disc_.initialize(mix_seed(seed, 3), stddev);
}

SceneComposer::SceneComposer(const ComposerCheckpoint& ck) : SceneComposer(ck.architecture, ck.vocabulary, 0) {
  nn::import_state(bg_gen_.parameters(), ck.bg_gen);
  nn::import_state(fg_gen_.parameters(), ck.fg_gen);
  nn::import_state(bg_disc_.parameters(), ck.bg_disc);
  nn::import_state(fg_disc_.parameters(), ck.fg_disc);
  bg_epochs_done = ck.bg_epochs_done;
  fg_epochs_done = ck.fg_epochs_done;
}

int SceneComposer::label_index(const std::string& label) const {
  const auto it = std::find(vocab_.begin(), vocab_.end(), label);
  if (it == vocab_.end()) throw Error(ErrorCode::UnknownDomain, "domain '" + label + "' is not in the vocabulary");
  return static_cast<int>(it - vocab_.begin());
}

void SceneComposer::check_size(int height, int width) const {
  const int f = 1 << arch_.n_downsamples;
  if (height < f || width < f || height % f != 0 || width % f != 0) {
    throw Error(ErrorCode::ShapeIncompatible, std::to_string(height) + "x" + std::to_string(width) +
                                                  " is not a positive multiple of " + std::to_string(f));
  }
}

Tensor SceneComposer::one_hot(int label, int height, int width) const {
  Tensor t({1, static_cast<int>(vocab_.size()), height, width});
  std::fill(t.sample(0) + static_cast<std::size_t>(label) * height * width,
            t.sample(0) + static_cast<std::size_t>(label + 1) * height * width, 1.0f);
  return t;
}

Tensor SceneComposer::background_input(const std::string& label, std::uint64_t noise_seed, int height,
                                       int width) const {
  const int idx = label_index(label);
  check_size(height, width);
  std::mt19937_64 rng(noise_seed);
  const Tensor noise = gaussian_noise(arch_.noise_channels, height, width, rng);
  const Tensor oh = one_hot(idx, height, width);
  return nn::concat_channels({&noise, &oh});
}

ImageFrame SceneComposer::generate_background(const std::string& label, std::uint64_t noise_seed, int height,
                                              int width) const {
  return nn::tensor_to_image(bg_gen_.infer(background_input(label, noise_seed, height, width)));
}

Tensor SceneComposer::foreground_input(const LayoutMap& layout, const ImageFrame& bg) const {
  if (layout.mask.height() != bg.height() || layout.mask.width() != bg.width()) {
    throw Error(ErrorCode::ShapeMismatch, "layout mask and background differ in size");
  }
  const int idx = label_index(layout.domain_label);
  check_size(bg.height(), bg.width());
  const Tensor bg_t = nn::image_to_tensor(bg);
  const Tensor mask_t = nn::mask_to_tensor(layout.mask);
  const Tensor heat = fingertip_channel(layout);
  const Tensor oh = one_hot(idx, bg.height(), bg.width());
  return nn::concat_channels({&bg_t, &mask_t, &heat, &oh});
}

ImageFrame SceneComposer::generate_foreground(const LayoutMap& layout, const ImageFrame& bg) const {
  if (fg_epochs_done <= 0) throw Error(ErrorCode::UntrainedModel, "foreground generator has not been trained");
  const Tensor in = foreground_input(layout, bg);
  const ImageFrame rendered = nn::tensor_to_image(fg_gen_.infer(in));
  return composite(rendered, bg, layout.mask);
}

ComposerCheckpoint SceneComposer::checkpoint(const ComposerSchedule& schedule, const std::vector<PhaseLoss>& bg_history,
                                             const std::vector<PhaseLoss>& fg_history) {
  ComposerCheckpoint ck;
  ck.architecture = arch_;
  ck.schedule = schedule;
  ck.vocabulary = vocab_;
  ck.bg_gen = nn::export_state(bg_gen_.parameters());
  ck.bg_disc = nn::export_state(bg_disc_.parameters());
  ck.fg_gen = nn::export_state(fg_gen_.parameters());
  ck.fg_disc = nn::export_state(fg_disc_.parameters());
  ck.bg_epochs_done = bg_epochs_done;
  ck.fg_epochs_done = fg_epochs_done;
  ck.bg_history = bg_history;
  ck.fg_history = fg_history;
  return ck;
}

// ----------------------------------------------------------------- training

namespace {

/// Per-sample tensors prepared once before training.
struct Prepared {
  Tensor real;       // 1×3×S×S in [−1,1]
  Tensor background; // real with the hand inpainted
  Tensor mask;       // 1×1×S×S
  Tensor cond;       // mask | heatmap | one-hot  (discriminator conditioning)
  Tensor fg_input;   // background | cond       (foreground generator input)
  Tensor one_hot;
};

Tensor from_grad(const nn::Shape& shape, std::vector<float> g) {
  Tensor t(shape);
  t.data().assign(g.begin(), g.end());
  return t;
}

/// Copy of `t` with N(0, σ²) added to its first three (image) channels.
Tensor with_instance_noise(const Tensor& t, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return t;
  Tensor out = t;
  std::normal_distribution<float> dist(0.0f, static_cast<float>(sigma));
  const nn::Shape s = t.shape();
  for (int n = 0; n < s.n; ++n) {
    float* p = out.sample(n);
    for (std::size_t i = 0; i < 3 * s.plane(); ++i) p[i] += dist(rng);
  }
  return out;
}

double lsgan_step(translate::Discriminator& d, const Tensor& input, double target) {
  std::vector<float> grad;
  Tensor s = d.forward(input);
  const double loss = translate::squared_error_to<float>(s.view(), target, &grad);
  d.backward(from_grad(s.shape(), std::move(grad)));
  return loss;
}

void write_composer_csv(const fs::path& path, const std::vector<PhaseLoss>& bg, const std::vector<PhaseLoss>& fg) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(10);
  out << "phase,epoch,loss_d,loss_g\n";
  for (std::size_t e = 0; e < bg.size(); ++e) out << "bg," << e << ',' << bg[e].loss_d << ',' << bg[e].loss_g << '\n';
  for (std::size_t e = 0; e < fg.size(); ++e) out << "fg," << e << ',' << fg[e].loss_d << ',' << fg[e].loss_g << '\n';
}

}  // namespace

ComposerCheckpoint train_composer(const std::vector<ComposerSample>& samples, const ComposerArchitecture& arch,
                                  const ComposerSchedule& schedule, const fs::path& out_dir) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDomain, "no composer training samples");
  arch.validate();
  schedule.validate();
  fs::create_directories(out_dir);

  std::vector<std::string> vocab;
  for (const auto& s : samples) vocab.push_back(s.domain);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());

  SceneComposer sc(arch, vocab, schedule.seed);
  const int size = arch.image_size;

  std::vector<Prepared> data;
  for (const auto& s : samples) {
    if (s.hand.mask.height() != s.image.height() || s.hand.mask.width() != s.image.width()) {
      throw Error(ErrorCode::ShapeMismatch, "sample mask and image differ in size");
    }
    ImageFrame img = s.image;
    BinaryMask mask = s.hand.mask;
    Point2D tip{static_cast<double>(s.hand.fingertip.x), static_cast<double>(s.hand.fingertip.y)};
    if (img.height() != size || img.width() != size) {
      tip.x = (tip.x + 0.5) * size / img.width() - 0.5;
      tip.y = (tip.y + 0.5) * size / img.height() - 0.5;
      img = resize_image(img, size, size);
      mask = resize_mask(mask, size, size);
    }
    Prepared p;
    p.real = nn::image_to_tensor(img);
    p.background = nn::image_to_tensor(inpaint_nearest_border(img, mask));
    p.mask = nn::mask_to_tensor(mask);
    const Tensor heat = fingertip_channel({mask, tip, s.domain});
    p.one_hot = sc.one_hot(sc.label_index(s.domain), size, size);
    p.cond = nn::concat_channels({&p.mask, &heat, &p.one_hot});
    p.fg_input = nn::concat_channels({&p.background, &p.cond});
    data.push_back(std::move(p));
  }

  nn::Adam opt_bg_g(sc.background_generator().parameters(), schedule.optimizer);
  nn::AdamOptions d_options = schedule.optimizer;
  d_options.weight_decay = schedule.disc_weight_decay;
  nn::Adam opt_bg_d(sc.background_discriminator().parameters(), d_options);
  nn::Adam opt_fg_g(sc.foreground_generator().parameters(), schedule.optimizer);
  nn::Adam opt_fg_d(sc.foreground_discriminator().parameters(), d_options);

  std::mt19937_64 rng(mix_seed(schedule.seed, 4));
  std::vector<PhaseLoss> bg_hist;
  std::vector<PhaseLoss> fg_hist;
  ComposerCheckpoint last_good = sc.checkpoint(schedule, bg_hist, fg_hist);
  write_composer_csv(out_dir / kComposerLossesCsv, bg_hist, fg_hist);

  std::vector<std::size_t> order(data.size());
  const std::size_t steps = (data.size() + schedule.batch_size - 1) / schedule.batch_size;
  auto batch_of = [&](std::size_t step, auto member) {
    std::vector<Tensor> parts;
    for (int k = 0; k < schedule.batch_size; ++k) {
      const std::size_t idx = step * schedule.batch_size + k;
      if (idx >= order.size()) break;
      parts.push_back(data[order[idx]].*member);
    }
    return nn::stack_batch(parts);
  };
  auto shuffle = [&] {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
  };
  auto diverged = [&](const char* phase, int epoch) {
    last_good.save(out_dir / kComposerLastGood);
    throw Error(ErrorCode::DivergedLoss, std::string(phase) + " phase diverged at epoch " + std::to_string(epoch) +
                                             "; last good checkpoint saved to " +
                                             (out_dir / kComposerLastGood).string());
  };

  auto& bg_g = sc.background_generator();
  auto& bg_d = sc.background_discriminator();
  for (int epoch = 0; epoch < schedule.bg_epochs; ++epoch) {
    shuffle();
    PhaseLoss sum;
    for (std::size_t step = 0; step < steps; ++step) {
      const Tensor real = batch_of(step, &Prepared::background);
      const Tensor oh = batch_of(step, &Prepared::one_hot);
      const int n = real.shape().n;
      std::vector<Tensor> noise;
      for (int i = 0; i < n; ++i) noise.push_back(gaussian_noise(arch.noise_channels, size, size, rng));
      const Tensor z = nn::stack_batch(noise);
      const Tensor g_in = nn::concat_channels({&z, &oh});

      opt_bg_g.zero_grad();
      const Tensor fake = bg_g.forward(g_in);
      const Tensor d_fake_in = with_instance_noise(nn::concat_channels({&fake, &oh}), schedule.instance_noise, rng);
      std::vector<float> grad;
      const Tensor scores = bg_d.forward(d_fake_in);
      const double g_loss = translate::squared_error_to<float>(scores.view(), 1.0, &grad);
      const Tensor d_in_grad = bg_d.backward(from_grad(scores.shape(), std::move(grad)));
      bg_g.backward(nn::slice_channels(d_in_grad, 0, 3));
      opt_bg_g.step(schedule.lr0);

      opt_bg_d.zero_grad();
      const Tensor d_real_in = with_instance_noise(nn::concat_channels({&real, &oh}), schedule.instance_noise, rng);
      double d_loss = lsgan_step(bg_d, d_real_in, 1.0);
      d_loss += lsgan_step(bg_d, d_fake_in, 0.0);
      opt_bg_d.step(schedule.lr0);

      sum.loss_d += d_loss;
      sum.loss_g += g_loss;
    }
    const PhaseLoss rec{sum.loss_d / steps, sum.loss_g / steps};
    if (!std::isfinite(rec.loss_d) || !std::isfinite(rec.loss_g)) diverged("bg", epoch);
    bg_hist.push_back(rec);
    sc.bg_epochs_done = epoch + 1;
    last_good = sc.checkpoint(schedule, bg_hist, fg_hist);
    write_composer_csv(out_dir / kComposerLossesCsv, bg_hist, fg_hist);
    spdlog::debug("composer bg epoch {}/{} d={:.4f} g={:.4f}", epoch + 1, schedule.bg_epochs, rec.loss_d, rec.loss_g);
  }

  auto& fg_g = sc.foreground_generator();
  auto& fg_d = sc.foreground_discriminator();
  for (int epoch = 0; epoch < schedule.fg_epochs; ++epoch) {
    shuffle();
    PhaseLoss sum;
    for (std::size_t step = 0; step < steps; ++step) {
      const Tensor real = batch_of(step, &Prepared::real);
      const Tensor bg = batch_of(step, &Prepared::background);
      const Tensor mask = batch_of(step, &Prepared::mask);
      const Tensor cond = batch_of(step, &Prepared::cond);
      const Tensor g_in = batch_of(step, &Prepared::fg_input);
      const nn::Shape s = real.shape();

      opt_fg_g.zero_grad();
      const Tensor raw = fg_g.forward(g_in);
      Tensor comp = bg;
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < 3; ++c) {
          for (int y = 0; y < s.h; ++y) {
            for (int x = 0; x < s.w; ++x) {
              if (mask.at(n, 0, y, x) > 0.5f) comp.at(n, c, y, x) = raw.at(n, c, y, x);
            }
          }
        }
      }
      const Tensor d_fake_in = with_instance_noise(nn::concat_channels({&comp, &cond}), schedule.instance_noise, rng);
      std::vector<float> adv_grad;
      std::vector<float> l1_grad;
      const Tensor scores = fg_d.forward(d_fake_in);
      const double adv = translate::squared_error_to<float>(scores.view(), 1.0, &adv_grad);
      const double l1 = translate::cycle_loss<float>(real.view(), comp.view(), schedule.l1_weight, &l1_grad);
      Tensor grad_comp = nn::slice_channels(fg_d.backward(from_grad(scores.shape(), std::move(adv_grad))), 0, 3);
      Tensor grad_raw(s);
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < 3; ++c) {
          for (int y = 0; y < s.h; ++y) {
            for (int x = 0; x < s.w; ++x) {
              if (mask.at(n, 0, y, x) <= 0.5f) continue;
              const std::size_t i = ((static_cast<std::size_t>(n) * 3 + c) * s.h + y) * s.w + x;
              grad_raw.data()[i] = grad_comp.data()[i] + l1_grad[i];
            }
          }
        }
      }
      fg_g.backward(grad_raw);
      opt_fg_g.step(schedule.lr0);

      opt_fg_d.zero_grad();
      const Tensor d_real_in = with_instance_noise(nn::concat_channels({&real, &cond}), schedule.instance_noise, rng);
      double d_loss = lsgan_step(fg_d, d_real_in, 1.0);
      d_loss += lsgan_step(fg_d, d_fake_in, 0.0);
      opt_fg_d.step(schedule.lr0);

      sum.loss_d += d_loss;
      sum.loss_g += adv + l1;
    }
    const PhaseLoss rec{sum.loss_d / steps, sum.loss_g / steps};
    if (!std::isfinite(rec.loss_d) || !std::isfinite(rec.loss_g)) diverged("fg", epoch);
    fg_hist.push_back(rec);
    sc.fg_epochs_done = epoch + 1;
    last_good = sc.checkpoint(schedule, bg_hist, fg_hist);
    write_composer_csv(out_dir / kComposerLossesCsv, bg_hist, fg_hist);
    spdlog::debug("composer fg epoch {}/{} d={:.4f} g={:.4f}", epoch + 1, schedule.fg_epochs, rec.loss_d, rec.loss_g);
  }

  ComposerCheckpoint final_ck = sc.checkpoint(schedule, bg_hist, fg_hist);
  final_ck.save(out_dir / kComposerCheckpoint);
  spdlog::info("composer trained: {} bg epochs, {} fg epochs, {} domains", final_ck.bg_epochs_done,
               final_ck.fg_epochs_done, vocab.size());
  return final_ck;
}

ComposerCheckpoint train_composer(const ingest::DatasetIndex& dataset, const std::map<std::string, HandMask>& masks,
                                  const ComposerArchitecture& arch, const ComposerSchedule& schedule,
                                  const fs::path& out_dir) {
  std::vector<ComposerSample> samples;
  for (const auto& r : dataset.records) {
    const auto it = masks.find(r.frame_id);
    if (it == masks.end()) throw Error(ErrorCode::MissingMask, "frame '" + r.frame_id + "' has no hand mask");
    samples.push_back({read_image(r.image_path), it->second, r.environment});
  }
  return train_composer(samples, arch, schedule, out_dir);
}

}  // namespace handsynth::compose
