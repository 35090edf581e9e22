#include "handsynth/translate/cycle_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "handsynth/core/error.hpp"
#include "handsynth/core/image_io.hpp"
#include "handsynth/nn/adam.hpp"
#include "handsynth/translate/losses.hpp"

namespace handsynth::translate {

namespace fs = std::filesystem;
using nn::Tensor;

bool LossRecord::finite() const {
  return std::isfinite(adv_a) && std::isfinite(adv_b) && std::isfinite(cyc_a) && std::isfinite(cyc_b);
}

CycleModels::CycleModels(const GeneratorConfig& g, const DiscriminatorConfig& d) : g_ab(g), g_ba(g), d_a(d), d_b(d) {}

// --------------------------------------------------------------- checkpoint

CycleCheckpoint CycleCheckpoint::capture(CycleModels& models, const TrainSchedule& schedule, int epoch,
                                         const std::vector<LossRecord>& history) {
  CycleCheckpoint ck;
  ck.generator = models.g_ab.config();
  ck.discriminator = models.d_a.config();
  ck.schedule = schedule;
  ck.g_ab = nn::export_state(models.g_ab.parameters());
  ck.g_ba = nn::export_state(models.g_ba.parameters());
  ck.d_a = nn::export_state(models.d_a.parameters());
  ck.d_b = nn::export_state(models.d_b.parameters());
  ck.epoch = epoch;
  ck.history = history;
  return ck;
}

Generator CycleCheckpoint::generator_ab() const {
  Generator g(generator);
  nn::import_state(g.parameters(), g_ab);
  return g;
}

Generator CycleCheckpoint::generator_ba() const {
  Generator g(generator);
  nn::import_state(g.parameters(), g_ba);
  return g;
}

CycleModels CycleCheckpoint::models() const {
  CycleModels m(generator, discriminator);
  nn::import_state(m.g_ab.parameters(), g_ab);
  nn::import_state(m.g_ba.parameters(), g_ba);
  nn::import_state(m.d_a.parameters(), d_a);
  nn::import_state(m.d_b.parameters(), d_b);
  return m;
}

CheckpointFile CycleCheckpoint::to_file() const {
  CheckpointFile f;
  nlohmann::json cfg = {{"generator", generator.to_json()},
                        {"discriminator", discriminator.to_json()},
                        {"schedule", schedule.to_json()},
                        {"epoch", epoch}};
  f.put_text("cycle/config", cfg.dump());
  f.put_tensors("cycle/g_ab", g_ab);
  f.put_tensors("cycle/g_ba", g_ba);
  f.put_tensors("cycle/d_a", d_a);
  f.put_tensors("cycle/d_b", d_b);
  std::vector<double> flat;
  for (const auto& r : history) flat.insert(flat.end(), {r.adv_a, r.adv_b, r.cyc_a, r.cyc_b});
  f.put_doubles("cycle/history", flat);
  return f;
}

CycleCheckpoint CycleCheckpoint::from_file(const CheckpointFile& f) {
  CycleCheckpoint ck;
  const auto cfg = nlohmann::json::parse(f.text("cycle/config"));
  ck.generator = GeneratorConfig::from_json(cfg.at("generator"));
  ck.discriminator = DiscriminatorConfig::from_json(cfg.at("discriminator"));
  ck.schedule = TrainSchedule::from_json(cfg.at("schedule"));
  ck.epoch = cfg.at("epoch");
  ck.g_ab = f.tensors("cycle/g_ab");
  ck.g_ba = f.tensors("cycle/g_ba");
  ck.d_a = f.tensors("cycle/d_a");
  ck.d_b = f.tensors("cycle/d_b");
  const auto flat = f.doubles("cycle/history");
  if (flat.size() % 4 != 0) throw Error(ErrorCode::ShapeMismatch, "loss history is not a multiple of 4");
  for (std::size_t i = 0; i < flat.size(); i += 4) ck.history.push_back({flat[i], flat[i + 1], flat[i + 2], flat[i + 3]});
  return ck;
}

bool operator==(const CycleCheckpoint& a, const CycleCheckpoint& b) {
  return a.generator.to_json() == b.generator.to_json() && a.discriminator.to_json() == b.discriminator.to_json() &&
         a.schedule.to_json() == b.schedule.to_json() && a.g_ab == b.g_ab && a.g_ba == b.g_ba && a.d_a == b.d_a &&
         a.d_b == b.d_b && a.epoch == b.epoch && a.history == b.history;
}

// ------------------------------------------------------------------ helpers

namespace {

/// Replay buffer of past generated samples.
class ImagePool {
 public:
  explicit ImagePool(int capacity) : capacity_(capacity) {}

  Tensor query(const Tensor& batch, std::mt19937_64& rng) {
    if (capacity_ == 0) return batch;
    std::vector<Tensor> out;
    for (int i = 0; i < batch.shape().n; ++i) {
      Tensor sample = nn::take_sample(batch, i);
      if (static_cast<int>(stored_.size()) < capacity_) {
        stored_.push_back(sample);
        out.push_back(std::move(sample));
      } else if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.5) {
        const auto k = std::uniform_int_distribution<std::size_t>(0, stored_.size() - 1)(rng);
        out.push_back(stored_[k]);
        stored_[k] = std::move(sample);
      } else {
        out.push_back(std::move(sample));
      }
    }
    return nn::stack_batch(out);
  }

 private:
  int capacity_;
  std::vector<Tensor> stored_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void add_into(Tensor& acc, const Tensor& g) {
  auto& a = acc.data();
  const auto& b = g.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

Tensor from_grad(const nn::Shape& shape, const std::vector<float>& g) {
  Tensor t(shape);
  t.data().assign(g.begin(), g.end());
  return t;
}

/// One direction x → G(x) → F(G(x)): generator-side adversarial loss under
/// D_y plus weighted cycle L1. Accumulates gradients into G and F (and D_y,
/// which is zeroed before its own step).
struct HalfCycle {
  double adv = 0.0;
  double cyc = 0.0;
};

HalfCycle half_cycle(const Tensor& x, Generator& g, Generator& f, Discriminator& d_y, double cycle_weight,
                     Tensor* fake_out) {
  Tensor fake = g.forward(x);
  Tensor scores = d_y.forward(fake);
  Tensor rec = f.forward(fake);

  HalfCycle out;
  std::vector<float> g_adv;
  std::vector<float> g_cyc;
  out.adv = squared_error_to<float>(scores.view(), 1.0, &g_adv);
  out.cyc = cycle_loss<float>(x.view(), rec.view(), cycle_weight, &g_cyc);

  Tensor grad_fake = f.backward(from_grad(rec.shape(), g_cyc));
  add_into(grad_fake, d_y.backward(from_grad(scores.shape(), g_adv)));
  g.backward(grad_fake);
  *fake_out = std::move(fake);
  return out;
}

/// Least-squares discriminator update on one real and one (pooled) fake batch.
double discriminator_step(Discriminator& d, const Tensor& real, const Tensor& fake) {
  std::vector<float> grad;
  Tensor s_real = d.forward(real);
  double loss = squared_error_to<float>(s_real.view(), 1.0, &grad);
  d.backward(from_grad(s_real.shape(), grad));
  Tensor s_fake = d.forward(fake);
  loss += squared_error_to<float>(s_fake.view(), 0.0, &grad);
  d.backward(from_grad(s_fake.shape(), grad));
  return loss;
}

void write_losses_csv(const fs::path& path, const std::vector<LossRecord>& history) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "epoch,adv_a,adv_b,cyc_a,cyc_b\n";
  out.precision(10);
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& r = history[e];
    out << e << ',' << r.adv_a << ',' << r.adv_b << ',' << r.cyc_a << ',' << r.cyc_b << '\n';
  }
}

bool all_finite(const std::vector<NamedTensor>& state) {
  for (const auto& t : state) {
    for (float v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace

// ----------------------------------------------------------------- training

std::vector<ImageFrame> load_domain_images(const ingest::DatasetIndex& index, int size) {
  std::vector<ImageFrame> out;
  out.reserve(index.records.size());
  for (const auto& r : index.records) {
    ImageFrame img = read_image(r.image_path);
    if (img.height() != size || img.width() != size) img = resize_image(img, size, size);
    out.push_back(std::move(img));
  }
  return out;
}

CycleCheckpoint train_cyclegan(const ingest::DatasetIndex& domain_a, const ingest::DatasetIndex& domain_b,
                               const CycleTrainOptions& options, const fs::path& out_dir) {
  if (domain_a.records.empty() || domain_b.records.empty()) {
    throw Error(ErrorCode::EmptyDomain, "both domains need at least one record");
  }
  const int size = options.generator.input_size;
  return train_cyclegan(load_domain_images(domain_a, size), load_domain_images(domain_b, size), options, out_dir);
}

CycleCheckpoint train_cyclegan(const std::vector<ImageFrame>& domain_a, const std::vector<ImageFrame>& domain_b,
                               const CycleTrainOptions& options, const fs::path& out_dir) {
  if (domain_a.empty() || domain_b.empty()) throw Error(ErrorCode::EmptyDomain, "both domains need at least one image");
  const TrainSchedule& sched = options.schedule;
  sched.validate();
  options.generator.validate();
  options.discriminator.validate();
  if (options.generator.in_channels != 3 || options.generator.out_channels != 3 ||
      options.discriminator.in_channels != 3) {
    throw Error(ErrorCode::ConfigInvalid, "cycle training translates RGB images");
  }
  fs::create_directories(out_dir);

  std::vector<Tensor> a_tensors;
  std::vector<Tensor> b_tensors;
  for (const auto& img : domain_a) a_tensors.push_back(nn::image_to_tensor(img));
  for (const auto& img : domain_b) b_tensors.push_back(nn::image_to_tensor(img));
  const nn::Shape shape_a = a_tensors.front().shape();
  for (const auto* set : {&a_tensors, &b_tensors}) {
    for (const auto& t : *set) {
      if (t.shape() != shape_a) throw Error(ErrorCode::ShapeMismatch, "training images must share one size");
    }
  }

  CycleModels m(options.generator, options.discriminator);
  m.g_ab.initialize(mix_seed(sched.seed, 0));
  m.g_ba.initialize(mix_seed(sched.seed, 1));
  m.d_a.initialize(mix_seed(sched.seed, 2));
  m.d_b.initialize(mix_seed(sched.seed, 3));

  std::vector<nn::Parameter*> g_params = m.g_ab.parameters();
  for (auto* p : m.g_ba.parameters()) g_params.push_back(p);
  std::vector<nn::Parameter*> d_params = m.d_a.parameters();
  for (auto* p : m.d_b.parameters()) d_params.push_back(p);
  nn::Adam opt_g(g_params, sched.optimizer);
  nn::Adam opt_d(d_params, sched.optimizer);

  std::mt19937_64 rng(mix_seed(sched.seed, 4));
  ImagePool pool_a(sched.pool_size);
  ImagePool pool_b(sched.pool_size);

  std::vector<LossRecord> history;
  CycleCheckpoint last_good = CycleCheckpoint::capture(m, sched, 0, history);
  write_losses_csv(out_dir / kLossesCsv, history);

  const std::size_t steps_per_epoch =
      (std::max(a_tensors.size(), b_tensors.size()) + sched.batch_size - 1) / sched.batch_size;
  std::vector<std::size_t> order_a(a_tensors.size());
  std::vector<std::size_t> order_b(b_tensors.size());

  auto diverged = [&](int epoch, const std::string& what) {
    last_good.save(out_dir / kLastGoodCheckpoint);
    write_losses_csv(out_dir / kLossesCsv, last_good.history);
    throw Error(ErrorCode::DivergedLoss, what + " at epoch " + std::to_string(epoch) + "; last good checkpoint (epoch " +
                                             std::to_string(last_good.epoch) + ") saved to " +
                                             (out_dir / kLastGoodCheckpoint).string());
  };

  for (int epoch = 0; epoch < sched.total_epochs(); ++epoch) {
    const double lr = sched.lr(epoch);
    for (std::size_t i = 0; i < order_a.size(); ++i) order_a[i] = i;
    for (std::size_t i = 0; i < order_b.size(); ++i) order_b[i] = i;
    std::shuffle(order_a.begin(), order_a.end(), rng);
    std::shuffle(order_b.begin(), order_b.end(), rng);

    LossRecord sum;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<Tensor> batch_a;
      std::vector<Tensor> batch_b;
      for (int k = 0; k < sched.batch_size; ++k) {
        const std::size_t idx = step * sched.batch_size + k;
        batch_a.push_back(a_tensors[order_a[idx % order_a.size()]]);
        batch_b.push_back(b_tensors[order_b[idx % order_b.size()]]);
      }
      const Tensor real_a = nn::stack_batch(batch_a);
      const Tensor real_b = nn::stack_batch(batch_b);

      // Generators: both half-cycles accumulate before a single step.
      opt_g.zero_grad();
      Tensor fake_b;
      Tensor fake_a;
      HalfCycle ab, ba;
      try {
        ab = half_cycle(real_a, m.g_ab, m.g_ba, m.d_b, sched.cycle_weight, &fake_b);
        ba = half_cycle(real_b, m.g_ba, m.g_ab, m.d_a, sched.cycle_weight, &fake_a);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteScores) throw;
        diverged(epoch, "non-finite discriminator scores");
      }
      if (!std::isfinite(ab.cyc) || !std::isfinite(ba.cyc)) diverged(epoch, "non-finite cycle loss");
      opt_g.step(lr);

      // Discriminators on detached fakes drawn through the replay pools.
      opt_d.zero_grad();
      try {
        discriminator_step(m.d_a, real_a, pool_a.query(fake_a, rng));
        discriminator_step(m.d_b, real_b, pool_b.query(fake_b, rng));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteScores) throw;
        diverged(epoch, "non-finite discriminator scores");
      }
      opt_d.step(lr);

      sum.adv_a += ba.adv;
      sum.adv_b += ab.adv;
      sum.cyc_a += ab.cyc;
      sum.cyc_b += ba.cyc;
    }

    const double n = static_cast<double>(steps_per_epoch);
    LossRecord rec{sum.adv_a / n, sum.adv_b / n, sum.cyc_a / n, sum.cyc_b / n};
    if (!rec.finite()) diverged(epoch, "non-finite epoch loss");
    CycleCheckpoint snapshot = CycleCheckpoint::capture(m, sched, epoch + 1, history);
    if (!all_finite(snapshot.g_ab) || !all_finite(snapshot.g_ba) || !all_finite(snapshot.d_a) ||
        !all_finite(snapshot.d_b)) {
      diverged(epoch, "non-finite parameters");
    }
    history.push_back(rec);
    snapshot.history = history;
    last_good = std::move(snapshot);

    spdlog::info("cycle epoch {}/{} lr={:.3g} adv_a={:.4f} adv_b={:.4f} cyc_a={:.4f} cyc_b={:.4f}", epoch + 1,
                 sched.total_epochs(), lr, rec.adv_a, rec.adv_b, rec.cyc_a, rec.cyc_b);
    write_losses_csv(out_dir / kLossesCsv, history);
    if (sched.checkpoint_interval > 0 && (epoch + 1) % sched.checkpoint_interval == 0) {
      last_good.save(out_dir / kLatestCheckpoint);
    }
    if (options.on_epoch) options.on_epoch(epoch, m, rec);
  }

  CycleCheckpoint final_ck = CycleCheckpoint::capture(m, sched, sched.total_epochs(), history);
  final_ck.save(out_dir / kFinalCheckpoint);
  return final_ck;
}

double reconstruction_l1(const Generator& g_ab, const Generator& g_ba, const std::vector<ImageFrame>& images) {
  if (images.empty()) throw Error(ErrorCode::EmptyDomain, "no images to reconstruct");
  double total = 0.0;
  for (const auto& img : images) {
    const Tensor x = nn::image_to_tensor(img);
    const Tensor rec = g_ba.infer(g_ab.infer(x));
    total += cycle_loss<float>(x.view(), rec.view(), 0.5);  // [−1,1] → [0,1] units
  }
  return total / static_cast<double>(images.size());
}

}  // namespace handsynth::translate
