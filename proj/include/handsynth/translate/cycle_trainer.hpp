#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "handsynth/core/checkpoint.hpp"
#include "handsynth/ingest/dataset.hpp"
#include "handsynth/translate/networks.hpp"
#include "handsynth/translate/schedule.hpp"

namespace handsynth::translate {

/// Per-epoch means. adv_x is the generator-side least-squares loss of the
/// fakes judged by D_x; cyc_x is the weighted L1 of x → other → x.
struct LossRecord {
  double adv_a = 0.0;
  double adv_b = 0.0;
  double cyc_a = 0.0;
  double cyc_b = 0.0;

  bool finite() const;
  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

/// The four networks of the cycle framework.
struct CycleModels {
  Generator g_ab;
  Generator g_ba;
  Discriminator d_a;
  Discriminator d_b;

  CycleModels(const GeneratorConfig& g, const DiscriminatorConfig& d);
};

struct CycleCheckpoint {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainSchedule schedule;
  std::vector<NamedTensor> g_ab, g_ba, d_a, d_b;
  int epoch = 0;
  std::vector<LossRecord> history;

  static CycleCheckpoint capture(CycleModels& models, const TrainSchedule& schedule, int epoch,
                                 const std::vector<LossRecord>& history);

  /// Rebuilds networks and loads the stored parameters.
  Generator generator_ab() const;
  Generator generator_ba() const;
  CycleModels models() const;

  CheckpointFile to_file() const;
  static CycleCheckpoint from_file(const CheckpointFile& file);
  void save(const std::filesystem::path& path) const { to_file().save(path); }
  static CycleCheckpoint load(const std::filesystem::path& path) { return from_file(CheckpointFile::load(path)); }

  friend bool operator==(const CycleCheckpoint& a, const CycleCheckpoint& b);
};

struct CycleTrainOptions {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainSchedule schedule;
  /// Called after every epoch with the live models (diagnostics and tests).
  std::function<void(int epoch, CycleModels&, const LossRecord&)> on_epoch;
};

inline constexpr const char* kLossesCsv = "losses.csv";
inline constexpr const char* kFinalCheckpoint = "cyclegan_final.ckpt";
inline constexpr const char* kLatestCheckpoint = "cyclegan_latest.ckpt";
inline constexpr const char* kLastGoodCheckpoint = "cyclegan_last_good.ckpt";

/// Reads every record's image and resizes it to size×size.
std::vector<ImageFrame> load_domain_images(const ingest::DatasetIndex& index, int size);

/// Alternating discriminator / generator updates for schedule.total_epochs()
/// epochs. Writes losses.csv, the latest checkpoint every
/// checkpoint_interval epochs and the final checkpoint into out_dir.
/// Throws EmptyDomain; DivergedLoss after saving the last good checkpoint.
CycleCheckpoint train_cyclegan(const std::vector<ImageFrame>& domain_a, const std::vector<ImageFrame>& domain_b,
                               const CycleTrainOptions& options, const std::filesystem::path& out_dir);

CycleCheckpoint train_cyclegan(const ingest::DatasetIndex& domain_a, const ingest::DatasetIndex& domain_b,
                               const CycleTrainOptions& options, const std::filesystem::path& out_dir);

/// Mean |x − G_ba(G_ab(x))| over the images, in [0,1] pixel units.
double reconstruction_l1(const Generator& g_ab, const Generator& g_ba, const std::vector<ImageFrame>& images);

}  // namespace handsynth::translate
