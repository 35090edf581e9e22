#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handsynth/compose/scene.hpp"
#include "handsynth/core/checkpoint.hpp"
#include "handsynth/core/config.hpp"
#include "handsynth/ingest/dataset.hpp"
#include "handsynth/nn/adam.hpp"
#include "handsynth/translate/networks.hpp"

namespace handsynth::compose {

/// Sizes shared by the background and foreground networks. Both reuse the
/// residual generator and patch discriminator; inputs are widened for the
/// conditioning channels.
///   background G: noise_channels + |vocab| one-hot → RGB
///   foreground G: background RGB + mask + fingertip heatmap + one-hot → RGB
///   discriminators see their image plus the same conditioning channels.
struct ComposerArchitecture {
  int image_size = 64;
  int base_channels = 16;
  int n_res_blocks = 3;
  int n_downsamples = 2;
  int disc_layers = 2;
  int disc_base_channels = 32;
  int noise_channels = 4;
  /// Weight init std-dev; 0 selects fan-in scaling. The networks carry no
  /// normalization, so the fixed N(0, 0.02) init would shrink the noise and
  /// conditioning signal to nothing by the output layer.
  double init_stddev = 0.0;

  void validate() const;
  nlohmann::json to_json() const;
  static ComposerArchitecture from_json(const nlohmann::json& j);
  /// Reads `compose.*` architecture keys.
  static ComposerArchitecture from_config(const KeyValueConfig& cfg);

  translate::GeneratorConfig background_generator(int vocab) const;
  translate::GeneratorConfig foreground_generator(int vocab) const;
  translate::DiscriminatorConfig background_discriminator(int vocab) const;
  translate::DiscriminatorConfig foreground_discriminator(int vocab) const;
};

/// Defaults: 100 foreground epochs, 200 background epochs, batch 4.
struct ComposerSchedule {
  int fg_epochs = 100;
  int bg_epochs = 200;
  int batch_size = 4;
  double lr0 = 2e-4;
  std::uint64_t seed = 0;
  nn::AdamOptions optimizer;
  /// Weight of the on-mask L1 reconstruction term in the foreground objective.
  double l1_weight = 100.0;
  /// Std-dev of Gaussian noise added to every discriminator image input
  /// ([−1,1] units). Smooths near-degenerate real distributions, which
  /// otherwise leave the adversarial game oscillating; 0 disables it.
  double instance_noise = 0.3;
  /// L2 weight decay on both discriminators. Damps the rotation of the
  /// adversarial dynamics around near-point-mass targets.
  double disc_weight_decay = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static ComposerSchedule from_json(const nlohmann::json& j);
  /// Reads `compose.fg_epochs`, `compose.bg_epochs`, `compose.batch_size`,
  /// `compose.lr0`, `compose.l1_weight`, `compose.instance_noise`,
  /// `compose.disc_weight_decay`, `compose.seed`.
  static ComposerSchedule from_config(const KeyValueConfig& cfg);
};

struct PhaseLoss {
  double loss_d = 0.0;
  double loss_g = 0.0;
  friend bool operator==(const PhaseLoss&, const PhaseLoss&) = default;
};

struct ComposerCheckpoint {
  ComposerArchitecture architecture;
  ComposerSchedule schedule;
  std::vector<std::string> vocabulary;
  std::vector<NamedTensor> bg_gen, bg_disc, fg_gen, fg_disc;
  int bg_epochs_done = 0;
  int fg_epochs_done = 0;
  std::vector<PhaseLoss> bg_history;
  std::vector<PhaseLoss> fg_history;

  CheckpointFile to_file() const;
  static ComposerCheckpoint from_file(const CheckpointFile& file);
  void save(const std::filesystem::path& path) const { to_file().save(path); }
  static ComposerCheckpoint load(const std::filesystem::path& path) { return from_file(CheckpointFile::load(path)); }

  friend bool operator==(const ComposerCheckpoint&, const ComposerCheckpoint&);
};

/// Sampling interface over a checkpoint's networks. Generation is const and
/// does not mutate network state.
class SceneComposer {
 public:
  /// Fresh, initialized networks (seeded) for a vocabulary. Throws ConfigInvalid
  /// on an empty vocabulary.
  SceneComposer(const ComposerArchitecture& arch, std::vector<std::string> vocabulary, std::uint64_t seed);
  explicit SceneComposer(const ComposerCheckpoint& ck);

  const ComposerArchitecture& architecture() const { return arch_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  /// Throws UnknownDomain.
  int label_index(const std::string& label) const;

  /// Deterministic in (label, noise_seed). Throws UnknownDomain; ShapeIncompatible
  /// when height/width are not multiples of 2^n_downsamples.
  ImageFrame generate_background(const std::string& label, std::uint64_t noise_seed, int height, int width) const;

  /// Renders the hand on the layout and hard-composites it onto `bg`.
  /// Throws ShapeMismatch; UntrainedModel before any foreground epoch; UnknownDomain.
  ImageFrame generate_foreground(const LayoutMap& layout, const ImageFrame& bg) const;

  /// Conditioning tensors fed to the networks.
  nn::Tensor background_input(const std::string& label, std::uint64_t noise_seed, int height, int width) const;
  nn::Tensor foreground_input(const LayoutMap& layout, const ImageFrame& bg) const;
  nn::Tensor one_hot(int label, int height, int width) const;

  translate::Generator& background_generator() { return bg_gen_; }
  translate::Generator& foreground_generator() { return fg_gen_; }
  translate::Discriminator& background_discriminator() { return bg_disc_; }
  translate::Discriminator& foreground_discriminator() { return fg_disc_; }

  int bg_epochs_done = 0;
  int fg_epochs_done = 0;

  ComposerCheckpoint checkpoint(const ComposerSchedule& schedule, const std::vector<PhaseLoss>& bg_history,
                                const std::vector<PhaseLoss>& fg_history);

 private:
  void check_size(int height, int width) const;

  ComposerArchitecture arch_;
  std::vector<std::string> vocab_;
  translate::Generator bg_gen_;
  translate::Generator fg_gen_;
  translate::Discriminator bg_disc_;
  translate::Discriminator fg_disc_;
};

/// One training frame with its extracted hand.
struct ComposerSample {
  ImageFrame image;
  HandMask hand;
  std::string domain;
};

inline constexpr const char* kComposerLossesCsv = "composer_losses.csv";
inline constexpr const char* kComposerCheckpoint = "composer_final.ckpt";
inline constexpr const char* kComposerLastGood = "composer_last_good.ckpt";

/// Background phase (bg_epochs) then foreground phase (fg_epochs). Samples
/// are resized to arch.image_size. Writes composer_losses.csv and the final
/// checkpoint into out_dir. Throws EmptyDomain; DivergedLoss.
ComposerCheckpoint train_composer(const std::vector<ComposerSample>& samples, const ComposerArchitecture& arch,
                                  const ComposerSchedule& schedule, const std::filesystem::path& out_dir);

/// Dataset form: every record needs an entry in `masks` keyed by frame_id.
/// Throws MissingMask.
ComposerCheckpoint train_composer(const ingest::DatasetIndex& dataset, const std::map<std::string, HandMask>& masks,
                                  const ComposerArchitecture& arch, const ComposerSchedule& schedule,
                                  const std::filesystem::path& out_dir);

}  // namespace handsynth::compose
