#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "handsynth/core/config.hpp"
#include "handsynth/nn/adam.hpp"

namespace handsynth::translate {

/// Optimisation schedule for cycle training. Defaults follow the reference
/// setup: Adam(0.5, 0.999), batch 1, lr 2e-4 held for 400 epochs then
/// decayed linearly to zero over 100 more.
struct TrainSchedule {
  nn::AdamOptions optimizer;
  int batch_size = 1;
  double lr0 = 2e-4;
  int const_epochs = 400;
  int decay_epochs = 100;
  std::uint64_t seed = 0;
  double cycle_weight = 10.0;
  /// Replay buffer of past fakes for discriminator updates; 0 disables it.
  int pool_size = 50;
  /// Epochs between checkpoint writes; 0 writes only the final checkpoint.
  int checkpoint_interval = 10;

  int total_epochs() const { return const_epochs + decay_epochs; }

  /// lr0 for e < const_epochs, then lr0·(1 − (e − const_epochs)/decay_epochs).
  /// Defined on [0, total_epochs]; throws ValueOutOfRange elsewhere.
  double lr(double epoch) const;

  /// Throws ConfigInvalid.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainSchedule from_json(const nlohmann::json& j);

  /// Reads `train.*` keys (lr0, batch_size, const_epochs, decay_epochs,
  /// beta1, beta2, cycle_weight, pool_size, checkpoint_interval, seed).
  static TrainSchedule from_config(const KeyValueConfig& cfg, const std::string& prefix = "train.");
};

}  // namespace handsynth::translate
