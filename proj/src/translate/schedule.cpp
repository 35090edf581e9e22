#include "handsynth/translate/schedule.hpp"

#include <string>

#include "handsynth/core/error.hpp"

namespace handsynth::translate {

double TrainSchedule::lr(double epoch) const {
  if (!(epoch >= 0.0) || epoch > total_epochs()) {
    throw Error(ErrorCode::ValueOutOfRange, "epoch " + std::to_string(epoch) + " outside [0, " +
                                                std::to_string(total_epochs()) + "]");
  }
  if (epoch < const_epochs) return lr0;
  if (decay_epochs == 0) return lr0;
  return lr0 * (1.0 - (epoch - const_epochs) / static_cast<double>(decay_epochs));
}

void TrainSchedule::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::ConfigInvalid, "batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw Error(ErrorCode::ConfigInvalid, "lr0 must be > 0");
  if (const_epochs < 0 || decay_epochs < 0) throw Error(ErrorCode::ConfigInvalid, "epoch counts must be >= 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "Adam betas must lie in [0, 1)");
  }
  if (cycle_weight < 0.0) throw Error(ErrorCode::ConfigInvalid, "cycle_weight must be >= 0");
  if (pool_size < 0 || checkpoint_interval < 0) {
    throw Error(ErrorCode::ConfigInvalid, "pool_size and checkpoint_interval must be >= 0");
  }
}

nlohmann::json TrainSchedule::to_json() const {
  return {{"beta1", optimizer.beta1},
          {"beta2", optimizer.beta2},
          {"batch_size", batch_size},
          {"lr0", lr0},
          {"const_epochs", const_epochs},
          {"decay_epochs", decay_epochs},
          {"seed", seed},
          {"cycle_weight", cycle_weight},
          {"pool_size", pool_size},
          {"checkpoint_interval", checkpoint_interval}};
}

TrainSchedule TrainSchedule::from_json(const nlohmann::json& j) {
  TrainSchedule s;
  s.optimizer.beta1 = j.at("beta1");
  s.optimizer.beta2 = j.at("beta2");
  s.batch_size = j.at("batch_size");
  s.lr0 = j.at("lr0");
  s.const_epochs = j.at("const_epochs");
  s.decay_epochs = j.at("decay_epochs");
  s.seed = j.at("seed");
  s.cycle_weight = j.at("cycle_weight");
  s.pool_size = j.at("pool_size");
  s.checkpoint_interval = j.at("checkpoint_interval");
  return s;
}

TrainSchedule TrainSchedule::from_config(const KeyValueConfig& cfg, const std::string& prefix) {
  TrainSchedule s;
  s.lr0 = cfg.get_double(prefix + "lr0", s.lr0);
  s.batch_size = static_cast<int>(cfg.get_int(prefix + "batch_size", s.batch_size));
  s.const_epochs = static_cast<int>(cfg.get_int(prefix + "const_epochs", s.const_epochs));
  s.decay_epochs = static_cast<int>(cfg.get_int(prefix + "decay_epochs", s.decay_epochs));
  s.optimizer.beta1 = cfg.get_double(prefix + "beta1", s.optimizer.beta1);
  s.optimizer.beta2 = cfg.get_double(prefix + "beta2", s.optimizer.beta2);
  s.cycle_weight = cfg.get_double(prefix + "cycle_weight", s.cycle_weight);
  s.pool_size = static_cast<int>(cfg.get_int(prefix + "pool_size", s.pool_size));
  s.checkpoint_interval = static_cast<int>(cfg.get_int(prefix + "checkpoint_interval", s.checkpoint_interval));
  s.seed = static_cast<std::uint64_t>(cfg.get_int(prefix + "seed", static_cast<long long>(s.seed)));
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, prefix + "*: " + e.what());
  }
  return s;
}

}  // namespace handsynth::translate
