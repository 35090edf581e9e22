#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "handsynth/core/config.hpp"

namespace handsynth::pipeline {

/// Stage names in their canonical order. Each stage reads its
/// predecessors' outputs from `<out_dir>/<stage>/` and writes its own
/// directory there, including a manifest.json.
const std::vector<std::string>& all_stages();

/// Every key the pipeline config accepts.
const std::set<std::string>& known_config_keys();

/// Written into every stage directory: config snapshot, seed, input
/// manifests and output digests.
inline constexpr const char* kStageManifest = "manifest.json";

class PipelineRunner {
 public:
  /// Validates every key and every module config up front. Throws ConfigError.
  explicit PipelineRunner(KeyValueConfig config);

  const KeyValueConfig& config() const { return cfg_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& stages() const { return stages_; }
  std::filesystem::path stage_dir(const std::string& stage) const { return out_dir_ / stage; }

  /// Runs one stage. Module failures are rethrown as StageError naming the
  /// stage; earlier stage directories are left untouched.
  void run_stage(const std::string& stage);
  /// Runs `pipeline.stages` in the order given.
  void run();

 private:
  void ingest();
  void extract();
  void synthesize();
  void train_translate();
  void train_compose();
  void assemble();
  void translate();
  void export_stage();
  void metrics();

  KeyValueConfig cfg_;
  std::filesystem::path out_dir_;
  std::uint64_t seed_ = 0;
  std::vector<std::string> stages_;
};

/// Loads the config, applies the overrides and runs the pipeline (or the
/// single `stage` when given). Returns 0 on success, 2 on ConfigError and 3
/// on any other failure; errors are logged.
int run_pipeline(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed = std::nullopt,
                 std::optional<std::filesystem::path> out_dir = std::nullopt,
                 std::optional<std::string> stage = std::nullopt);

}  // namespace handsynth::pipeline
