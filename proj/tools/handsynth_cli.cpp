// Command-line front end. Every stage subcommand reads the same config file
// and writes under --out (or pipeline.out_dir).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "handsynth/core/error.hpp"
#include "handsynth/pipeline/runner.hpp"
#include "handsynth/pipeline/toy_data.hpp"

namespace fs = std::filesystem;
using namespace handsynth;

namespace {

struct StageFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_stage_flags(CLI::App* cmd, StageFlags& flags) {
  cmd->add_option("--config", flags.config, "pipeline config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "overrides pipeline.seed");
  cmd->add_option("--out", flags.out, "overrides pipeline.out_dir");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic egocentric hand-gesture video toolkit"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  const std::map<std::string, std::string> stage_commands{
      {"ingest", "ingest"},
      {"extract-masks", "extract"},
      {"synth-gesture", "synthesize"},
      {"train-translate", "train_translate"},
      {"train-compose", "train_compose"},
      {"assemble", "assemble"},
      {"translate", "translate"},
      {"export", "export"},
      {"metrics", "metrics"},
  };
  std::map<std::string, StageFlags> flags;
  for (const auto& [command, stage] : stage_commands) {
    auto* cmd = app.add_subcommand(command, "run the " + stage + " stage");
    add_stage_flags(cmd, flags[command]);
  }
  auto* run = app.add_subcommand("run", "run every stage listed in pipeline.stages");
  add_stage_flags(run, flags["run"]);

  auto* toy = app.add_subcommand("make-toy-data", "write the synthetic two-environment dataset");
  pipeline::ToyDatasetOptions toy_opts;
  std::string toy_out;
  toy->add_option("--out", toy_out, "dataset root")->required();
  toy->add_option("--seed", toy_opts.seed, "render seed");
  toy->add_option("--frames", toy_opts.frames_per_environment, "frames per environment")->check(CLI::PositiveNumber);
  toy->add_option("--size", toy_opts.size, "frame side in pixels")->check(CLI::Range(16, 1024));

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (toy->parsed()) {
    try {
      pipeline::write_toy_dataset(toy_out, toy_opts);
      return 0;
    } catch (const std::exception& e) {
      spdlog::error("{}", e.what());
      return 3;
    }
  }

  for (const auto& [command, f] : flags) {
    if (!app.got_subcommand(command)) continue;
    std::optional<fs::path> out;
    if (f.out) out = fs::path(*f.out);
    std::optional<std::string> stage;
    if (command != "run") stage = stage_commands.at(command);
    return pipeline::run_pipeline(f.config, f.seed, out, stage);
  }
  return 2;
}
