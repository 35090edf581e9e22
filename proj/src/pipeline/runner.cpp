#include "handsynth/pipeline/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "handsynth/compose/composer.hpp"
#include "handsynth/core/checkpoint.hpp"
#include "handsynth/core/error.hpp"
#include "handsynth/core/image_io.hpp"
#include "handsynth/gesture/gesture.hpp"
#include "handsynth/ingest/dataset.hpp"
#include "handsynth/mask/extraction.hpp"
#include "handsynth/mask/morphology.hpp"
#include "handsynth/pipeline/video.hpp"
#include "handsynth/translate/cycle_trainer.hpp"

namespace handsynth::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& all_stages() {
  static const std::vector<std::string> stages{"ingest",   "extract",   "synthesize", "train_translate", "train_compose",
                                               "assemble", "translate", "export",     "metrics"};
  return stages;
}

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "pipeline.stages", "pipeline.seed", "pipeline.out_dir", "pipeline.fps",
      "dataset.root", "dataset.strict",
      "skin.h_low", "skin.h_high", "skin.s_low", "skin.s_high", "skin.v_low", "skin.v_high",
      "grabcut.k", "grabcut.iterations", "erode.radius", "blob.min_area",
      "gesture.kind", "gesture.n_frames", "gesture.step", "gesture.center_x", "gesture.center_y", "gesture.radius",
      "gesture.start_angle", "gesture.orient_mask", "gesture.clip_threshold", "gesture.reference",
      "compose.image_size", "compose.base_channels", "compose.n_res_blocks", "compose.n_downsamples",
      "compose.disc_layers", "compose.disc_base_channels", "compose.noise_channels", "compose.init_stddev",
      "compose.fg_epochs", "compose.bg_epochs", "compose.batch_size", "compose.lr0", "compose.l1_weight",
      "compose.instance_noise", "compose.disc_weight_decay", "compose.seed",
      "assemble.domain", "assemble.background_mode",
      "translate.source_envs", "translate.target_envs", "translate.image_size", "translate.base_channels",
      "translate.n_res_blocks", "translate.n_downsamples", "translate.disc_layers", "translate.disc_base_channels",
      "translate.direction", "translate.domain_label",
      "train.lr0", "train.batch_size", "train.const_epochs", "train.decay_epochs", "train.beta1", "train.beta2",
      "train.cycle_weight", "train.pool_size", "train.checkpoint_interval", "train.seed",
      "metrics.compare_modes"};
  return keys;
}

namespace {

constexpr const char* kIndexFile = "index.json";
constexpr const char* kHandsFile = "hands.json";
constexpr const char* kSequenceFile = "sequence.json";
constexpr const char* kVideoDir = "video";

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "missing stage input " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, "malformed " + path.string() + ": " + e.what());
  }
}

json box_json(const BoundingBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }
BoundingBox box_from(const json& j) { return {j.at(0), j.at(1), j.at(2), j.at(3)}; }

json index_json(const ingest::DatasetIndex& index) {
  json records = json::array();
  for (const auto& r : index.records) {
    records.push_back({{"frame_id", r.frame_id},
                       {"image_path", r.image_path.string()},
                       {"bbox", box_json(r.bbox)},
                       {"fingertip", {r.fingertip.x, r.fingertip.y}},
                       {"environment", r.environment}});
  }
  return {{"records", records}, {"environments", index.environments}};
}

ingest::DatasetIndex index_from(const json& j) {
  ingest::DatasetIndex index;
  for (const auto& r : j.at("records")) {
    ingest::FrameRecord rec;
    rec.frame_id = r.at("frame_id");
    rec.image_path = r.at("image_path").get<std::string>();
    rec.bbox = box_from(r.at("bbox"));
    rec.fingertip = {r.at("fingertip").at(0), r.at("fingertip").at(1)};
    rec.environment = r.at("environment");
    index.records.push_back(std::move(rec));
  }
  index.refresh_environments();
  return index;
}

/// Digest of every file under `dir` except its stage manifest, keyed by relative path.
json digest_tree(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir);
    if (rel == kStageManifest) continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json out = json::object();
  for (const auto& f : files) out[f.generic_string()] = sha256_file(dir / f);
  return out;
}

std::string mask_name(const std::string& stem, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%05d.png", k);
  return stem + buf;
}

std::map<std::string, HandMask> load_hands(const fs::path& extract_dir) {
  std::map<std::string, HandMask> hands;
  const json all = read_json(extract_dir / kHandsFile);
  for (const auto& [id, h] : all.items()) {
    HandMask hand;
    hand.mask = read_mask(extract_dir / "masks" / (id + ".png"));
    hand.fingertip = {h.at("fingertip").at(0), h.at("fingertip").at(1)};
    hand.bbox = box_from(h.at("bbox"));
    hands.emplace(id, std::move(hand));
  }
  return hands;
}

gesture::MaskSequence load_sequence(const fs::path& dir, const KeyValueConfig& cfg) {
  const json j = read_json(dir / kSequenceFile);
  gesture::MaskSequence seq;
  seq.spec = gesture::GestureSpec::from_config(cfg);
  int k = 0;
  for (const auto& f : j.at("frames")) {
    HandMask hand;
    hand.mask = read_mask(dir / mask_name("mask", k++));
    hand.fingertip = {f.at("fingertip").at(0), f.at("fingertip").at(1)};
    hand.bbox = box_from(f.at("bbox"));
    seq.frames.push_back(std::move(hand));
  }
  seq.warnings = j.at("warnings").get<std::vector<std::string>>();
  return seq;
}

translate::GeneratorConfig translate_generator(const KeyValueConfig& cfg) {
  translate::GeneratorConfig g;
  g.input_size = static_cast<int>(cfg.get_int("translate.image_size", g.input_size));
  g.base_channels = static_cast<int>(cfg.get_int("translate.base_channels", g.base_channels));
  g.n_res_blocks = static_cast<int>(cfg.get_int("translate.n_res_blocks", g.n_res_blocks));
  g.n_downsamples = static_cast<int>(cfg.get_int("translate.n_downsamples", g.n_downsamples));
  return g;
}

translate::DiscriminatorConfig translate_discriminator(const KeyValueConfig& cfg) {
  translate::DiscriminatorConfig d;
  d.n_layers = static_cast<int>(cfg.get_int("translate.disc_layers", d.n_layers));
  d.base_channels = static_cast<int>(cfg.get_int("translate.disc_base_channels", d.base_channels));
  d.patch_receptive_field = translate::patch_receptive_field(d.n_layers);
  return d;
}

template <class F>
void as_config_error(const std::string& key, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, "key '" + key + "': " + e.what());
  }
}

}  // namespace

PipelineRunner::PipelineRunner(KeyValueConfig config) : cfg_(std::move(config)) {
  cfg_.require_known(known_config_keys());
  seed_ = static_cast<std::uint64_t>(cfg_.get_int("pipeline.seed", 0));
  // Module seeds default to the pipeline seed so one flag reseeds a run.
  for (const char* key : {"compose.seed", "train.seed"}) {
    if (!cfg_.has(key)) cfg_.set(key, std::to_string(seed_));
  }
  out_dir_ = cfg_.get_path("pipeline.out_dir", "out");
  stages_ = cfg_.get_list("pipeline.stages", {"ingest", "extract", "synthesize", "train_compose", "assemble", "export",
                                              "metrics"});
  for (const auto& s : stages_) {
    if (std::find(all_stages().begin(), all_stages().end(), s) == all_stages().end()) {
      throw Error(ErrorCode::ConfigError, "key 'pipeline.stages': unknown stage '" + s + "'");
    }
  }
  if (cfg_.get_double("pipeline.fps", 8.0) <= 0.0) throw Error(ErrorCode::ConfigError, "key 'pipeline.fps': must be > 0");

  mask::ExtractionConfig::from_config(cfg_);
  gesture::GestureSpec::from_config(cfg_);
  compose::ComposerArchitecture::from_config(cfg_);
  compose::ComposerSchedule::from_config(cfg_);
  translate::TrainSchedule::from_config(cfg_);
  as_config_error("translate.*", [&] {
    translate_generator(cfg_).validate();
    translate_discriminator(cfg_).validate();
  });
  as_config_error("assemble.background_mode",
                  [&] { parse_background_mode(cfg_.get_string("assemble.background_mode", "single")); });
  const auto direction = cfg_.get_string("translate.direction", "a_to_b");
  if (direction != "a_to_b" && direction != "b_to_a") {
    throw Error(ErrorCode::ConfigError, "key 'translate.direction': expected a_to_b or b_to_a");
  }
}

void PipelineRunner::run() {
  for (const auto& stage : stages_) run_stage(stage);
}

void PipelineRunner::run_stage(const std::string& stage) {
  const fs::path dir = stage_dir(stage);
  spdlog::info("stage {}: writing {}", stage, dir.string());
  try {
    fs::remove_all(dir);
    fs::create_directories(dir);
    if (stage == "ingest") ingest();
    else if (stage == "extract") extract();
    else if (stage == "synthesize") synthesize();
    else if (stage == "train_translate") train_translate();
    else if (stage == "train_compose") train_compose();
    else if (stage == "assemble") assemble();
    else if (stage == "translate") translate();
    else if (stage == "export") export_stage();
    else if (stage == "metrics") metrics();
    else throw Error(ErrorCode::ConfigError, "unknown stage '" + stage + "'");

    json inputs = json::object();
    for (const auto& other : all_stages()) {
      if (other == stage) break;
      const auto m = stage_dir(other) / kStageManifest;
      if (fs::exists(m)) inputs[other] = sha256_file(m);
    }
    const json manifest = {{"stage", stage},
                           {"seed", seed_},
                           {"config", cfg_.values()},
                           {"inputs", inputs},
                           {"outputs", digest_tree(dir)}};
    write_json(dir / kStageManifest, manifest);
    spdlog::info("stage {}: done", stage);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::StageError) throw;
    throw Error(ErrorCode::StageError, "stage '" + stage + "' failed: " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::StageError, "stage '" + stage + "' failed: " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::StageError, "stage '" + stage + "' failed on malformed input: " + e.what());
  }
}

void PipelineRunner::ingest() {
  ingest::LoadOptions opts;
  opts.strict = cfg_.get_bool("dataset.strict", false);
  const auto root = cfg_.get_path("dataset.root", "data");
  const auto result = ingest::load_dataset(root, opts);
  json rejected = json::array();
  for (const auto& r : result.rejected) {
    rejected.push_back({{"file", r.annotation_file.string()}, {"line", r.line}, {"message", r.message}});
    spdlog::warn("rejected {}:{}: {}", r.annotation_file.string(), r.line, r.message);
  }
  write_json(stage_dir("ingest") / kIndexFile, index_json(result.index));
  write_json(stage_dir("ingest") / "rejected.json", rejected);
  spdlog::info("ingest: {} records over {} environments", result.index.records.size(),
               result.index.environments.size());
}

void PipelineRunner::extract() {
  const auto index = index_from(read_json(stage_dir("ingest") / kIndexFile));
  const auto config = mask::ExtractionConfig::from_config(cfg_);
  const fs::path dir = stage_dir("extract");
  fs::create_directories(dir / "masks");

  ingest::DatasetIndex kept;
  json hands = json::object();
  json failures = json::array();
  for (const auto& rec : index.records) {
    try {
      const HandMask hand = mask::extract_hand_mask(read_image(rec.image_path), config);
      write_mask(dir / "masks" / (rec.frame_id + ".png"), hand.mask);
      hands[rec.frame_id] = {{"fingertip", {hand.fingertip.x, hand.fingertip.y}}, {"bbox", box_json(hand.bbox)}};
      kept.records.push_back(rec);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoHandFound) throw;
      failures.push_back({{"frame_id", rec.frame_id}, {"error", e.what()}});
      spdlog::warn("extract: {}: {}", rec.frame_id, e.what());
    }
  }
  if (kept.records.empty()) throw Error(ErrorCode::NoHandFound, "no frame yielded a hand mask");
  kept.refresh_environments();
  write_json(dir / kIndexFile, index_json(kept));
  write_json(dir / kHandsFile, hands);
  write_json(dir / "failures.json", failures);
  spdlog::info("extract: {} masks, {} failures", kept.records.size(), failures.size());
}

void PipelineRunner::synthesize() {
  const fs::path src = stage_dir("extract");
  const auto index = index_from(read_json(src / kIndexFile));
  const auto hands = load_hands(src);
  const std::string ref_id = cfg_.get_string("gesture.reference", index.records.front().frame_id);
  const auto it = hands.find(ref_id);
  if (it == hands.end()) throw Error(ErrorCode::MissingMask, "no extracted mask for reference frame " + ref_id);

  HandMask reference = it->second;
  const int size = compose::ComposerArchitecture::from_config(cfg_).image_size;
  if (reference.mask.height() != size || reference.mask.width() != size) {
    const auto resized = resize_mask(reference.mask, size, size);
    if (!resized.any()) throw Error(ErrorCode::EmptyMask, "reference mask vanished when resized to " + std::to_string(size));
    reference = mask::make_hand_mask(resized);
  }
  const auto spec = gesture::GestureSpec::from_config(cfg_);
  const auto seq = gesture::synthesize_mask_sequence(reference, spec);

  const fs::path dir = stage_dir("synthesize");
  json frames = json::array();
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& f = seq.frames[k];
    write_mask(dir / mask_name("mask", static_cast<int>(k)), f.mask);
    frames.push_back({{"fingertip", {f.fingertip.x, f.fingertip.y}}, {"bbox", box_json(f.bbox)}});
  }
  json transforms = json::array();
  for (const auto& t : seq.transforms) transforms.push_back({t.a, t.b, t.tx, t.c, t.d, t.ty});
  write_json(dir / kSequenceFile, {{"reference", ref_id},
                                   {"gesture", gesture::to_string(spec.kind)},
                                   {"frames", frames},
                                   {"transforms", transforms},
                                   {"warnings", seq.warnings}});
  for (const auto& w : seq.warnings) spdlog::warn("synthesize: {}", w);
}

void PipelineRunner::train_translate() {
  const auto index = index_from(read_json(stage_dir("ingest") / kIndexFile));
  const std::vector<std::string> envs(index.environments.begin(), index.environments.end());
  if (envs.size() < 2) throw Error(ErrorCode::EmptyDomain, "translation needs at least two environments");
  const auto source = cfg_.get_list("translate.source_envs", {envs[0]});
  const auto target = cfg_.get_list("translate.target_envs", {envs[1]});
  const auto [a, b] = ingest::split_by_environment(index, {source.begin(), source.end()}, {target.begin(), target.end()});

  translate::CycleTrainOptions opts;
  opts.generator = translate_generator(cfg_);
  opts.discriminator = translate_discriminator(cfg_);
  opts.schedule = translate::TrainSchedule::from_config(cfg_);
  translate::train_cyclegan(a, b, opts, stage_dir("train_translate"));
  write_json(stage_dir("train_translate") / "domains.json", {{"source", source}, {"target", target}});
}

void PipelineRunner::train_compose() {
  const fs::path src = stage_dir("extract");
  const auto index = index_from(read_json(src / kIndexFile));
  compose::train_composer(index, load_hands(src), compose::ComposerArchitecture::from_config(cfg_),
                          compose::ComposerSchedule::from_config(cfg_), stage_dir("train_compose"));
}

void PipelineRunner::assemble() {
  const fs::path ckpt = stage_dir("train_compose") / compose::kComposerCheckpoint;
  if (!fs::exists(ckpt)) throw Error(ErrorCode::IoError, "missing composer checkpoint " + ckpt.string());
  const compose::SceneComposer composer(compose::ComposerCheckpoint::load(ckpt));
  const auto seq = load_sequence(stage_dir("synthesize"), cfg_);
  const auto domain = cfg_.get_string("assemble.domain", composer.vocabulary().front());
  const auto mode = parse_background_mode(cfg_.get_string("assemble.background_mode", "single"));

  auto video = assemble_video(seq, composer, domain, seed_, mode);
  video.fps = cfg_.get_double("pipeline.fps", 8.0);
  video.provenance["composer_checkpoint"] = sha256_file(ckpt);
  export_video(video, stage_dir("assemble") / kVideoDir);
}

void PipelineRunner::translate() {
  const fs::path ckpt = stage_dir("train_translate") / translate::kFinalCheckpoint;
  if (!fs::exists(ckpt)) throw Error(ErrorCode::IoError, "missing translation checkpoint " + ckpt.string());
  const auto cycle = translate::CycleCheckpoint::load(ckpt);
  const bool forward = cfg_.get_string("translate.direction", "a_to_b") == "a_to_b";
  const auto gen = forward ? cycle.generator_ab() : cycle.generator_ba();

  const auto domains = read_json(stage_dir("train_translate") / "domains.json");
  const auto& side = domains.at(forward ? "target" : "source");
  const auto label = cfg_.get_string("translate.domain_label", side.at(0).get<std::string>());

  auto video = translate_video(import_video(stage_dir("assemble") / kVideoDir), gen, label);
  video.provenance["translation_checkpoint"] = sha256_file(ckpt);
  export_video(video, stage_dir("translate") / kVideoDir);
}

void PipelineRunner::export_stage() {
  const bool translated = std::find(stages_.begin(), stages_.end(), "translate") != stages_.end() &&
                          fs::exists(stage_dir("translate") / kVideoDir / kManifestFile);
  const fs::path src = stage_dir(translated ? "translate" : "assemble") / kVideoDir;
  auto video = import_video(src);
  video.provenance["config"] = cfg_.values();
  video.provenance["seeds"] = {{"pipeline", seed_},
                               {"compose", cfg_.get_int("compose.seed", 0)},
                               {"train", cfg_.get_int("train.seed", 0)}};
  video.provenance["source_stage"] = translated ? "translate" : "assemble";
  const auto manifest = export_video(video, stage_dir("export") / kVideoDir);
  spdlog::info("export: {} frames, manifest {}", video.frames.size(), manifest.string());
}

void PipelineRunner::metrics() {
  const auto video = import_video(stage_dir("export") / kVideoDir);
  const auto mode = cfg_.get_string("assemble.background_mode", "single");
  auto report_json = [](const JitterReport& r) { return json{{"mean", r.mean}, {"per_transition", r.per_transition}}; };

  json jitter = {{"exported", report_json(background_jitter(video))}, {"background_mode", mode}};
  if (cfg_.get_bool("metrics.compare_modes", false)) {
    const compose::SceneComposer composer(
        compose::ComposerCheckpoint::load(stage_dir("train_compose") / compose::kComposerCheckpoint));
    const auto seq = load_sequence(stage_dir("synthesize"), cfg_);
    const auto domain = cfg_.get_string("assemble.domain", composer.vocabulary().front());
    json modes = json::object();
    for (const auto m : {BackgroundMode::Single, BackgroundMode::PerFrame}) {
      auto v = assemble_video(seq, composer, domain, seed_, m);
      // Match the exported frames, which went through the 8-bit codec.
      for (auto& f : v.frames) f.image = quantize_8bit(f.image);
      modes[to_string(m)] = report_json(background_jitter(v));
    }
    jitter["modes"] = modes;
  }
  write_json(stage_dir("metrics") / "jitter.json", jitter);

  // Skin hue sits next to the 0° wrap, so per-frame hues are averaged on the circle.
  std::map<std::string, std::pair<double, double>> sums;
  for (const auto& f : video.frames) {
    const double h = compose::mean_skin_hue(f.image, f.mask);
    if (std::isnan(h)) continue;
    const double rad = h * M_PI / 180.0;
    sums[f.domain_label].first += std::sin(rad);
    sums[f.domain_label].second += std::cos(rad);
  }
  json hue = json::object();
  for (const auto& [domain, sc] : sums) {
    double deg = std::atan2(sc.first, sc.second) * 180.0 / M_PI;
    if (deg < 0) deg += 360.0;
    hue[domain] = deg;
  }
  write_json(stage_dir("metrics") / "skin_hue.json", hue);
}

int run_pipeline(const fs::path& config_path, std::optional<std::uint64_t> seed, std::optional<fs::path> out_dir,
                 std::optional<std::string> stage) {
  try {
    auto cfg = KeyValueConfig::load(config_path);
    if (seed) cfg.set("pipeline.seed", std::to_string(*seed));
    if (out_dir) cfg.set("pipeline.out_dir", fs::absolute(*out_dir).string());
    PipelineRunner runner(std::move(cfg));
    if (stage) runner.run_stage(*stage);
    else runner.run();
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == ErrorCode::ConfigError ? 2 : 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 3;
  }
}

}  // namespace handsynth::pipeline
