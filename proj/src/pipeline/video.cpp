#include "handsynth/pipeline/video.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "handsynth/core/checkpoint.hpp"
#include "handsynth/core/error.hpp"
#include "handsynth/core/image_io.hpp"

namespace handsynth::pipeline {

namespace fs = std::filesystem;

void LabeledVideo::validate() const {
  if (frames.empty()) throw Error(ErrorCode::EmptySequence, "video has no frames");
  const auto& first = frames.front();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    if (f.image.height() != first.image.height() || f.image.width() != first.image.width() ||
        f.mask.height() != f.image.height() || f.mask.width() != f.image.width()) {
      throw Error(ErrorCode::ShapeMismatch, "frame " + std::to_string(k) + " differs in size");
    }
    if (f.domain_label != first.domain_label) {
      throw Error(ErrorCode::ShapeMismatch, "frame " + std::to_string(k) + " has a different domain label");
    }
    if (f.frame_index != first.frame_index + static_cast<int>(k)) {
      throw Error(ErrorCode::ShapeMismatch, "frame indices are not consecutive at " + std::to_string(k));
    }
  }
}

std::string to_string(BackgroundMode mode) { return mode == BackgroundMode::Single ? "single" : "per_frame"; }

BackgroundMode parse_background_mode(const std::string& name) {
  if (name == "single") return BackgroundMode::Single;
  if (name == "per_frame") return BackgroundMode::PerFrame;
  throw Error(ErrorCode::ConfigInvalid, "unknown background mode '" + name + "'");
}

namespace {

std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string numbered(const char* stem, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05d.png", stem, index);
  return buf;
}

}  // namespace

LabeledVideo assemble_video(const gesture::MaskSequence& seq, const compose::SceneComposer& composer,
                            const std::string& domain_label, std::uint64_t seed, BackgroundMode mode) {
  if (seq.frames.empty()) throw Error(ErrorCode::EmptySequence, "mask sequence has no frames");
  composer.label_index(domain_label);
  const int h = seq.frames.front().mask.height();
  const int w = seq.frames.front().mask.width();

  LabeledVideo video;
  ImageFrame shared;
  if (mode == BackgroundMode::Single) shared = composer.generate_background(domain_label, seed, h, w);

  const std::string gesture_label = gesture::to_string(seq.spec.kind);
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const HandMask& hand = seq.frames[k];
    const ImageFrame bg =
        mode == BackgroundMode::Single ? shared : composer.generate_background(domain_label, frame_seed(seed, k), h, w);
    const Point2D tip{static_cast<double>(hand.fingertip.x), static_cast<double>(hand.fingertip.y)};
    LabeledFrame f;
    f.image = composer.generate_foreground({hand.mask, tip, domain_label}, bg);
    f.mask = hand.mask;
    f.bbox = hand.bbox;
    f.fingertip = tip;
    f.gesture_label = gesture_label;
    f.domain_label = domain_label;
    f.frame_index = static_cast<int>(k);
    video.frames.push_back(std::move(f));
  }
  video.warnings = seq.warnings;
  video.provenance["assemble"] = {
      {"domain", domain_label}, {"seed", seed}, {"background_mode", to_string(mode)}, {"gesture", gesture_label}};
  return video;
}

LabeledVideo translate_video(const LabeledVideo& video, const translate::Generator& gen, const std::string& domain_label) {
  LabeledVideo out = video;
  for (auto& f : out.frames) {
    f.image = translate::translate(f.image, gen);
    if (!domain_label.empty()) f.domain_label = domain_label;
  }
  out.warnings.push_back("labels carried over unchanged through domain translation; hand shape may deform");
  out.provenance["translate"] = {{"domain", domain_label.empty() ? nlohmann::json(nullptr) : nlohmann::json(domain_label)},
                                 {"generator", gen.config().to_json()}};
  return out;
}

JitterReport background_jitter(const LabeledVideo& video) {
  if (video.frames.size() < 2) throw Error(ErrorCode::TooFewFrames, "jitter needs at least two frames");
  JitterReport report;
  for (std::size_t k = 1; k < video.frames.size(); ++k) {
    const auto& a = video.frames[k - 1];
    const auto& b = video.frames[k];
    if (a.image.height() != b.image.height() || a.image.width() != b.image.width()) {
      throw Error(ErrorCode::ShapeMismatch, "consecutive frames differ in size");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < a.image.height(); ++y) {
      for (int x = 0; x < a.image.width(); ++x) {
        if (a.mask.at(y, x) || b.mask.at(y, x)) continue;
        for (int c = 0; c < 3; ++c) sum += std::abs(double(a.image.at(y, x, c)) - b.image.at(y, x, c));
        n += 3;
      }
    }
    report.per_transition.push_back(n ? sum / static_cast<double>(n) : 0.0);
  }
  double total = 0.0;
  for (double v : report.per_transition) total += v;
  report.mean = total / static_cast<double>(report.per_transition.size());
  return report;
}

fs::path export_video(const LabeledVideo& video, const fs::path& out_dir) {
  video.validate();
  try {
    fs::create_directories(out_dir);
    nlohmann::json files = nlohmann::json::object();
    std::ofstream ann(out_dir / kAnnotationsFile);
    if (!ann) throw Error(ErrorCode::IoError, "cannot write " + (out_dir / kAnnotationsFile).string());
    for (const auto& f : video.frames) {
      const std::string frame_name = numbered("frame", f.frame_index);
      const std::string mask_name = numbered("mask", f.frame_index);
      write_image(out_dir / frame_name, f.image);
      write_mask(out_dir / mask_name, f.mask);
      nlohmann::json rec = {{"frame_index", f.frame_index},
                            {"bbox", {f.bbox.x_min, f.bbox.y_min, f.bbox.x_max, f.bbox.y_max}},
                            {"fingertip", {f.fingertip.x, f.fingertip.y}},
                            {"gesture", f.gesture_label},
                            {"domain", f.domain_label}};
      ann << rec.dump() << '\n';
      files[frame_name] = sha256_file(out_dir / frame_name);
      files[mask_name] = sha256_file(out_dir / mask_name);
    }
    ann.close();
    files[kAnnotationsFile] = sha256_file(out_dir / kAnnotationsFile);

    nlohmann::json manifest = {{"n_frames", video.frames.size()},
                               {"fps", video.fps},
                               {"height", video.frames.front().image.height()},
                               {"width", video.frames.front().image.width()},
                               {"provenance", video.provenance},
                               {"warnings", video.warnings},
                               {"files", files}};
    const fs::path path = out_dir / kManifestFile;
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << manifest.dump(2) << '\n';
    return path;
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::IoError, e.what());
  }
}

LabeledVideo import_video(const fs::path& dir) {
  std::ifstream mf(dir / kManifestFile);
  std::ifstream ann(dir / kAnnotationsFile);
  if (!mf || !ann) throw Error(ErrorCode::IoError, "missing manifest or annotations in " + dir.string());
  LabeledVideo video;
  try {
    const auto manifest = nlohmann::json::parse(mf);
    video.fps = manifest.at("fps");
    video.provenance = manifest.at("provenance");
    video.warnings = manifest.at("warnings").get<std::vector<std::string>>();
    std::string line;
    while (std::getline(ann, line)) {
      if (line.empty()) continue;
      const auto rec = nlohmann::json::parse(line);
      LabeledFrame f;
      f.frame_index = rec.at("frame_index");
      const auto& b = rec.at("bbox");
      f.bbox = {b.at(0), b.at(1), b.at(2), b.at(3)};
      f.fingertip = {rec.at("fingertip").at(0), rec.at("fingertip").at(1)};
      f.gesture_label = rec.at("gesture");
      f.domain_label = rec.at("domain");
      f.image = read_image(dir / numbered("frame", f.frame_index));
      f.mask = read_mask(dir / numbered("mask", f.frame_index));
      video.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("malformed export in ") + dir.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ImageNotFound) throw Error(ErrorCode::IoError, e.what());
    throw;
  }
  return video;
}

}  // namespace handsynth::pipeline
