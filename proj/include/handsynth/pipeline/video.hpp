#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handsynth/compose/composer.hpp"
#include "handsynth/core/types.hpp"
#include "handsynth/gesture/gesture.hpp"
#include "handsynth/translate/networks.hpp"

namespace handsynth::pipeline {

/// One annotated output frame. `mask` is the layout the frame was rendered
/// from; bbox and fingertip are derived from it.
struct LabeledFrame {
  ImageFrame image;
  BinaryMask mask;
  BoundingBox bbox;
  Point2D fingertip;
  std::string gesture_label;
  std::string domain_label;
  int frame_index = 0;

  friend bool operator==(const LabeledFrame&, const LabeledFrame&) = default;
};

struct LabeledVideo {
  std::vector<LabeledFrame> frames;
  double fps = 8.0;
  /// Config snapshot, seeds and checkpoint digests.
  nlohmann::json provenance = nlohmann::json::object();
  /// Non-fatal notes carried into the manifest.
  std::vector<std::string> warnings;

  /// Throws EmptySequence or ShapeMismatch when the invariants fail
  /// (non-empty, shared size and domain, consecutive indices).
  void validate() const;
};

enum class BackgroundMode { Single, PerFrame };

std::string to_string(BackgroundMode mode);
/// "single" or "per_frame"; throws ConfigInvalid otherwise.
BackgroundMode parse_background_mode(const std::string& name);

/// Renders every layout of `seq` on a generated background. Single mode
/// draws one background from `seed` and reuses it; PerFrame draws frame k
/// from a seed derived from (seed, k). Throws UnknownDomain; EmptySequence.
LabeledVideo assemble_video(const gesture::MaskSequence& seq, const compose::SceneComposer& composer,
                            const std::string& domain_label, std::uint64_t seed,
                            BackgroundMode mode = BackgroundMode::Single);

/// Per-frame translate. Labels are carried over unchanged; `domain_label`
/// replaces the domain tag when non-empty. Throws ShapeIncompatible.
LabeledVideo translate_video(const LabeledVideo& video, const translate::Generator& gen,
                             const std::string& domain_label = {});

struct JitterReport {
  std::vector<double> per_transition;
  double mean = 0.0;
};

/// Mean absolute pixel difference between consecutive frames over pixels
/// outside both frames' masks, in [0,1]. A transition with no background
/// pixels scores 0. Throws TooFewFrames.
JitterReport background_jitter(const LabeledVideo& video);

inline constexpr const char* kAnnotationsFile = "annotations.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

/// frame_%05d.png, mask_%05d.png, annotations.jsonl and manifest.json.
/// Returns the manifest path. Throws IoError.
std::filesystem::path export_video(const LabeledVideo& video, const std::filesystem::path& out_dir);

/// Reads a directory written by export_video. Throws IoError.
LabeledVideo import_video(const std::filesystem::path& dir);

}  // namespace handsynth::pipeline
