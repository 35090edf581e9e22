#include "handsynth/core/types.hpp"

#include <algorithm>
#include <climits>

#include "handsynth/core/error.hpp"

namespace handsynth {

std::size_t BinaryMask::area() const {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

bool BinaryMask::any() const {
  return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
  if (height_ != other.height_ || width_ != other.width_) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

bool HandMask::consistent() const {
  if (!mask.in_bounds(fingertip.y, fingertip.x) || !mask.at(fingertip.y, fingertip.x)) return false;
  BoundingBox tight{INT_MAX, INT_MAX, INT_MIN, INT_MIN};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(y, x)) continue;
      tight.x_min = std::min(tight.x_min, x);
      tight.y_min = std::min(tight.y_min, y);
      tight.x_max = std::max(tight.x_max, x);
      tight.y_max = std::max(tight.y_max, y);
    }
  }
  return tight == bbox;
}

namespace {
void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::ShapeMismatch, "mask dimensions differ");
  }
}
}  // namespace

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.bits().size(); ++i) {
    const bool pa = a.bits()[i] != 0;
    const bool pb = b.bits()[i] != 0;
    inter += (pa && pb) ? 1 : 0;
    uni += (pa || pb) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  BinaryMask out(a.height(), a.width());
  for (std::size_t i = 0; i < a.bits().size(); ++i) out.bits()[i] = (a.bits()[i] || b.bits()[i]) ? 1 : 0;
  return out;
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  BinaryMask out(a.height(), a.width());
  for (std::size_t i = 0; i < a.bits().size(); ++i) out.bits()[i] = (a.bits()[i] && b.bits()[i]) ? 1 : 0;
  return out;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingAnnotationFile: return "MissingAnnotationFile";
    case ErrorCode::MalformedAnnotationLine: return "MalformedAnnotationLine";
    case ErrorCode::ImageNotFound: return "ImageNotFound";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::UnknownEnvironment: return "UnknownEnvironment";
    case ErrorCode::OverlappingSplit: return "OverlappingSplit";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::InvalidTrimap: return "InvalidTrimap";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NoHandFound: return "NoHandFound";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::EmptyFrame: return "EmptyFrame";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InputTooSmall: return "InputTooSmall";
    case ErrorCode::NonFiniteScores: return "NonFiniteScores";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ShapeIncompatible: return "ShapeIncompatible";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::UnknownDomain: return "UnknownDomain";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::StageError: return "StageError";
  }
  return "Unknown";
}

}  // namespace handsynth
