#include "handsynth/mask/extraction.hpp"

#include "handsynth/core/error.hpp"
#include "handsynth/mask/morphology.hpp"

namespace handsynth::mask {

ExtractionConfig ExtractionConfig::from_config(const KeyValueConfig& cfg) {
  ExtractionConfig out;
  out.skin.h_low = cfg.get_double("skin.h_low", out.skin.h_low);
  out.skin.h_high = cfg.get_double("skin.h_high", out.skin.h_high);
  out.skin.s_low = cfg.get_double("skin.s_low", out.skin.s_low);
  out.skin.s_high = cfg.get_double("skin.s_high", out.skin.s_high);
  out.skin.v_low = cfg.get_double("skin.v_low", out.skin.v_low);
  out.skin.v_high = cfg.get_double("skin.v_high", out.skin.v_high);
  out.grabcut.components = static_cast<int>(cfg.get_int("grabcut.k", out.grabcut.components));
  out.grabcut.iterations = static_cast<int>(cfg.get_int("grabcut.iterations", out.grabcut.iterations));
  out.erode_radius = static_cast<int>(cfg.get_int("erode.radius", out.erode_radius));
  const auto min_area = cfg.get_int("blob.min_area", static_cast<long long>(out.min_blob_area));
  if (min_area < 0) throw Error(ErrorCode::ConfigError, "key 'blob.min_area': must be >= 0");
  if (out.erode_radius < 0) throw Error(ErrorCode::ConfigError, "key 'erode.radius': must be >= 0");
  out.min_blob_area = static_cast<std::size_t>(min_area);
  try {
    out.skin.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("key 'skin.*': ") + e.what());
  }
  return out;
}

Trimap seed_trimap(const BinaryMask& skin) {
  Trimap trimap(skin.height(), skin.width());
  for (int y = 0; y < skin.height(); ++y) {
    for (int x = 0; x < skin.width(); ++x) {
      const bool border = y == 0 || x == 0 || y == skin.height() - 1 || x == skin.width() - 1;
      if (border) {
        trimap.set(y, x, TrimapLabel::DefiniteBackground);
      } else {
        trimap.set(y, x, skin.at(y, x) ? TrimapLabel::ProbableForeground : TrimapLabel::ProbableBackground);
      }
    }
  }
  return trimap;
}

HandMask extract_hand_mask(const ImageFrame& rgb, const ExtractionConfig& config) {
  const BinaryMask skin = skin_threshold(rgb_to_hsv(rgb), config.skin);
  const Trimap trimap = seed_trimap(skin);

  bool has_fg_seed = false;
  for (auto label : trimap.labels()) has_fg_seed |= label == TrimapLabel::ProbableForeground;
  if (!has_fg_seed) throw Error(ErrorCode::NoHandFound, "no pixels inside the skin range");

  BinaryMask mask = mask_intersection(refine_foreground(rgb, trimap, config.grabcut), skin);
  mask = erode(mask, config.erode_radius);
  mask = remove_small_blobs(mask, config.min_blob_area);
  mask = keep_largest_component(mask);
  if (!mask.any()) throw Error(ErrorCode::NoHandFound, "mask empty after refinement");
  return make_hand_mask(std::move(mask));
}

}  // namespace handsynth::mask
