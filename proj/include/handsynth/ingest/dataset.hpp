#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "handsynth/core/types.hpp"

namespace handsynth::ingest {

/// One annotated egocentric frame.
struct FrameRecord {
  std::string frame_id;
  std::filesystem::path image_path;
  BoundingBox bbox;
  Pixel fingertip;
  std::string environment;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// Records ordered lexicographically by (environment, frame_id).
struct DatasetIndex {
  std::vector<FrameRecord> records;
  std::set<std::string> environments;

  /// Recomputes `environments` from the records.
  void refresh_environments();

  friend bool operator==(const DatasetIndex&, const DatasetIndex&) = default;
};

/// A record skipped during loading, with the reason.
struct RecordIssue {
  std::filesystem::path annotation_file;
  int line = 0;
  std::string message;
};

struct LoadOptions {
  /// Abort on the first invariant violation instead of skipping the record.
  bool strict = false;
};

struct LoadResult {
  DatasetIndex index;
  std::vector<RecordIssue> rejected;
};

inline constexpr const char* kAnnotationFile = "annotations.csv";
inline constexpr const char* kAnnotationHeader = "frame_id,image_file,x_min,y_min,x_max,y_max,tip_x,tip_y";

/// Loads `root/<environment>/annotations.csv` for every environment subdirectory.
///
/// Structural problems (missing annotation file, unparsable line, absent image)
/// throw. Records that parse but violate the record invariants (fingertip
/// outside bbox, bbox outside the image, duplicate frame_id) are skipped and
/// reported in `rejected`, or throw InvalidRecord under `strict`.
LoadResult load_dataset(const std::filesystem::path& root, const LoadOptions& options = {});

/// Partitions records by environment. Records in neither set are dropped.
std::pair<DatasetIndex, DatasetIndex> split_by_environment(const DatasetIndex& index,
                                                           const std::set<std::string>& source_envs,
                                                           const std::set<std::string>& target_envs);

/// Writes the index back out in the annotation format under `root`, copying
/// images that do not already live there.
void save_dataset(const DatasetIndex& index, const std::filesystem::path& root);

}  // namespace handsynth::ingest
