#include "handsynth/ingest/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <opencv2/imgcodecs.hpp>
#include <sstream>

#include "handsynth/core/error.hpp"

namespace handsynth::ingest {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_int(const std::string& s, int& out) {
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && begin != end;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void DatasetIndex::refresh_environments() {
  environments.clear();
  for (const auto& r : records) environments.insert(r.environment);
}

LoadResult load_dataset(const fs::path& root, const LoadOptions& options) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::MissingAnnotationFile, "dataset root not found: " + root.string());

  std::vector<fs::path> env_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) env_dirs.push_back(entry.path());
  }
  std::sort(env_dirs.begin(), env_dirs.end());

  LoadResult result;
  std::set<std::string> seen_ids;
  std::map<fs::path, cv::Size> image_sizes;

  auto reject = [&](const fs::path& file, int line, const std::string& message) {
    if (options.strict) {
      throw Error(ErrorCode::InvalidRecord, file.string() + ":" + std::to_string(line) + ": " + message);
    }
    result.rejected.push_back({file, line, message});
  };

  for (const auto& env_dir : env_dirs) {
    const std::string environment = env_dir.filename().string();
    const fs::path annotation = env_dir / kAnnotationFile;
    if (!fs::is_regular_file(annotation)) throw Error(ErrorCode::MissingAnnotationFile, annotation.string());

    std::ifstream in(annotation);
    std::string line;
    int line_no = 0;
    std::vector<FrameRecord> env_records;
    while (std::getline(in, line)) {
      ++line_no;
      line = strip_cr(line);
      if (line_no == 1) {
        if (line != kAnnotationHeader) {
          throw Error(ErrorCode::MalformedAnnotationLine, annotation.string() + ":1: unexpected header");
        }
        continue;
      }
      if (line.empty()) continue;

      const auto fields = split_csv(line);
      int v[6];
      bool ok = fields.size() == 8 && !fields[0].empty() && !fields[1].empty();
      for (int i = 0; ok && i < 6; ++i) ok = parse_int(fields[2 + i], v[i]);
      if (!ok) {
        throw Error(ErrorCode::MalformedAnnotationLine, annotation.string() + ":" + std::to_string(line_no));
      }

      FrameRecord rec{fields[0], env_dir / fields[1], BoundingBox{v[0], v[1], v[2], v[3]}, Pixel{v[4], v[5]},
                      environment};
      if (!fs::is_regular_file(rec.image_path)) throw Error(ErrorCode::ImageNotFound, rec.image_path.string());

      auto size_it = image_sizes.find(rec.image_path);
      if (size_it == image_sizes.end()) {
        const cv::Mat img = cv::imread(rec.image_path.string(), cv::IMREAD_UNCHANGED);
        if (img.empty()) throw Error(ErrorCode::ImageNotFound, "unreadable image " + rec.image_path.string());
        size_it = image_sizes.emplace(rec.image_path, img.size()).first;
      }

      if (!rec.bbox.inside(size_it->second.width, size_it->second.height)) {
        reject(annotation, line_no, "bbox outside image bounds");
      } else if (!rec.bbox.contains(rec.fingertip)) {
        reject(annotation, line_no, "fingertip outside bbox");
      } else if (!seen_ids.insert(rec.frame_id).second) {
        reject(annotation, line_no, "duplicate frame_id '" + rec.frame_id + "'");
      } else {
        env_records.push_back(std::move(rec));
      }
    }
    std::sort(env_records.begin(), env_records.end(),
              [](const FrameRecord& a, const FrameRecord& b) { return a.frame_id < b.frame_id; });
    for (auto& r : env_records) result.index.records.push_back(std::move(r));
  }

  if (result.index.records.empty()) throw Error(ErrorCode::EmptyDomain, "no valid records under " + root.string());
  result.index.refresh_environments();
  return result;
}

std::pair<DatasetIndex, DatasetIndex> split_by_environment(const DatasetIndex& index,
                                                           const std::set<std::string>& source_envs,
                                                           const std::set<std::string>& target_envs) {
  for (const auto* envs : {&source_envs, &target_envs}) {
    for (const auto& env : *envs) {
      if (!index.environments.count(env)) throw Error(ErrorCode::UnknownEnvironment, env);
    }
  }
  for (const auto& env : source_envs) {
    if (target_envs.count(env)) throw Error(ErrorCode::OverlappingSplit, env);
  }

  DatasetIndex left;
  DatasetIndex right;
  for (const auto& r : index.records) {
    if (source_envs.count(r.environment)) {
      left.records.push_back(r);
    } else if (target_envs.count(r.environment)) {
      right.records.push_back(r);
    }
  }
  left.refresh_environments();
  right.refresh_environments();
  return {std::move(left), std::move(right)};
}

void save_dataset(const DatasetIndex& index, const fs::path& root) {
  std::map<std::string, std::vector<const FrameRecord*>> by_env;
  for (const auto& r : index.records) by_env[r.environment].push_back(&r);

  for (const auto& [env, records] : by_env) {
    const fs::path env_dir = root / env;
    fs::create_directories(env_dir);
    std::ofstream out(env_dir / kAnnotationFile);
    if (!out) throw Error(ErrorCode::IoError, "cannot write annotations under " + env_dir.string());
    out << kAnnotationHeader << '\n';
    for (const auto* r : records) {
      const fs::path target = env_dir / r->image_path.filename();
      std::error_code ec;
      if (!fs::exists(target) || !fs::equivalent(target, r->image_path, ec)) {
        fs::copy_file(r->image_path, target, fs::copy_options::overwrite_existing);
      }
      out << r->frame_id << ',' << r->image_path.filename().string() << ',' << r->bbox.x_min << ','
          << r->bbox.y_min << ',' << r->bbox.x_max << ',' << r->bbox.y_max << ',' << r->fingertip.x << ','
          << r->fingertip.y << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "short write under " + env_dir.string());
  }
}

}  // namespace handsynth::ingest
