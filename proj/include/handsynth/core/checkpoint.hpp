#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace handsynth {

/// A named float tensor as stored in checkpoint files.
struct NamedTensor {
  std::string name;
  std::vector<float> values;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Versioned binary container of tagged sections.
///
/// Layout (little-endian):
///   magic "HSYNCKPT" | u32 version | u32 section_count |
///   section_count × ( u32 tag_len | tag bytes | u64 payload_len | payload )
///
/// Helper encoders cover the payload kinds used by the trainers: UTF-8 text
/// (config echo as JSON), tensor lists, and flat f64 arrays.
class CheckpointFile {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put_bytes(const std::string& tag, std::vector<std::uint8_t> payload);
  void put_text(const std::string& tag, const std::string& text);
  void put_tensors(const std::string& tag, const std::vector<NamedTensor>& tensors);
  void put_doubles(const std::string& tag, const std::vector<double>& values);

  bool has(const std::string& tag) const { return sections_.count(tag) != 0; }
  const std::vector<std::uint8_t>& bytes(const std::string& tag) const;
  std::string text(const std::string& tag) const;
  std::vector<NamedTensor> tensors(const std::string& tag) const;
  std::vector<double> doubles(const std::string& tag) const;

  std::vector<std::uint8_t> serialize() const;
  static CheckpointFile deserialize(const std::vector<std::uint8_t>& blob);

  void save(const std::filesystem::path& path) const;
  static CheckpointFile load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::vector<std::uint8_t>> sections_;
};

/// Lowercase hex SHA-256 of a byte buffer / file contents.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace handsynth
