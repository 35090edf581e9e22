#include "handsynth/core/checkpoint.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "handsynth/core/error.hpp"

namespace handsynth {

namespace {

constexpr char kMagic[8] = {'H', 'S', 'Y', 'N', 'C', 'K', 'P', 'T'};

class ByteWriter {
 public:
  template <typename T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& in) : in_(in) {}

  template <typename T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, in_.data() + pos_, n);
    pos_ += n;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error(ErrorCode::IoError, "truncated checkpoint data");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

void CheckpointFile::put_bytes(const std::string& tag, std::vector<std::uint8_t> payload) {
  sections_[tag] = std::move(payload);
}

void CheckpointFile::put_text(const std::string& tag, const std::string& text) {
  sections_[tag] = std::vector<std::uint8_t>(text.begin(), text.end());
}

void CheckpointFile::put_tensors(const std::string& tag, const std::vector<NamedTensor>& tensors) {
  ByteWriter w;
  w.pod(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    w.pod(static_cast<std::uint64_t>(t.values.size()));
    w.raw(t.values.data(), t.values.size() * sizeof(float));
  }
  sections_[tag] = w.take();
}

void CheckpointFile::put_doubles(const std::string& tag, const std::vector<double>& values) {
  ByteWriter w;
  w.pod(static_cast<std::uint64_t>(values.size()));
  w.raw(values.data(), values.size() * sizeof(double));
  sections_[tag] = w.take();
}

const std::vector<std::uint8_t>& CheckpointFile::bytes(const std::string& tag) const {
  const auto it = sections_.find(tag);
  if (it == sections_.end()) throw Error(ErrorCode::IoError, "checkpoint has no section '" + tag + "'");
  return it->second;
}

std::string CheckpointFile::text(const std::string& tag) const {
  const auto& b = bytes(tag);
  return std::string(b.begin(), b.end());
}

std::vector<NamedTensor> CheckpointFile::tensors(const std::string& tag) const {
  ByteReader r(bytes(tag));
  const auto count = r.pod<std::uint32_t>();
  std::vector<NamedTensor> out(count);
  for (auto& t : out) {
    t.name = r.str();
    t.values.resize(r.pod<std::uint64_t>());
    r.raw(t.values.data(), t.values.size() * sizeof(float));
  }
  return out;
}

std::vector<double> CheckpointFile::doubles(const std::string& tag) const {
  ByteReader r(bytes(tag));
  std::vector<double> out(r.pod<std::uint64_t>());
  r.raw(out.data(), out.size() * sizeof(double));
  return out;
}

std::vector<std::uint8_t> CheckpointFile::serialize() const {
  ByteWriter w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod(kVersion);
  w.pod(static_cast<std::uint32_t>(sections_.size()));
  for (const auto& [tag, payload] : sections_) {
    w.str(tag);
    w.pod(static_cast<std::uint64_t>(payload.size()));
    w.raw(payload.data(), payload.size());
  }
  return w.take();
}

CheckpointFile CheckpointFile::deserialize(const std::vector<std::uint8_t>& blob) {
  ByteReader r(blob);
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error(ErrorCode::IoError, "not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion) {
    throw Error(ErrorCode::IoError, "unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointFile file;
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string tag = r.str();
    std::vector<std::uint8_t> payload(r.pod<std::uint64_t>());
    r.raw(payload.data(), payload.size());
    file.sections_[tag] = std::move(payload);
  }
  if (!r.done()) throw Error(ErrorCode::IoError, "trailing bytes in checkpoint");
  return file;
}

void CheckpointFile::save(const std::filesystem::path& path) const {
  const auto blob = serialize();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

CheckpointFile CheckpointFile::load(const std::filesystem::path& path) {
  return deserialize(read_file_bytes(path));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "sha256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file_bytes(path)); }

}  // namespace handsynth
