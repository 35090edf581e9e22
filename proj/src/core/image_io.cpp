#include "handsynth/core/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "handsynth/core/error.hpp"

namespace handsynth {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

cv::Mat to_mat_bgr(const ImageFrame& frame) {
  cv::Mat out(frame.height(), frame.width(), CV_8UC3);
  for (int y = 0; y < frame.height(); ++y) {
    auto* row = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < frame.width(); ++x) {
      row[x] = cv::Vec3b(to_byte(frame.at(y, x, 2)), to_byte(frame.at(y, x, 1)), to_byte(frame.at(y, x, 0)));
    }
  }
  return out;
}

ImageFrame from_mat_bgr(const cv::Mat& bgr) {
  ImageFrame frame(bgr.rows, bgr.cols, ColorSpace::RGB);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) frame.at(y, x, c) = static_cast<float>(row[x][2 - c]) / 255.0f;
    }
  }
  return frame;
}

}  // namespace

ImageFrame read_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::ImageNotFound, path.string());
  }
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error(ErrorCode::ImageNotFound, "unreadable image " + path.string());
  return from_mat_bgr(bgr);
}

void write_image(const std::filesystem::path& path, const ImageFrame& frame) {
  if (frame.color_space() != ColorSpace::RGB) throw Error(ErrorCode::IoError, "only RGB frames can be written");
  if (!cv::imwrite(path.string(), to_mat_bgr(frame))) throw Error(ErrorCode::IoError, "failed to write " + path.string());
}

BinaryMask read_mask(const std::filesystem::path& path) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw Error(ErrorCode::IoError, "failed to read mask " + path.string());
  BinaryMask mask(gray.rows, gray.cols);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) mask.set(y, x, row[x] != 0);
  }
  return mask;
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  cv::Mat gray(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width(); ++x) row[x] = mask.at(y, x) ? 255 : 0;
  }
  const std::vector<int> params{cv::IMWRITE_PNG_BILEVEL, 1};
  if (!cv::imwrite(path.string(), gray, params)) throw Error(ErrorCode::IoError, "failed to write " + path.string());
}

BinaryMask resize_mask(const BinaryMask& mask, int height, int width) {
  BinaryMask out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height() - 1, y * mask.height() / height);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width() - 1, x * mask.width() / width);
      out.set(y, x, mask.at(sy, sx));
    }
  }
  return out;
}

ImageFrame resize_image(const ImageFrame& frame, int height, int width) {
  if (frame.height() == height && frame.width() == width) return frame;
  cv::Mat src(frame.height(), frame.width(), CV_32FC3, const_cast<float*>(frame.data().data()));
  cv::Mat dst;
  const bool shrinking = height < frame.height() || width < frame.width();
  cv::resize(src, dst, cv::Size(width, height), 0, 0, shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  ImageFrame out(height, width, frame.color_space());
  std::copy(dst.ptr<float>(), dst.ptr<float>() + out.data().size(), out.data().begin());
  return out;
}

ImageFrame quantize_8bit(const ImageFrame& frame) {
  ImageFrame out = frame;
  for (float& v : out.data()) v = static_cast<float>(to_byte(v)) / 255.0f;
  return out;
}

}  // namespace handsynth
