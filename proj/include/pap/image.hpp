#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pap {

/// 8-bit interleaved raster, row-major. Used for panoramas (ERP frames),
/// perspective patches and overlays alike.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, std::uint8_t fill = 0);
  Image(int width, int height, int channels, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t* row(int y) noexcept { return pixels_.data() + index(0, y); }
  const std::uint8_t* row(int y) const noexcept { return pixels_.data() + index(0, y); }
  std::uint8_t& at(int x, int y, int c = 0) noexcept { return pixels_[index(x, y) + c]; }
  std::uint8_t at(int x, int y, int c = 0) const noexcept { return pixels_[index(x, y) + c]; }

  std::span<std::uint8_t> data() noexcept { return pixels_; }
  std::span<const std::uint8_t> data() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Per-pixel 0/1 raster. Annotates either a perspective patch or an ERP frame.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool get(int x, int y) const noexcept { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) noexcept { bits_[index(x, y)] = v ? 1 : 0; }
  std::uint8_t* row(int y) noexcept { return bits_.data() + index(0, y); }
  const std::uint8_t* row(int y) const noexcept { return bits_.data() + index(0, y); }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t area() const noexcept;
  bool any_in_column(int x) const noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Binarize a single-channel image: value >= threshold becomes 1.
BinaryMask mask_from_image(const Image& img, int threshold = 128);
/// Single-channel 0/255 raster.
Image mask_to_image(const BinaryMask& mask);

/// Horizontal circular shift: out(x) = in((x + shift) mod W).
Image roll_columns(const Image& img, int shift);
BinaryMask roll_columns(const BinaryMask& mask, int shift);

/// Copy of [x0, x0+w) x [y0, y0+h). Columns wrap modulo the source width;
/// rows must lie inside the source.
Image crop_wrapped(const Image& img, int x0, int y0, int w, int h);

/// Resize to exactly out_w x out_h. Area averaging when both axes shrink by
/// a factor of at least 2, bilinear (edge-aligned) otherwise.
Image resize(const Image& img, int out_w, int out_h);

/// Number of 8-connected components of set pixels. With `wrap_columns`, the
/// first and last columns are treated as adjacent.
int connected_components(const BinaryMask& mask, bool wrap_columns = false);

}  // namespace pap
