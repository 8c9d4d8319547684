#include "pap/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pap/error.hpp"

namespace pap {

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw Error(ErrorCode::kDimensionMismatch, "bad image shape");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3) ||
      pixels_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::kDimensionMismatch, "pixel buffer does not match image shape");
  }
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kDimensionMismatch, "bad mask shape");
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::area() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::any_in_column(int x) const noexcept {
  for (int y = 0; y < height_; ++y) {
    if (get(x, y)) return true;
  }
  return false;
}

BinaryMask mask_from_image(const Image& img, int threshold) {
  BinaryMask mask(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      mask.set(x, y, img.at(x, y, 0) >= threshold);
    }
  }
  return mask;
}

Image mask_to_image(const BinaryMask& mask) {
  Image img(mask.width(), mask.height(), 1);
  for (int y = 0; y < mask.height(); ++y) {
    const auto* src = mask.row(y);
    auto* dst = img.row(y);
    for (int x = 0; x < mask.width(); ++x) dst[x] = src[x] ? 255 : 0;
  }
  return img;
}

namespace {

int wrap(int x, int w) {
  const int r = x % w;
  return r < 0 ? r + w : r;
}

}  // namespace

Image roll_columns(const Image& img, int shift) {
  Image out(img.width(), img.height(), img.channels());
  const int w = img.width();
  const int c = img.channels();
  for (int y = 0; y < img.height(); ++y) {
    const auto* src = img.row(y);
    auto* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      std::copy_n(src + wrap(x + shift, w) * c, c, dst + x * c);
    }
  }
  return out;
}

BinaryMask roll_columns(const BinaryMask& mask, int shift) {
  BinaryMask out(mask.width(), mask.height());
  const int w = mask.width();
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < w; ++x) out.set(x, y, mask.get(wrap(x + shift, w), y));
  }
  return out;
}

Image crop_wrapped(const Image& img, int x0, int y0, int w, int h) {
  if (w <= 0 || h <= 0 || y0 < 0 || y0 + h > img.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "crop rows outside source");
  }
  Image out(w, h, img.channels());
  const int c = img.channels();
  for (int y = 0; y < h; ++y) {
    const auto* src = img.row(y0 + y);
    auto* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      std::copy_n(src + wrap(x0 + x, img.width()) * c, c, dst + x * c);
    }
  }
  return out;
}

namespace {

// Sparse 1-D resampling kernel: output sample i = sum_k weight[k] * in[index[k]].
struct Kernel {
  std::vector<int> begin;  // offset into taps, size out+1
  std::vector<int> index;
  std::vector<double> weight;
};

Kernel area_kernel(int in, int out) {
  Kernel k;
  const double scale = static_cast<double>(in) / out;
  k.begin.push_back(0);
  for (int i = 0; i < out; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    for (int s = static_cast<int>(std::floor(lo)); s < static_cast<int>(std::ceil(hi)); ++s) {
      const double cover = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (cover <= 0.0) continue;
      k.index.push_back(std::clamp(s, 0, in - 1));
      k.weight.push_back(cover / scale);
    }
    k.begin.push_back(static_cast<int>(k.index.size()));
  }
  return k;
}

Kernel bilinear_kernel(int in, int out) {
  Kernel k;
  const double scale = static_cast<double>(in) / out;
  k.begin.push_back(0);
  for (int i = 0; i < out; ++i) {
    const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const int s0 = static_cast<int>(std::floor(src));
    const int s1 = std::min(s0 + 1, in - 1);
    const double t = src - s0;
    k.index.push_back(s0);
    k.weight.push_back(1.0 - t);
    k.index.push_back(s1);
    k.weight.push_back(t);
    k.begin.push_back(static_cast<int>(k.index.size()));
  }
  return k;
}

Kernel make_kernel(int in, int out) {
  return in >= 2 * out ? area_kernel(in, out) : bilinear_kernel(in, out);
}

}  // namespace

Image resize(const Image& img, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw Error(ErrorCode::kDimensionMismatch, "bad resize target");
  if (out_w == img.width() && out_h == img.height()) return img;

  const int c = img.channels();
  const Kernel kx = make_kernel(img.width(), out_w);
  const Kernel ky = make_kernel(img.height(), out_h);

  // Horizontal pass into a double buffer, then vertical pass with rounding.
  std::vector<double> tmp(static_cast<std::size_t>(img.height()) * out_w * c);
  for (int y = 0; y < img.height(); ++y) {
    const auto* src = img.row(y);
    double* dst = tmp.data() + static_cast<std::size_t>(y) * out_w * c;
    for (int x = 0; x < out_w; ++x) {
      for (int t = kx.begin[x]; t < kx.begin[x + 1]; ++t) {
        const auto* s = src + kx.index[t] * c;
        for (int ch = 0; ch < c; ++ch) dst[x * c + ch] += kx.weight[t] * s[ch];
      }
    }
  }

  Image out(out_w, out_h, c);
  std::vector<double> acc(static_cast<std::size_t>(out_w) * c);
  for (int y = 0; y < out_h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int t = ky.begin[y]; t < ky.begin[y + 1]; ++t) {
      const double* s = tmp.data() + static_cast<std::size_t>(ky.index[t]) * out_w * c;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += ky.weight[t] * s[i];
    }
    auto* dst = out.row(y);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[i]), 0L, 255L));
    }
  }
  return out;
}

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

int connected_components(const BinaryMask& mask, bool wrap_columns) {
  const int w = mask.width();
  const int h = mask.height();
  DisjointSet ds(static_cast<std::size_t>(w) * h);
  auto id = [w](int x, int y) { return y * w + x; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.get(x, y)) continue;
      // Neighbours already visited: left, up-left, up, up-right.
      const int nbr[4][2] = {{x - 1, y}, {x - 1, y - 1}, {x, y - 1}, {x + 1, y - 1}};
      for (const auto& n : nbr) {
        int nx = n[0];
        const int ny = n[1];
        if (ny < 0) continue;
        if (nx < 0 || nx >= w) {
          if (!wrap_columns) continue;
          nx = wrap(nx, w);
        }
        if (mask.get(nx, ny)) ds.unite(id(x, y), id(nx, ny));
      }
    }
  }
  int count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.get(x, y) && ds.find(id(x, y)) == id(x, y)) ++count;
    }
  }
  return count;
}

}  // namespace pap
