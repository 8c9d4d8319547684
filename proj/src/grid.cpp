#include "pap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "font.hpp"
#include "pap/error.hpp"

namespace pap {

void GridSpec::validate() const {
  if (cols < 1 || rows < 1) throw Error(ErrorCode::kInvalidSpec, "grid needs at least one row and column");
  if (line_width_px < 0 || font_size_px < 1) throw Error(ErrorCode::kInvalidSpec, "bad grid line/font size");
}

FrameMap FrameMap::scaled_erp(int erp_width, int erp_height, int width, int height) {
  return {width, height, {0.0, static_cast<double>(erp_width) / width},
          {0.0, static_cast<double>(erp_height) / height}};
}

FrameMap CropRegion::resized_frame(int out_w, int out_h) const {
  return {out_w, out_h, to_erp_x.compose({0.0, static_cast<double>(width) / out_w}),
          to_erp_y.compose({0.0, static_cast<double>(height) / out_h})};
}

namespace {

int boundary(int k, int extent, int divisions) {
  return static_cast<int>(static_cast<long long>(k) * extent / divisions);
}

CropRegion make_region(const FrameMap& frame, int x0, int y0, int w, int h, bool wraps) {
  CropRegion r;
  r.parent_width = frame.width;
  r.parent_height = frame.height;
  r.x0 = x0;
  r.y0 = y0;
  r.width = w;
  r.height = h;
  r.wraps_seam = wraps;
  r.to_erp_x = frame.x.compose({static_cast<double>(x0), 1.0});
  r.to_erp_y = frame.y.compose({static_cast<double>(y0), 1.0});
  return r;
}

void check_index(int index, const GridSpec& grid) {
  if (index < 1 || index > grid.cell_count()) {
    throw Error(ErrorCode::kBadIndex, "cell index " + std::to_string(index) + " outside 1.." +
                                          std::to_string(grid.cell_count()));
  }
}

}  // namespace

CropRegion cell_region(int index, const GridSpec& grid, const FrameMap& frame) {
  grid.validate();
  check_index(index, grid);
  const int row = (index - 1) / grid.cols;
  const int col = (index - 1) % grid.cols;
  const int x0 = boundary(col, frame.width, grid.cols);
  const int x1 = boundary(col + 1, frame.width, grid.cols);
  const int y0 = boundary(row, frame.height, grid.rows);
  const int y1 = boundary(row + 1, frame.height, grid.rows);
  return make_region(frame, x0, y0, x1 - x0, y1 - y0, false);
}

CropRegion cell_region(int index, const GridSpec& grid, int frame_width, int frame_height) {
  return cell_region(index, grid, FrameMap::identity(frame_width, frame_height));
}

CropRegion merge_cells(std::span<const int> indices, const GridSpec& grid, const FrameMap& frame,
                       bool allow_seam_wrap) {
  grid.validate();
  if (indices.empty()) throw Error(ErrorCode::kBadIndex, "no cells to merge");
  std::set<int> cols;
  int row_lo = grid.rows, row_hi = -1;
  for (int index : indices) {
    check_index(index, grid);
    row_lo = std::min(row_lo, (index - 1) / grid.cols);
    row_hi = std::max(row_hi, (index - 1) / grid.cols);
    cols.insert((index - 1) % grid.cols);
  }
  const std::vector<int> occupied(cols.begin(), cols.end());

  // The covering interval is the complement of the largest circular gap.
  // Ties go to the wrap-around gap, i.e. the ordinary linear interval.
  int start = occupied.front();
  int end = occupied.back();
  if (allow_seam_wrap && occupied.size() > 1) {
    int best_gap = grid.cols - 1 - occupied.back() + occupied.front();
    for (std::size_t i = 0; i + 1 < occupied.size(); ++i) {
      const int gap = occupied[i + 1] - occupied[i] - 1;
      if (gap > best_gap) {
        best_gap = gap;
        start = occupied[i + 1];
        end = occupied[i];
      }
    }
  }

  const int y0 = boundary(row_lo, frame.height, grid.rows);
  const int y1 = boundary(row_hi + 1, frame.height, grid.rows);
  const int x0 = boundary(start, frame.width, grid.cols);
  const bool wraps = end < start;
  const int x1 = boundary(end + 1, frame.width, grid.cols) + (wraps ? frame.width : 0);
  return make_region(frame, x0, y0, x1 - x0, y1 - y0, wraps);
}

CropRegion merge_cells(std::span<const int> indices, const GridSpec& grid, int frame_width,
                       int frame_height, bool allow_seam_wrap) {
  return merge_cells(indices, grid, FrameMap::identity(frame_width, frame_height), allow_seam_wrap);
}

std::vector<int> grid_line_positions(int extent, int divisions) {
  std::vector<int> out;
  for (int k = 1; k < divisions; ++k) {
    out.push_back(static_cast<int>(std::lround(static_cast<double>(k) * extent / divisions)));
  }
  return out;
}

LabelRaster layout_label(const std::string& text, int font_size_px, int center_x, int center_y) {
  const double scale = static_cast<double>(font_size_px) / font::kGlyphHeight;
  const int units = static_cast<int>(text.size()) * font::kGlyphAdvance - 1;
  const int glyph_w = static_cast<int>(std::ceil(units * scale));
  const int glyph_h = font_size_px;
  const int halo = std::max(2, font_size_px / 16);
  const int w = glyph_w + 2 * halo;
  const int h = glyph_h + 2 * halo;

  LabelRaster out;
  out.glyph = BinaryMask(w, h);
  out.halo = BinaryMask(w, h);
  out.origin_x = center_x - w / 2;
  out.origin_y = center_y - h / 2;

  for (int y = 0; y < glyph_h; ++y) {
    const int gy = std::min(font::kGlyphHeight - 1, static_cast<int>(y / scale));
    for (int x = 0; x < glyph_w; ++x) {
      const int ux = std::min(units - 1, static_cast<int>(x / scale));
      const int ch = ux / font::kGlyphAdvance;
      const int gx = ux % font::kGlyphAdvance;
      if (gx >= font::kGlyphWidth) continue;
      const int d = text[static_cast<std::size_t>(ch)] - '0';
      if ((font::digit(d)[static_cast<std::size_t>(gy)] >> (font::kGlyphWidth - 1 - gx)) & 1) {
        out.glyph.set(x + halo, y + halo);
      }
    }
  }
  // Square dilation of the glyph, minus the glyph itself.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (out.glyph.get(x, y)) continue;
      bool near = false;
      for (int dy = -halo; dy <= halo && !near; ++dy) {
        for (int dx = -halo; dx <= halo && !near; ++dx) {
          const int nx = x + dx, ny = y + dy;
          near = nx >= 0 && ny >= 0 && nx < w && ny < h && out.glyph.get(nx, ny);
        }
      }
      if (near) out.halo.set(x, y);
    }
  }
  return out;
}

Image render_grid_overlay(const Image& img, const GridSpec& grid) {
  grid.validate();
  const int cell_w = img.width() / grid.cols;
  const int cell_h = img.height() / grid.rows;
  if (cell_w < 2 * grid.font_size_px || cell_h < 2 * grid.font_size_px) {
    throw Error(ErrorCode::kGridTooDense, "cells of " + std::to_string(cell_w) + "x" + std::to_string(cell_h) +
                                              " px cannot hold " + std::to_string(grid.font_size_px) + " px labels");
  }

  Image out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, img.channels() == 3 ? c : 0);
    }
  }
  auto paint = [&out](int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= out.width() || y >= out.height()) return;
    out.at(x, y, 0) = r;
    out.at(x, y, 1) = g;
    out.at(x, y, 2) = b;
  };

  const int half = grid.line_width_px / 2;
  for (int xl : grid_line_positions(img.width(), grid.cols)) {
    for (int x = xl - half; x < xl - half + grid.line_width_px; ++x)
      for (int y = 0; y < img.height(); ++y) paint(x, y, 255, 0, 0);
  }
  for (int yl : grid_line_positions(img.height(), grid.rows)) {
    for (int y = yl - half; y < yl - half + grid.line_width_px; ++y)
      for (int x = 0; x < img.width(); ++x) paint(x, y, 255, 0, 0);
  }

  for (int index = 1; index <= grid.cell_count(); ++index) {
    const CropRegion cell = cell_region(index, grid, img.width(), img.height());
    const LabelRaster label = layout_label(std::to_string(index), grid.font_size_px,
                                           cell.x0 + cell.width / 2, cell.y0 + cell.height / 2);
    for (int y = 0; y < label.glyph.height(); ++y) {
      for (int x = 0; x < label.glyph.width(); ++x) {
        if (label.halo.get(x, y)) paint(label.origin_x + x, label.origin_y + y, 255, 255, 255);
        if (label.glyph.get(x, y)) paint(label.origin_x + x, label.origin_y + y, 255, 0, 0);
      }
    }
  }
  return out;
}

}  // namespace pap
