#pragma once

#include <span>
#include <string>
#include <vector>

#include "pap/image.hpp"

namespace pap {

struct GridSpec {
  int cols = 4;
  int rows = 3;
  int line_width_px = 5;
  int font_size_px = 50;

  int cell_count() const noexcept { return cols * rows; }
  /// cols, rows >= 1 and positive sizes. Routing additionally needs >= 2 cells.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// 1-D affine map x -> offset + scale * x.
struct AxisMap {
  double offset = 0.0;
  double scale = 1.0;

  double apply(double x) const noexcept { return offset + scale * x; }
  double invert(double y) const noexcept { return (y - offset) / scale; }
  /// this(inner(x)).
  AxisMap compose(const AxisMap& inner) const noexcept {
    return {offset + scale * inner.offset, scale * inner.scale};
  }

  friend bool operator==(const AxisMap&, const AxisMap&) = default;
};

/// An image frame together with the map from its pixel-edge coordinates to
/// full-resolution ERP pixel-edge coordinates.
struct FrameMap {
  int width = 0;
  int height = 0;
  AxisMap x;
  AxisMap y;

  static FrameMap identity(int width, int height) { return {width, height, {}, {}}; }
  /// Frame of size w x h obtained by downsampling the whole ERP.
  static FrameMap scaled_erp(int erp_width, int erp_height, int width, int height);

  friend bool operator==(const FrameMap&, const FrameMap&) = default;
};

/// Rectangle in a parent frame plus the cumulative map back to the ERP.
/// When `wraps_seam` is set the column span runs past the parent's right
/// edge and continues from column 0.
struct CropRegion {
  int parent_width = 0;
  int parent_height = 0;
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  bool wraps_seam = false;
  /// Region-local coordinates (0 at x0 / y0) to ERP coordinates.
  AxisMap to_erp_x;
  AxisMap to_erp_y;

  double erp_x0() const noexcept { return to_erp_x.apply(0.0); }
  double erp_x1() const noexcept { return to_erp_x.apply(width); }
  double erp_y0() const noexcept { return to_erp_y.apply(0.0); }
  double erp_y1() const noexcept { return to_erp_y.apply(height); }

  /// Frame produced by resizing this region to out_w x out_h.
  FrameMap resized_frame(int out_w, int out_h) const;

  friend bool operator==(const CropRegion&, const CropRegion&) = default;
};

/// Cell `index` (1-based, row-major). Cell boundaries are floor(k * W / cols).
CropRegion cell_region(int index, const GridSpec& grid, const FrameMap& frame);
CropRegion cell_region(int index, const GridSpec& grid, int frame_width, int frame_height);

/// Smallest region covering the listed cells. With `allow_seam_wrap`, the
/// column interval is the shortest circular one and may cross the right edge.
CropRegion merge_cells(std::span<const int> indices, const GridSpec& grid, const FrameMap& frame,
                       bool allow_seam_wrap = true);
CropRegion merge_cells(std::span<const int> indices, const GridSpec& grid, int frame_width,
                       int frame_height, bool allow_seam_wrap = true);

/// Internal line positions (rounded k * W / cols).
std::vector<int> grid_line_positions(int extent, int divisions);

/// Copy of `img` (promoted to RGB) with red grid lines and white-haloed red
/// cell numbers. Throws GridTooDense when a cell is smaller than twice the font size.
Image render_grid_overlay(const Image& img, const GridSpec& grid);

/// Coverage of a rendered label (glyph plus halo), `origin` at its top-left.
/// Exposed so the overlay can be checked pixel for pixel.
struct LabelRaster {
  BinaryMask glyph;
  BinaryMask halo;
  int origin_x = 0;
  int origin_y = 0;
};
LabelRaster layout_label(const std::string& text, int font_size_px, int center_x, int center_y);

}  // namespace pap
