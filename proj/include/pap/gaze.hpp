#pragma once

#include "pap/geometry.hpp"
#include "pap/grid.hpp"
#include "pap/image.hpp"

namespace pap {

struct GazeParams {
  double margin_deg = 10.0;
  double max_hfov_deg = 150.0;
  double min_hfov_deg = 20.0;
  int out_long_side_px = 1024;

  void validate() const;

  friend bool operator==(const GazeParams&, const GazeParams&) = default;
};

/// Longitude/latitude extent in radians. Seam-crossing boxes are unwrapped:
/// lon_hi may exceed pi, with lon_hi - lon_lo < 2 pi.
struct SphericalBox {
  double lon_lo = 0.0;
  double lon_hi = 0.0;
  double lat_lo = 0.0;
  double lat_hi = 0.0;
};

SphericalBox region_to_spherical_box(const CropRegion& region, ErpDims erp);

/// Chooses yaw/pitch at the box centre and a field of view that encloses the
/// box plus the angular margin on every side. hfov is clamped to
/// [min_hfov, max_hfov]; pitch is clamped so the frustum stays within +-89 deg
/// latitude; the long image side is out_long_side_px with aspect in [1/3, 3].
/// Throws DegenerateRegion for zero-area boxes.
ViewportSpec plan_gaze(const SphericalBox& box, const GazeParams& params);

struct GazeView {
  Image image;
  ViewportSpec spec;
};

GazeView gaze_extract(const Image& erp, const CropRegion& region, const GazeParams& params);

}  // namespace pap
