"""Panoramic affordance prediction: ERP geometry, grid routing, adaptive gaze and evaluation."""

from ._pap import (
    CropRegion,
    GridSpec,
    MockServer,
    PapError,
    ViewportSpec,
    cell_region,
    classify_difficulty,
    erp_to_viewport,
    evaluate,
    extract_viewport,
    iou,
    merge_cells,
    predict,
    project_mask_to_viewport,
    read_image,
    read_mask,
    render_grid_overlay,
    reproject_mask_to_erp,
    summarize,
    viewport_to_erp,
    write_synthetic_dataset,
)

__all__ = [
    "CropRegion",
    "GridSpec",
    "MockServer",
    "PapError",
    "ViewportSpec",
    "cell_region",
    "classify_difficulty",
    "erp_to_viewport",
    "evaluate",
    "extract_viewport",
    "iou",
    "merge_cells",
    "predict",
    "project_mask_to_viewport",
    "read_image",
    "read_mask",
    "render_grid_overlay",
    "reproject_mask_to_erp",
    "summarize",
    "viewport_to_erp",
    "write_synthetic_dataset",
]
