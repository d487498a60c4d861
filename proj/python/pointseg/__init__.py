from ._pointseg import (
    find_contexts,
    geojson,
    mask_metrics,
    polygons,
    pseudo_label,
    superimpose,
)

__all__ = [
    "find_contexts",
    "geojson",
    "mask_metrics",
    "polygons",
    "pseudo_label",
    "superimpose",
]
