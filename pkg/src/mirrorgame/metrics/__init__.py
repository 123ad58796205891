"""Motion similarity and coordination metrics.

Distribution metrics (velocity profile PDFs, earth mover's distance),
synchrony metrics (RMSE, instantaneous relative phase, circular
variance), per-movement shape statistics, a low-dimensional similarity
space with per-player ellipses, and small statistical helpers.
"""

from .distributions import DEFAULT_BINS, DEFAULT_RANGE, VelocityPdf, emd, velocity_pdf
from .segments import SegmentStats, segment_stats
from .similarity import Ellipse, SimilarityMap, ellipse_overlap, similarity_space
from .stats import paired_t_test
from .synchrony import (
    PhaseSeries,
    PhaseSummary,
    circular_variance,
    relative_phase,
    rmse,
    windowed_cv,
)
from .report import aggregate_table, render_similarity_svg, session_report, write_table_csv

__all__ = [
    "DEFAULT_BINS",
    "DEFAULT_RANGE",
    "VelocityPdf",
    "emd",
    "velocity_pdf",
    "SegmentStats",
    "segment_stats",
    "Ellipse",
    "SimilarityMap",
    "ellipse_overlap",
    "similarity_space",
    "paired_t_test",
    "PhaseSeries",
    "PhaseSummary",
    "circular_variance",
    "relative_phase",
    "rmse",
    "windowed_cv",
    "aggregate_table",
    "render_similarity_svg",
    "session_report",
    "write_table_csv",
]
