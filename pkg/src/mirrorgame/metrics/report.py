"""Session reports, aggregate tables, and the similarity-space figure.

All writers are deterministic: the same inputs produce byte-identical
JSON/CSV/SVG output.
"""

from __future__ import annotations

import csv
import io
import os
from collections import defaultdict

import numpy as np

from ..errors import UndefinedPhaseError
from ..trajectory import Trajectory
from .distributions import emd, velocity_pdf
from .segments import segment_stats
from .similarity import SimilarityMap
from .synchrony import circular_variance, relative_phase, rmse

TABLE_COLUMNS = ("player", "role", "emd", "cv", "cv_sd", "rms", "rms_sd")

_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
)


def session_report(a: Trajectory, b: Trajectory | None = None) -> dict:
    """Coordination metric battery for one session.

    With two trajectories (already at the analysis rate and aligned) it
    reports the earth mover's distance between the velocity PDFs, the
    circular variance and mean/std of the relative phase of ``a``
    against ``b`` (positive mean: ``a`` leads), the position RMSE, and
    the total movement-segment count. Solo sessions (``b`` is None) keep
    only the segment count; pairwise fields are None. Phase fields are
    also None when a signal is too flat for a phase estimate.
    """
    n_segments = len(segment_stats(a))
    if b is None:
        return {
            "emd": None,
            "cv": None,
            "rms": None,
            "dphi_mean": None,
            "dphi_std": None,
            "n_segments": n_segments,
        }
    n_segments += len(segment_stats(b))
    rep = {
        "emd": emd(velocity_pdf(a), velocity_pdf(b)),
        "rms": rmse(a, b),
        "n_segments": n_segments,
    }
    try:
        series, summary = relative_phase(a, b)
        rep["cv"] = circular_variance(series)
        rep["dphi_mean"] = summary.mean
        rep["dphi_std"] = summary.std
    except UndefinedPhaseError:
        rep["cv"] = None
        rep["dphi_mean"] = None
        rep["dphi_std"] = None
    return rep


def aggregate_table(rows) -> list[dict]:
    """Aggregate per-session metric rows by (player, role).

    Parameters
    ----------
    rows : iterable of dict
        Each with keys ``player``, ``role``, ``emd``, ``cv``, ``rms``
        (None metric values are skipped).

    Returns
    -------
    list of dict
        One row per (player, role) with mean EMD and mean/sd of CV and
        RMS, sorted by player then role.
    """
    groups: dict[tuple[str, str], dict[str, list]] = defaultdict(
        lambda: {"emd": [], "cv": [], "rms": []}
    )
    for row in rows:
        key = (str(row["player"]), str(row["role"]))
        for field in ("emd", "cv", "rms"):
            v = row.get(field)
            if v is not None and np.isfinite(v):
                groups[key][field].append(float(v))

    def mean_sd(vals: list) -> tuple[float, float]:
        if not vals:
            return float("nan"), float("nan")
        arr = np.asarray(vals)
        sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), sd

    out = []
    for (player, role) in sorted(groups):
        g = groups[(player, role)]
        emd_m, _ = mean_sd(g["emd"])
        cv_m, cv_sd = mean_sd(g["cv"])
        rms_m, rms_sd = mean_sd(g["rms"])
        out.append(
            {
                "player": player,
                "role": role,
                "emd": emd_m,
                "cv": cv_m,
                "cv_sd": cv_sd,
                "rms": rms_m,
                "rms_sd": rms_sd,
            }
        )
    return out


def write_table_csv(rows: list[dict], path: str | os.PathLike) -> None:
    """Write aggregate rows as CSV with a fixed column order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in rows:
        writer.writerow(
            [row["player"], row["role"]]
            + [_fmt_num(row[c]) for c in TABLE_COLUMNS[2:]]
        )
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(buf.getvalue())


def _fmt_num(v) -> str:
    if v is None or not np.isfinite(v):
        return "nan"
    return f"{float(v):.6f}"


def render_similarity_svg(
    smap: SimilarityMap, path: str | os.PathLike | None = None
) -> str:
    """Render a similarity map as a standalone SVG document.

    Observations are dots colored by label; each labeled cloud's 2-sigma
    covariance ellipse is drawn around them. Returns the SVG text and
    optionally writes it to ``path``.
    """
    size = 640.0
    margin = 60.0
    pts = smap.points

    xmin, ymin = pts.min(axis=0)
    xmax, ymax = pts.max(axis=0)
    for e in smap.ellipses.values():
        bx0, bx1, by0, by1 = e.bbox()
        xmin, xmax = min(xmin, bx0), max(xmax, bx1)
        ymin, ymax = min(ymin, by0), max(ymax, by1)
    span = max(xmax - xmin, ymax - ymin, 1e-9)
    pad = 0.05 * span
    xmin -= pad
    ymin -= pad
    span += 2 * pad
    scale = (size - 2 * margin) / span

    def to_px(p):
        # y grows upward in data space, downward in SVG space
        return (
            margin + (p[0] - xmin) * scale,
            size - margin - (p[1] - ymin) * scale,
        )

    labels_in_order = list(dict.fromkeys(smap.labels))
    color = {s: _PALETTE[i % len(_PALETTE)] for i, s in enumerate(labels_in_order)}

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
        f'viewBox="0 0 {size:.0f} {size:.0f}">',
        f'<rect width="{size:.0f}" height="{size:.0f}" fill="white"/>',
    ]
    for lab, e in sorted(smap.ellipses.items()):
        cx, cy = to_px(e.center)
        vals, vecs = np.linalg.eigh(e.cov)
        # eigh sorts ascending; major axis last
        r_minor = 2.0 * np.sqrt(vals[0]) * scale
        r_major = 2.0 * np.sqrt(vals[1]) * scale
        angle = -np.degrees(np.arctan2(vecs[1, 1], vecs[0, 1]))
        parts.append(
            f'<ellipse cx="0" cy="0" rx="{r_major:.3f}" ry="{r_minor:.3f}" '
            f'transform="translate({cx:.3f},{cy:.3f}) rotate({angle:.3f})" '
            f'fill="{color[lab]}" fill-opacity="0.15" stroke="{color[lab]}" '
            f'stroke-width="1.5"/>'
        )
    for p, lab in zip(pts, smap.labels):
        px, py = to_px(p)
        parts.append(
            f'<circle cx="{px:.3f}" cy="{py:.3f}" r="4" fill="{color[lab]}"/>'
        )
    for i, lab in enumerate(labels_in_order):
        y = margin + 18.0 * i
        parts.append(
            f'<circle cx="{size - margin - 110:.3f}" cy="{y:.3f}" r="5" fill="{color[lab]}"/>'
        )
        parts.append(
            f'<text x="{size - margin - 98:.3f}" y="{y + 4:.3f}" '
            f'font-family="sans-serif" font-size="13">{_xml_escape(lab)}</text>'
        )
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(svg)
    return svg


def _xml_escape(s: str) -> str:
    return (
        s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
