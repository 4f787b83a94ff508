"""Log-log order fits."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFit, NonPositiveError, ValidationError


def fit_order(points) -> tuple[float, float, float]:
    """Least-squares line through ``(log N, log error)``; returns (slope, intercept, r2)."""
    pts = np.asarray(list(points), dtype=float)
    if pts.size == 0:
        pts = pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("points must be a sequence of (N, error) pairs")
    if len(pts) < 3:
        raise DegenerateFit(f"need at least 3 points for an order fit, got {len(pts)}")
    if np.any(pts[:, 1] <= 0) or np.any(pts[:, 0] <= 0):
        raise NonPositiveError("order fit needs strictly positive N and errors")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 or ss_res <= 1e-30 * max(ss_tot, 1.0) else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)
