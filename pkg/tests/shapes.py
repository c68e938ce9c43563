# tests/shapes.py
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from geometry.curve import fit_curve, from_function
from geometry.manifold import ChartedManifold

FIXTURES = Path(__file__).resolve().parent.parent / "data" / "fixtures"


def circle(M: ChartedManifold, radius: float = 1.0, samples: int = 256):
    """Closed circle of the given chart radius with its exact seam jet (n = 2)."""
    ts = np.linspace(0.0, 1.0, samples + 1)
    w = 2 * math.pi
    pts = radius * np.stack([np.cos(w * ts), np.sin(w * ts)], axis=-1)
    jet = np.array([[0.0, radius * w], [-radius * w * w, 0.0]])
    return fit_curve(M, ts, pts, jets=(jet, jet), closed=True)


def line(M: ChartedManifold, direction, duration: float = 1.0, samples: int = 64):
    """Straight segment t -> t * direction (degenerate for n >= 2)."""
    d = np.asarray(direction, dtype=float)
    return from_function(M, lambda ts: ts[:, None] * d, duration, samples)
