"""Integrated Gradients over hand-differentiated scalar functions."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError


@dataclass
class IGConfig:
    x: np.ndarray
    baseline: np.ndarray
    steps: int = 64

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.baseline = np.asarray(self.baseline, dtype=float)
        if self.steps < 1:
            raise DomainError("steps must be >= 1")
        if self.x.shape != self.baseline.shape:
            raise DomainError(f"input {self.x.shape} and baseline {self.baseline.shape} differ")


def integrated_gradients(grad_fn: Callable[[np.ndarray], np.ndarray], cfg: IGConfig) -> np.ndarray:
    """Path-integrated gradients from ``cfg.baseline`` to ``cfg.x``.

    ``grad_fn`` maps a point to the gradient of the scalar function there.
    The path integral uses the midpoint rule with ``cfg.steps`` nodes,
    accumulated in path order so the result does not depend on scheduling.
    """
    delta = cfg.x - cfg.baseline
    total = np.zeros_like(cfg.x)
    for k in range(cfg.steps):
        alpha = (k + 0.5) / cfg.steps
        g = np.asarray(grad_fn(cfg.baseline + alpha * delta), dtype=float)
        if g.shape != cfg.x.shape:
            raise DomainError("gradient shape does not match the input")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient at alpha={alpha:.4f}")
        total += g
    return delta * total / cfg.steps


def completeness_gap(fn: Callable, attributions: np.ndarray, cfg: IGConfig) -> float:
    """``sum(attr) - (F(x) - F(baseline))``; zero for exact attributions."""
    return float(np.sum(attributions) - (fn(cfg.x) - fn(cfg.baseline)))


def write_attribution_csv(path, attributions) -> None:
    """One ``column,attribution`` row per column; multi-row inputs are summed."""
    a = np.asarray(attributions, dtype=float)
    if a.ndim > 1:
        a = a.reshape(-1, a.shape[-1]).sum(axis=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column", "attribution"])
        for i, v in enumerate(a):
            w.writerow([i, repr(float(v))])
