"""Equivalence-theorem check for subsampling designs.

A design with support ``X*`` is D-optimal iff ``psi(x) >= s*`` on ``X*`` and
``psi(x) < s*`` off it, where ``s*`` is the ``(1 - alpha)``-quantile of
``psi(X)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .design import SensitivityEvaluator, SubsamplingDesign

__all__ = [
    "EquivalenceReport",
    "GridSpec",
    "threshold",
    "check_equivalence",
    "pushforward_upper_mass",
    "upper_level_set",
]


@dataclass(frozen=True)
class GridSpec:
    points: int = 4096
    lower_prob: float = 1e-6
    upper_prob: float = 1e-6


@dataclass
class EquivalenceReport:
    threshold: float
    min_on_support: float
    max_off_support: float
    violations: list = field(default_factory=list)
    grid_points: int = 0
    passed: bool = False
    tol: float = 0.0

    def worst_violation(self):
        """``(x, psi(x), side)`` with the largest distance to the threshold."""
        if not self.violations:
            return None
        return max(self.violations, key=lambda v: abs(v[1] - self.threshold))

    def to_dict(self) -> dict:
        def fin(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {
            "threshold": self.threshold,
            "min_on_support": fin(self.min_on_support),
            "max_off_support": fin(self.max_off_support),
            "violations": [
                {"x": x, "psi": p, "side": side} for x, p, side in self.violations[:20]
            ],
            "n_violations": len(self.violations),
            "grid_points": self.grid_points,
            "tol": self.tol,
            "passed": self.passed,
        }


def upper_level_set(psi: SensitivityEvaluator, s: float, bounds: tuple[float, float]):
    """Intervals of ``bounds`` on which ``psi >= s``."""
    lo, hi = bounds
    roots = [r for r in psi.level_crossings(s) if lo < r < hi]
    cuts = [lo, *roots, hi]
    out = []
    for a, b in zip(cuts, cuts[1:]):
        if a == b:
            continue
        if math.isinf(a) and math.isinf(b):
            mid = 0.0
        elif math.isinf(a):
            mid = b - 1.0 - abs(b)
        elif math.isinf(b):
            mid = a + 1.0 + abs(a)
        else:
            mid = 0.5 * (a + b)
        if psi(mid) >= s:
            if out and out[-1][1] == a:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    return out


def pushforward_upper_mass(design: SubsamplingDesign, psi: SensitivityEvaluator, s: float) -> float:
    """``P(psi(X) >= s)`` for the covariate ``X``."""
    dist = design.dist
    return math.fsum(dist.mass(a, b) for a, b in upper_level_set(psi, s, dist.support))


def threshold(design: SubsamplingDesign, q: int | None = None, psi: SensitivityEvaluator | None = None) -> float:
    """``(1 - alpha)``-quantile of the distribution of ``psi(X)``.

    The level sets of the polynomial ``psi`` are found from its real roots, so
    the pushforward probability is exact up to the root accuracy.  For an
    optimal design the result equals ``psi`` at every finite boundary point.
    """
    psi = psi or SensitivityEvaluator.for_design(design, q)
    dist, alpha = design.dist, design.alpha
    s_lo, s_hi = dist.support
    cand = [c for c in psi.critical_points() if s_lo <= c <= s_hi]
    cand += [e for e in (s_lo, s_hi) if math.isfinite(e)]
    if not cand:
        cand = [dist.quantile(0.5)]
    lo = float(min(psi(c) for c in cand))
    # P(psi(X) >= lo) = 1 > alpha; grow hi until the upper mass drops below alpha
    step = max(1.0, abs(lo))
    hi = lo + step
    while pushforward_upper_mass(design, psi, hi) > alpha:
        step *= 2.0
        hi = lo + step
        if step > 1e300:
            raise ArithmeticError("could not bracket the threshold")

    def g(s):
        return pushforward_upper_mass(design, psi, s) - alpha

    return optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def check_equivalence(
    design: SubsamplingDesign,
    q: int | None = None,
    grid: GridSpec | int | None = None,
    s_star: float | None = None,
) -> EquivalenceReport:
    """Evaluate the equivalence conditions on a grid plus all critical points.

    Boundary points lie on the support (closed intervals) and are compliant
    whenever ``|psi - s*| <= tol``.
    """
    if grid is None:
        grid = GridSpec()
    elif isinstance(grid, int):
        grid = GridSpec(points=grid)
    q = design.degree if q is None else q
    psi = SensitivityEvaluator.for_design(design, q)
    s = threshold(design, q, psi) if s_star is None else s_star
    tol = 1e-7 * max(1.0, abs(s))
    dist = design.dist
    s_lo, s_hi = dist.support

    xs = np.linspace(dist.quantile(grid.lower_prob), dist.isf(grid.upper_prob), grid.points)
    extra = [p for iv in design.support for p in iv if math.isfinite(p)]
    extra += [e for e in (s_lo, s_hi) if math.isfinite(e)]
    extra += [c for c in psi.critical_points() if s_lo <= c <= s_hi]
    xs = np.unique(np.concatenate([xs, np.asarray(extra, dtype=float)]))
    xs = xs[(xs >= s_lo) & (xs <= s_hi)]

    vals = np.asarray(psi(xs))
    inside = np.array([design.support.contains(x) for x in xs])
    on = vals[inside]
    off = vals[~inside]
    min_on = float(on.min()) if on.size else math.inf
    max_off = float(off.max()) if off.size else -math.inf

    violations = []
    for x, v, ins in zip(xs, vals, inside):
        if ins and v < s - tol:
            violations.append((float(x), float(v), "support"))
        elif not ins and v > s + tol:
            violations.append((float(x), float(v), "off-support"))
    passed = min_on >= s - tol and max_off <= s + tol
    return EquivalenceReport(s, min_on, max_off, violations, int(xs.size), passed, tol)
