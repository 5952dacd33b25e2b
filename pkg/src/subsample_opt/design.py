"""Subsampling designs, information matrices and the sensitivity function."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg

from .distributions import CovariateDistribution, DomainError, parse_dist

__all__ = [
    "SingularDesignError",
    "IntervalUnion",
    "SubsamplingDesign",
    "InformationMatrix",
    "SensitivityEvaluator",
    "design_moment",
    "information_matrix",
    "d_criterion",
    "sensitivity",
    "design_to_dict",
    "design_from_dict",
    "dump_design",
    "load_design",
]

MASS_TOL = 1e-8


class SingularDesignError(ValueError):
    """The information matrix is not (numerically) positive definite."""


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of closed, disjoint, increasing intervals; ends may be infinite."""

    intervals: tuple[tuple[float, float], ...]

    def __init__(self, intervals: Iterable[Sequence[float]]):
        ivs = tuple((float(lo), float(hi)) for lo, hi in intervals)
        for lo, hi in ivs:
            if math.isnan(lo) or math.isnan(hi) or not lo < hi:
                raise DomainError(f"invalid interval [{lo}, {hi}]")
        for (_, h0), (l1, _) in zip(ivs, ivs[1:]):
            if not h0 < l1:
                raise DomainError("intervals must be increasing with positive gaps")
        object.__setattr__(self, "intervals", ivs)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def contains(self, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals)

    def boundaries(self) -> list[float]:
        """Finite end points in decreasing order."""
        pts = [p for iv in self.intervals for p in iv if math.isfinite(p)]
        return sorted(pts, reverse=True)

    def clip(self, lo: float, hi: float) -> "IntervalUnion":
        out = []
        for a, b in self.intervals:
            a, b = max(a, lo), min(b, hi)
            if a < b:
                out.append((a, b))
        return IntervalUnion(out)

    @classmethod
    def from_unsorted(cls, intervals: Iterable[Sequence[float]]) -> "IntervalUnion":
        """Sort, drop empty pieces and merge touching or overlapping ones."""
        ivs = sorted((float(a), float(b)) for a, b in intervals if a < b)
        merged: list[list[float]] = []
        for a, b in ivs:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(merged)


@dataclass(frozen=True)
class SubsamplingDesign:
    """0-1 subsampling design: density ``f_X`` on ``support`` and zero elsewhere.

    The support is clipped to the support of ``dist``; ``alpha`` must equal the
    probability of the support up to ``MASS_TOL``.
    """

    dist: CovariateDistribution
    alpha: float
    support: IntervalUnion
    degree: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.degree < 1:
            raise DomainError(f"degree must be >= 1, got {self.degree}")
        support = self.support
        if not isinstance(support, IntervalUnion):
            support = IntervalUnion(support)
        support = support.clip(*self.dist.support)
        object.__setattr__(self, "support", support)
        mass = self.mass()
        if abs(mass - self.alpha) > MASS_TOL:
            raise DomainError(
                f"support mass {mass!r} differs from alpha {self.alpha!r}"
            )

    @classmethod
    def from_support(cls, dist, support, degree=1) -> "SubsamplingDesign":
        """Design whose alpha is the probability of ``support``."""
        if not isinstance(support, IntervalUnion):
            support = IntervalUnion.from_unsorted(support)
        support = support.clip(*dist.support)
        alpha = sum(dist.mass(lo, hi) for lo, hi in support)
        return cls(dist, alpha, support, degree)

    def mass(self) -> float:
        return math.fsum(self.dist.mass(lo, hi) for lo, hi in self.support)

    def interval_masses(self) -> list[float]:
        return [self.dist.mass(lo, hi) for lo, hi in self.support]

    def acceptance_probability(self, x: float) -> float:
        """``f_xi(x) / f_X(x)``, which is 0 or 1 for these designs."""
        return 1.0 if self.support.contains(x) else 0.0

    def boundaries(self) -> list[float]:
        """Finite support end points that are not end points of the covariate support."""
        s_lo, s_hi = self.dist.support
        return [b for b in self.support.boundaries() if b != s_lo and b != s_hi]


def design_moment(design: SubsamplingDesign, k: int) -> float:
    """``m_k = int x^k f_xi(x) dx``."""
    return math.fsum(design.dist.partial_moment(k, lo, hi) for lo, hi in design.support)


@dataclass(frozen=True)
class InformationMatrix:
    q: int
    moments: np.ndarray
    entries: np.ndarray = field(repr=False)

    @classmethod
    def from_moments(cls, moments: Sequence[float]) -> "InformationMatrix":
        m = np.asarray(moments, dtype=float)
        if m.ndim != 1 or m.size % 2 == 0:
            raise DomainError("need moments m_0 .. m_2q")
        q = (m.size - 1) // 2
        entries = linalg.hankel(m[: q + 1], m[q:])
        return cls(q, m, entries)

    @property
    def p(self) -> int:
        return self.q + 1

    def scaled(self, factor: float) -> "InformationMatrix":
        return InformationMatrix.from_moments(factor * self.moments)

    def cholesky(self) -> np.ndarray:
        try:
            c = linalg.cholesky(self.entries, lower=True)
        except linalg.LinAlgError:
            raise SingularDesignError("information matrix is not positive definite") from None
        return c

    def inverse(self) -> np.ndarray:
        c = self.cholesky()
        return linalg.cho_solve((c, True), np.eye(self.p))


def information_matrix(design: SubsamplingDesign, q: int | None = None) -> InformationMatrix:
    """Hankel matrix ``(m_{j+j'})`` of the design moments."""
    q = design.degree if q is None else q
    if not design.dist.moment_order_available(2 * q):
        raise DomainError(
            f"E(X^{2 * q}) is infinite for {design.dist}; degree {q} is not supported"
        )
    return InformationMatrix.from_moments([design_moment(design, k) for k in range(2 * q + 1)])


def d_criterion(M: InformationMatrix) -> float:
    """``log det M`` from a Cholesky factor."""
    if M.q == 2:
        m0, m2, m4 = M.moments[0], M.moments[2], M.moments[4]
        if abs(M.moments[1]) < 1e-14 and abs(M.moments[3]) < 1e-14 and m0 * m4 - m2 * m2 < 1e-14:
            raise SingularDesignError("alpha*m4 - m2^2 is numerically zero")
    c = M.cholesky()
    return 2.0 * float(np.sum(np.log(np.diag(c))))


class SensitivityEvaluator:
    """``psi(x) = alpha f(x)^T M^{-1} f(x)`` with ``f(x) = (1, x, ..., x^q)``.

    ``psi`` is kept as a polynomial of degree ``2q`` (ascending coefficients).
    For designs symmetric about 0 the odd coefficients vanish and only the
    even ones are stored in ``even_coefficients``.
    """

    def __init__(self, M: InformationMatrix, alpha: float):
        self.q = M.q
        self.alpha = float(alpha)
        self.inverse_info = M.inverse()
        inv = self.inverse_info
        coef = np.zeros(2 * self.q + 1)
        for j in range(self.q + 1):
            for jj in range(self.q + 1):
                coef[j + jj] += inv[j, jj]
        self.coefficients = self.alpha * coef
        odd = np.abs(M.moments[1::2]).max() if self.q else 0.0
        self.even_coefficients = self.coefficients[::2].copy() if odd < 1e-12 else None

    @classmethod
    def for_design(cls, design: SubsamplingDesign, q: int | None = None) -> "SensitivityEvaluator":
        return cls(information_matrix(design, q), design.alpha)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.even_coefficients is not None:
            out = P.polyval(x * x, self.even_coefficients)
        else:
            fx = np.stack([x**j for j in range(self.q + 1)], axis=-1)
            out = self.alpha * np.einsum("...i,ij,...j->...", fx, self.inverse_info, fx)
        return out if out.ndim else float(out)

    @property
    def leading_coefficient(self) -> float:
        return float(self.coefficients[-1])

    def critical_points(self) -> np.ndarray:
        """Real roots of ``psi'`` (companion-matrix eigenvalues)."""
        d = P.polyder(self.coefficients)
        roots = P.polyroots(d)
        real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
        return np.sort(real)

    def level_crossings(self, s: float) -> np.ndarray:
        """Real roots of ``psi(x) - s``, sorted."""
        c = self.coefficients.copy()
        c[0] -= s
        roots = P.polyroots(c)
        real = roots[np.abs(roots.imag) <= 1e-7 * np.maximum(1.0, np.abs(roots.real))].real
        # polish, the companion eigenvalues are only accurate to ~sqrt(eps) at double roots
        dc = P.polyder(c)
        out = []
        for r in real:
            for _ in range(3):
                d = P.polyval(r, dc)
                if d == 0.0:
                    break
                r = r - P.polyval(r, c) / d
            out.append(r)
        return np.sort(np.asarray(out))


def sensitivity(design: SubsamplingDesign, q: int | None, x):
    """``alpha f(x)^T M(xi)^{-1} f(x)``."""
    return SensitivityEvaluator.for_design(design, q)(x)


# ---------------------------------------------------------------------------
# JSON

def _enc(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _dec(x) -> float:
    if isinstance(x, str):
        if x not in ("inf", "-inf"):
            raise DomainError(f"bad interval bound {x!r}")
        return float(x)
    return float(x)


def design_to_dict(design: SubsamplingDesign) -> dict:
    return {
        "dist": design.dist.spec(),
        "alpha": design.alpha,
        "support": [[_enc(lo), _enc(hi)] for lo, hi in design.support],
        "degree": design.degree,
    }


def design_from_dict(data: dict) -> SubsamplingDesign:
    try:
        dist = parse_dist(data["dist"])
        support = IntervalUnion([_dec(lo), _dec(hi)] for lo, hi in data["support"])
        return SubsamplingDesign(dist, float(data["alpha"]), support, int(data.get("degree", 1)))
    except KeyError as exc:
        raise DomainError(f"design JSON is missing {exc}") from None


def dump_design(design: SubsamplingDesign, path, report: dict | None = None) -> None:
    data = design_to_dict(design)
    if report is not None:
        data["report"] = report
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def load_design(path) -> SubsamplingDesign:
    with open(path) as fh:
        return design_from_dict(json.load(fh))
