"""D-efficiency of reference subsampling designs against the optimum."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .design import (
    InformationMatrix,
    SingularDesignError,
    SubsamplingDesign,
    d_criterion,
    information_matrix,
)
from .distributions import CovariateDistribution, DomainError
from .solver import SolverError, solve_optimal

__all__ = [
    "EfficiencyPoint",
    "FAMILIES",
    "uniform_random_design_info",
    "efficiency",
    "iboss_two_tail",
    "iboss_three_piece",
    "candidate_info",
    "efficiency_at",
    "efficiency_curve",
    "curve_minimum",
    "thread_count",
]

FAMILIES = ("uniform_random", "iboss_two_tail", "iboss_three_piece")
DEGENERATE_WIDTH = 1e-12


@dataclass
class EfficiencyPoint:
    alpha: float
    design_id: str
    efficiency: float
    logdet: float
    logdet_opt: float
    ok: bool = True
    error: str = ""

    def to_dict(self):
        return asdict(self)


def uniform_random_design_info(dist: CovariateDistribution, q: int, alpha: float) -> InformationMatrix:
    """``alpha * M(xi_1)`` with the raw moments ``E(X^k)`` of the covariate."""
    if not dist.moment_order_available(2 * q):
        raise DomainError(f"E(X^{2 * q}) is infinite for {dist}")
    return InformationMatrix.from_moments([alpha * dist.raw_moment(k) for k in range(2 * q + 1)])


def efficiency(candidate: InformationMatrix, optimal: InformationMatrix, p: int | None = None) -> float:
    """``(det(candidate) / det(optimal))^(1/p)`` evaluated in log space."""
    if candidate.p != optimal.p:
        raise DomainError(f"dimension mismatch: {candidate.p} vs {optimal.p}")
    p = candidate.p if p is None else p
    if p != candidate.p:
        raise DomainError(f"p={p} does not match matrix dimension {candidate.p}")
    return math.exp((d_criterion(candidate) - d_criterion(optimal)) / p)


def iboss_two_tail(dist: CovariateDistribution, alpha: float, degree: int = 1) -> SubsamplingDesign:
    """Tails below the ``alpha/2`` and above the ``1 - alpha/2`` quantile."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    support = [(-math.inf, dist.quantile(alpha / 2)), (dist.isf(alpha / 2), math.inf)]
    return SubsamplingDesign(dist, alpha, SubsamplingDesign.from_support(dist, support).support, degree)


def iboss_three_piece(dist: CovariateDistribution, alpha: float, degree: int = 2) -> SubsamplingDesign:
    """Proportion ``alpha/3`` from each tail and from the center."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not dist.symmetric:
        raise DomainError(
            "the three-piece design is only defined for symmetric covariates"
        )
    lo_c, hi_c = dist.quantile(0.5 - alpha / 6), dist.quantile(0.5 + alpha / 6)
    if dist.mass(lo_c, hi_c) <= DEGENERATE_WIDTH:
        raise SingularDesignError(
            f"three-piece design degenerate at alpha={alpha}: center collapsed"
        )
    pieces = [(-math.inf, dist.quantile(alpha / 3)), (lo_c, hi_c), (dist.isf(alpha / 3), math.inf)]
    design = SubsamplingDesign.from_support(dist, pieces, degree)
    return SubsamplingDesign(dist, alpha, design.support, degree)


def candidate_info(dist, q, family, alpha) -> InformationMatrix:
    if family == "uniform_random":
        return uniform_random_design_info(dist, q, alpha)
    if family == "iboss_two_tail":
        return information_matrix(iboss_two_tail(dist, alpha, q), q)
    if family == "iboss_three_piece":
        return information_matrix(iboss_three_piece(dist, alpha, q), q)
    raise DomainError(f"unknown design family {family!r}; choose from {FAMILIES}")


def efficiency_at(dist: CovariateDistribution, q: int, family: str, alpha: float) -> EfficiencyPoint:
    """Efficiency of one reference design; solver failures mark the point as failed."""
    try:
        opt = solve_optimal(dist, q, alpha)
        cand = candidate_info(dist, q, family, alpha)
        ld = d_criterion(cand)
        return EfficiencyPoint(alpha, family, math.exp((ld - opt.logdet) / (q + 1)), ld, opt.logdet)
    except (SolverError, SingularDesignError) as exc:
        return EfficiencyPoint(alpha, family, math.nan, math.nan, math.nan, False, str(exc))


def thread_count() -> int:
    """Worker count from ``SUBSAMPLE_OPT_THREADS`` (0 or unset means automatic)."""
    try:
        n = int(os.environ.get("SUBSAMPLE_OPT_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else min(8, os.cpu_count() or 1)


def efficiency_curve(dist, q, family, alphas, threads: int | None = None) -> list[EfficiencyPoint]:
    """One :class:`EfficiencyPoint` per alpha, in input order."""
    alphas = [float(a) for a in alphas]
    if any(not 0.0 < a < 1.0 for a in alphas):
        raise DomainError("all alphas must lie in (0, 1)")
    if list(alphas) != sorted(alphas):
        raise DomainError("alphas must be sorted")
    if family not in FAMILIES:
        raise DomainError(f"unknown design family {family!r}; choose from {FAMILIES}")
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(alphas) < 2:
        return [efficiency_at(dist, q, family, a) for a in alphas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda a: efficiency_at(dist, q, family, a), alphas))


def curve_minimum(dist, q, family, alphas=None, points=None) -> tuple[float, float]:
    """Minimum ``(alpha_min, eff_min)`` of an efficiency curve.

    The grid minimum is refined by bounded golden-section/Brent search on the
    two neighbouring grid cells.
    """
    if alphas is None:
        alphas = np.round(np.arange(1, 100) * 0.01, 10)
    if points is None:
        points = efficiency_curve(dist, q, family, alphas)
    good = [(p.alpha, p.efficiency) for p in points if p.ok]
    if not good:
        raise SolverError("no valid points on the efficiency curve")
    i = int(np.argmin([e for _, e in good]))
    lo = good[max(i - 1, 0)][0]
    hi = good[min(i + 1, len(good) - 1)][0]
    if lo == hi:
        return good[i]

    def f(a):
        pt = efficiency_at(dist, q, family, a)
        return pt.efficiency if pt.ok else math.inf

    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-7})
    if res.fun <= good[i][1]:
        return float(res.x), float(res.fun)
    return good[i]
