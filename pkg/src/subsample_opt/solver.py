"""D-optimal boundary points for polynomial regression subsampling designs.

Unknown boundaries are never iterated on directly.  The covariate line (or
the half line ``|X - center|`` for symmetric problems) is cut into bands and
Newton works on the log-odds of the band probabilities relative to a
reference band.  Every iterate therefore has ordered boundaries inside the
support, and far tails keep full precision through ``isf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy import optimize
from scipy.special import logsumexp

from .design import (
    IntervalUnion,
    SensitivityEvaluator,
    SingularDesignError,
    SubsamplingDesign,
    d_criterion,
    design_moment,
    information_matrix,
)
from .distributions import CovariateDistribution, DomainError, uniform
from .newton import NewtonResult, damped_newton
from .optimality import EquivalenceReport, GridSpec, check_equivalence

__all__ = [
    "SolverError",
    "SolveReport",
    "solve_linear_symmetric",
    "solve_linear_asymmetric",
    "solve_quadratic_symmetric",
    "solve_uniform_quadratic_closed_form",
    "uniform_quadratic_boundaries",
    "critical_alpha",
    "crossover_gap",
    "two_tail_design",
    "solve_general_symmetric",
    "solve_optimal",
    "symmetric_support",
]

RESIDUAL_TOL = 1e-10
MAX_RESTARTS = 5
CHECK_GRID = GridSpec(points=4096)


class SolverError(RuntimeError):
    """No candidate design passed the equivalence check."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


@dataclass
class SolveReport:
    design: SubsamplingDesign
    boundaries: list[float]
    r: int
    threshold: float
    logdet: float
    residuals: np.ndarray
    iterations: int
    equivalence_ok: bool
    branch: str
    params: dict = field(default_factory=dict)
    equivalence: EquivalenceReport | None = field(default=None, repr=False)

    @property
    def a(self) -> float:
        return self.params["a"]

    @property
    def b(self) -> float:
        return self.params.get("b", 0.0)

    def interval_masses(self) -> list[float]:
        return self.design.interval_masses()

    def to_dict(self) -> dict:
        return {
            "boundaries": list(self.boundaries),
            "r": self.r,
            "threshold": self.threshold,
            "logdet": self.logdet,
            "residuals": [float(v) for v in self.residuals],
            "iterations": self.iterations,
            "branch": self.branch,
            "equivalence_ok": self.equivalence_ok,
            "params": dict(self.params),
        }


# ---------------------------------------------------------------------------
# helpers

def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _require_symmetric(dist, what):
    if not dist.symmetric:
        raise DomainError(f"{what} needs a symmetric covariate distribution, got {dist}")


def _require_moment(dist, k):
    if not dist.moment_order_available(k):
        raise DomainError(f"E(X^{k}) is infinite for {dist}")


def symmetric_support(center: float, offsets) -> IntervalUnion:
    """Support ``center +- (bands)`` for offsets ``c_1 > ... > c_r > 0``.

    Outermost bands ``|x - center| >= c_1`` are included; inclusion alternates
    inward, so the central band ``[-c_r, c_r]`` belongs to the support iff
    ``r`` is even.
    """
    c = list(offsets)
    r = len(c)
    edges = [math.inf, *c, 0.0]
    pieces = []
    for i in range(0, r + 1, 2):
        hi, lo = edges[i], edges[i + 1]
        if lo == 0.0:
            pieces.append((center - hi, center + hi))
        else:
            pieces.append((center + lo, center + hi))
            pieces.append((center - hi, center - lo))
    return IntervalUnion.from_unsorted(pieces)


def _softmax(z):
    z = np.asarray(z, dtype=float)
    return np.exp(z - logsumexp(z))


def _abs_offsets(dist, w):
    """Offsets ``c_i`` with ``P(|X - center| >= c_i) = w_0 + ... + w_{i-1}``."""
    mu = dist.center
    out = []
    for i in range(1, len(w)):
        g = math.fsum(w[:i])
        h = math.fsum(w[i:])
        if g <= h:
            out.append(dist.isf(0.5 * g) - mu)
        else:
            out.append(dist.quantile(0.5 + 0.5 * h) - mu)
    return out


def _lobatto_cuts(r, alpha):
    """Band cut points in exceedance probability for a Lobatto-type start.

    Mirrors the classical D-optimal design of degree ``r`` on an interval
    (end points and roots of ``P_r'``, equal weights) with each point widened
    to an interval of mass ``alpha / (r + 1)``.  Degree 2 gives the three
    piece ``alpha/3`` design.
    """
    share = alpha / (r + 1)
    nodes = legendre.Legendre.basis(r).deriv().roots().real if r > 1 else np.array([])
    inner = sorted((x for x in nodes if x > 1e-12), reverse=True)
    cuts = [2.0 * share]
    for x in inner:
        g = 1.0 - x
        cuts += [g - share, g + share]
    if r % 2 == 0:
        cuts.append(1.0 - share)
    cuts = np.asarray(cuts)
    if cuts.size == r and np.all(np.diff(cuts) > 0) and cuts[0] > 0 and cuts[-1] < 1:
        return cuts
    # equal split fallback: in-bands share alpha, gaps share 1 - alpha
    n_in = r // 2 + 1
    n_out = r + 1 - n_in
    w = [alpha / n_in if i % 2 == 0 else (1 - alpha) / n_out for i in range(r + 1)]
    return np.cumsum(w)[:-1]


def _params_from_cuts(cuts):
    w = np.diff(np.concatenate([[0.0], cuts, [1.0]]))
    return np.log(w[1:] / w[0])


def _finalize(dist, alpha, support, q, branch, residuals, iterations, params, r,
              grid=CHECK_GRID) -> SolveReport:
    design = SubsamplingDesign(dist, alpha, support, q)
    eq = check_equivalence(design, q, grid)
    M = information_matrix(design, q)
    return SolveReport(
        design=design,
        boundaries=design.support.boundaries(),
        r=r,
        threshold=eq.threshold,
        logdet=d_criterion(M),
        residuals=np.asarray(residuals, dtype=float),
        iterations=iterations,
        equivalence_ok=eq.passed,
        branch=branch,
        params=params,
        equivalence=eq,
    )


def _accepted(report, diagnostics, label):
    ok = report.equivalence_ok and np.all(np.abs(report.residuals) <= RESIDUAL_TOL)
    if not ok:
        worst = report.equivalence.worst_violation() if report.equivalence else None
        diagnostics.append(
            f"{label}: residuals={np.abs(report.residuals).max():.3e} "
            f"equivalence={'ok' if report.equivalence_ok else 'failed'} worst={worst}"
        )
    return ok


# ---------------------------------------------------------------------------
# linear regression

def solve_linear_symmetric(dist: CovariateDistribution, alpha: float) -> SolveReport:
    """Two tails of mass ``alpha/2`` each: boundaries at the ``alpha/2`` quantiles."""
    _check_alpha(alpha)
    if not dist.symmetric:
        raise DomainError(
            f"{dist} is not symmetric; use solve_linear_asymmetric instead"
        )
    _require_moment(dist, 2)
    a1 = dist.isf(alpha / 2)
    a2 = dist.quantile(alpha / 2)
    support = IntervalUnion([(-math.inf, a2), (a1, math.inf)])
    design = SubsamplingDesign.from_support(dist, support, 1)
    m1 = design_moment(design, 1)
    res = [design.mass() - alpha, alpha * (a1 + a2) - 2.0 * m1]
    mu = dist.center
    return _finalize(dist, alpha, support, 1, "quantile", res, 0,
                     {"a": a1 - mu, "b": mu - a2}, 1)


def _linear_bands(dist, y):
    w = _softmax([y[0], 0.0, y[1]])
    b = dist.quantile(w[0])
    a = dist.isf(w[2])
    return w, a, b


def solve_linear_asymmetric(dist: CovariateDistribution, alpha: float, seed: int = 0) -> SolveReport:
    """Damped Newton on ``P(X <= b) + P(X >= a) = alpha`` and ``alpha(a + b) = 2 m_1``."""
    _check_alpha(alpha)
    _require_moment(dist, 2)

    def residual(y):
        w, a, b = _linear_bands(dist, y)
        if not a > b:
            return np.array([np.nan, np.nan])
        design = SubsamplingDesign.from_support(dist, [(-math.inf, b), (a, math.inf)], 1)
        m1 = design_moment(design, 1)
        return np.array([w[0] + w[2] - alpha, alpha * (a + b) - 2.0 * m1])

    w0 = np.array([alpha / 2, 1 - alpha, alpha / 2])
    start = np.log(w0[[0, 2]] / w0[1])
    rng = np.random.default_rng(seed)
    diagnostics = []
    total_iter = 0
    for attempt in range(MAX_RESTARTS + 1):
        y0 = start if attempt == 0 else start + rng.normal(0.0, 0.5, 2)
        res = damped_newton(residual, y0)
        total_iter += res.iterations
        if res.converged:
            w, a, b = _linear_bands(dist, res.x)
            s_lo = dist.support[0]
            if b - s_lo > 1e-12 * max(1.0, abs(b)):
                rep = _finalize(dist, alpha, [(-math.inf, b), (a, math.inf)], 1,
                                "two_interval", res.residual, total_iter,
                                {"a": a, "b": b}, 1)
                if _accepted(rep, diagnostics, f"newton attempt {attempt}"):
                    return rep
        else:
            diagnostics.append(f"newton attempt {attempt}: {res.message}, |F|={res.max_residual:.3e}")

    # the lower tail may vanish at a finite support edge
    s_lo = dist.support[0]
    if math.isfinite(s_lo):
        a = dist.isf(alpha)
        design = SubsamplingDesign(dist, alpha, [(a, math.inf)], 1)
        m1 = design_moment(design, 1)
        # equality for the lower boundary relaxes to psi(a) >= psi(edge)
        psi = SensitivityEvaluator.for_design(design, 1)
        slack = psi(a) - psi(s_lo)
        rep = _finalize(dist, alpha, [(a, math.inf)], 1, "one_interval",
                        [design.mass() - alpha, min(slack, 0.0)], total_iter,
                        {"a": a, "b": s_lo}, 1)
        if slack >= 0 and _accepted(rep, diagnostics, "edge branch"):
            return rep
        diagnostics.append(f"edge branch infeasible: psi(a) - psi(edge) = {slack:.3e}")
    raise SolverError(f"linear design for {dist} at alpha={alpha} failed", diagnostics)


# ---------------------------------------------------------------------------
# quadratic regression

def _quad_bands(dist, y):
    """Bands of ``|X|``: outer tail, gap, inner interval."""
    w = _softmax([0.0, y[0], y[1]])
    a, b = _abs_offsets(dist, w)
    return w, a, b


def _quad_residual(dist, alpha, w, a, b):
    design = SubsamplingDesign.from_support(dist, symmetric_support(0.0, [a, b]), 2)
    m2 = design_moment(design, 2)
    m4 = design_moment(design, 4)
    return np.array([
        w[0] + w[2] - alpha,
        alpha * m2 * (a * a + b * b) - (3.0 * m2 * m2 - alpha * m4),
    ])


def _quad_bracket(dist, alpha):
    """1-D fallback: inner mass ``t`` in ``(0, alpha)``, outer mass ``alpha - t``."""
    def h(t):
        w = [alpha - t, 1.0 - alpha, t]
        a, b = _abs_offsets(dist, w)
        return _quad_residual(dist, alpha, w, a, b)[1]

    ts = alpha * np.geomspace(1e-12, 1.0 - 1e-9, 200)
    vals = [h(t) for t in ts]
    for t0, t1, v0, v1 in zip(ts, ts[1:], vals, vals[1:]):
        if np.sign(v0) != np.sign(v1):
            return optimize.brentq(h, t0, t1, xtol=1e-300, rtol=1e-15, maxiter=500)
    return None


def solve_quadratic_symmetric(dist: CovariateDistribution, alpha: float, seed: int = 0) -> SolveReport:
    """Three intervals ``(-inf, -a] u [-b, b] u [a, inf)`` or, failing that, two tails.

    The three-interval branch solves ``P(|X| <= b) + P(|X| >= a) = alpha`` and
    ``alpha m_2 (a^2 + b^2) = 3 m_2^2 - alpha m_4``, which is ``psi(a) = psi(b)``
    divided by ``a^2 - b^2``.  If no root with ``b > 0``
    validates, the two-tail design with ``a`` at the ``1 - alpha/2`` quantile is
    returned provided ``psi(0) <= psi(a)``.
    """
    _check_alpha(alpha)
    _require_symmetric(dist, "solve_quadratic_symmetric")
    if dist.center != 0.0:
        raise DomainError(
            "solve_quadratic_symmetric expects a covariate symmetric about 0; "
            "use solve_general_symmetric or shift with location_scale"
        )
    _require_moment(dist, 4)

    def residual(y):
        w, a, b = _quad_bands(dist, y)
        if not (a > b > 0.0):
            return np.array([np.nan, np.nan])
        return _quad_residual(dist, alpha, w, a, b)

    cuts = _lobatto_cuts(2, alpha)
    start = _params_from_cuts(cuts)
    rng = np.random.default_rng(seed)
    diagnostics = []
    total_iter = 0

    def three_interval(res: NewtonResult, label):
        w, a, b = _quad_bands(dist, res.x)
        if b < 1e-9:
            diagnostics.append(f"{label}: b={b:.3e} collapsed")
            return None
        rep = _finalize(dist, alpha, symmetric_support(0.0, [a, b]), 2, "three_interval",
                        res.residual, total_iter, {"a": a, "b": b}, 2)
        return rep if _accepted(rep, diagnostics, label) else None

    for attempt in range(MAX_RESTARTS + 1):
        y0 = start if attempt == 0 else start + rng.normal(0.0, 0.5, 2)
        res = damped_newton(residual, y0)
        total_iter += res.iterations
        if res.converged:
            rep = three_interval(res, f"newton attempt {attempt}")
            if rep is not None:
                return rep
        else:
            diagnostics.append(f"newton attempt {attempt}: {res.message}, |F|={res.max_residual:.3e}")
        if attempt == 0:
            t = _quad_bracket(dist, alpha)
            if t is None:
                diagnostics.append("bracketing: no sign change with b > 0")
                break
            # polish the bracketed root with Newton
            w = np.array([alpha - t, 1.0 - alpha, t])
            res = damped_newton(residual, np.log(w[1:] / w[0]))
            total_iter += res.iterations
            if res.converged:
                rep = three_interval(res, "bracketed start")
                if rep is not None:
                    return rep

    a = dist.isf(alpha / 2)
    support = symmetric_support(0.0, [a])
    design = SubsamplingDesign(dist, alpha, support, 2)
    psi = SensitivityEvaluator.for_design(design, 2)
    rep = _finalize(dist, alpha, support, 2, "two_interval",
                    [design.mass() - alpha, 0.0], total_iter,
                    {"a": a, "b": 0.0, "psi0_minus_psia": float(psi(0.0) - psi(a))}, 1)
    if psi(0.0) <= psi(a) + rep.equivalence.tol and _accepted(rep, diagnostics, "two-interval branch"):
        return rep
    raise SolverError(f"quadratic design for {dist} at alpha={alpha} failed", diagnostics)


def uniform_quadratic_boundaries(alpha: float) -> tuple[float, float]:
    """Explicit ``(a, b)`` for quadratic regression with X uniform on [-1, 1]."""
    _check_alpha(alpha)
    al = alpha
    disc = 45 - 90 * al + 90 * al**2 - 75 * al**3 + 57 * al**4 - 27 * al**5 + 5 * al**6
    inner = (45 - 15 * al + 15 * al**2 - 45 * al**3 + 20 * al**4
             - 4 * al * math.sqrt(5.0) * math.sqrt(disc))
    a = 0.5 * (1 - al) + math.sqrt(inner / (180 * (1 - al)))
    b = a - (1 - al)
    return a, b


def solve_uniform_quadratic_closed_form(alpha: float, dist: CovariateDistribution | None = None) -> SolveReport:
    """Closed-form quadratic design for a uniform covariate.

    ``dist`` defaults to Uniform(-1, 1); other uniform ranges are handled by
    the affine map of the standard solution.
    """
    _check_alpha(alpha)
    dist = dist or uniform(-1.0, 1.0)
    if dist.kind != "uniform":
        raise DomainError(f"closed form only applies to uniform covariates, got {dist}")
    a0, b0 = uniform_quadratic_boundaries(alpha)
    if not 0.0 < b0 < a0 < 1.0:
        raise SolverError(f"closed form left 0 < b < a < 1 at alpha={alpha}: a={a0}, b={b0}")
    mu, sig = dist.loc, dist.scale
    a, b = sig * a0, sig * b0
    support = symmetric_support(mu, [a, b])
    design = SubsamplingDesign.from_support(dist, support, 2)
    centered = SubsamplingDesign.from_support(uniform(-1.0, 1.0), symmetric_support(0.0, [a0, b0]), 2)
    m2, m4 = design_moment(centered, 2), design_moment(centered, 4)
    res = [design.mass() - alpha, alpha * m2 * (a0**2 + b0**2) - (3 * m2 * m2 - alpha * m4)]
    return _finalize(dist, alpha, support, 2, "closed_form", res, 0, {"a": a, "b": b}, 2)


# ---------------------------------------------------------------------------
# crossover between three and two intervals

def two_tail_design(dist: CovariateDistribution, alpha: float, degree: int = 2) -> SubsamplingDesign:
    """Tails beyond the ``alpha/2`` and ``1 - alpha/2`` quantiles."""
    support = [(-math.inf, dist.quantile(alpha / 2)), (dist.isf(alpha / 2), math.inf)]
    return SubsamplingDesign.from_support(dist, support, degree)


def crossover_gap(dist: CovariateDistribution, alpha: float) -> float:
    """``psi(center) - psi(a)`` for the two-tail design with ``a = q_{1 - alpha/2}``."""
    design = two_tail_design(dist, alpha, 2)
    psi = SensitivityEvaluator.for_design(design, 2)
    mu = dist.center
    return float(psi(mu) - psi(dist.isf(alpha / 2)))


def critical_alpha(dist: CovariateDistribution, n_grid: int = 64, xtol: float = 1e-12) -> float:
    """Proportion at which the quadratic optimum switches from three to two intervals.

    Returns 1.0 when the gap stays positive on all of (0, 1), i.e. the interior
    interval never vanishes.
    """
    _require_symmetric(dist, "critical_alpha")
    _require_moment(dist, 4)
    grid = np.geomspace(1e-4, 1.0 - 1e-4, n_grid)
    vals = [crossover_gap(dist, a) for a in grid]
    for a0, a1, v0, v1 in zip(grid, grid[1:], vals, vals[1:]):
        if v0 > 0.0 >= v1:
            return optimize.brentq(lambda a: crossover_gap(dist, a), a0, a1,
                                   xtol=xtol, rtol=1e-14, maxiter=500)
    if vals[0] <= 0.0:
        return 0.0
    return 1.0


# ---------------------------------------------------------------------------
# general degree, symmetric covariate

def _general_bands(dist, y):
    w = _softmax(np.concatenate([[0.0], y]))
    return w, _abs_offsets(dist, w)


def _general_residual(dist, alpha, q, w, offsets):
    mu = dist.center
    support = symmetric_support(mu, offsets)
    design = SubsamplingDesign.from_support(dist, support, q)
    psi = SensitivityEvaluator(information_matrix(design, q), design.mass())
    vals = [psi(mu + c) for c in offsets]
    mass = math.fsum(w[0::2])
    return np.array([mass - alpha, *np.diff(vals)])


def solve_general_symmetric(dist: CovariateDistribution, q: int, alpha: float, seed: int = 0) -> SolveReport:
    """Symmetric optimum for degree ``q`` with ``r = q, q-1, ..., 1`` boundary pairs.

    For each ``r`` the mass constraint and ``psi(c_1) = ... = psi(c_r)`` are
    solved; the first candidate that passes the equivalence check wins.
    """
    _check_alpha(alpha)
    if q < 1:
        raise DomainError(f"degree must be >= 1, got {q}")
    if not dist.symmetric:
        raise DomainError(
            "general-degree designs are only available for symmetric covariates"
        )
    _require_moment(dist, 2 * q)
    mu = dist.center
    diagnostics = []
    total_iter = 0
    for r in range(q, 0, -1):
        label = f"r={r}"
        if r == 1:
            c1 = dist.isf(alpha / 2) - mu
            support = symmetric_support(mu, [c1])
            d = SubsamplingDesign.from_support(dist, support, q)
            rep = _finalize(dist, alpha, support, q, "quantile" if q == 1 else "two_interval",
                            [d.mass() - alpha], total_iter, {"a": c1, "b": 0.0}, 1)
            if _accepted(rep, diagnostics, label):
                return rep
            continue

        def residual(y, r=r):
            w, offs = _general_bands(dist, y)
            if not all(c0 > c1 for c0, c1 in zip(offs, offs[1:])) or offs[-1] <= 0.0:
                return np.full(r, np.nan)
            try:
                return _general_residual(dist, alpha, q, w, offs)
            except (SingularDesignError, DomainError):
                return np.full(r, np.nan)

        start = _params_from_cuts(_lobatto_cuts(r, alpha))
        rng = np.random.default_rng(seed + r)
        for attempt in range(MAX_RESTARTS + 1):
            y0 = start if attempt == 0 else start + rng.normal(0.0, 0.5, r)
            res = damped_newton(residual, y0)
            total_iter += res.iterations
            if not res.converged:
                diagnostics.append(f"{label} attempt {attempt}: {res.message}, |F|={res.max_residual:.3e}")
                continue
            w, offs = _general_bands(dist, res.x)
            if offs[-1] < 1e-9 * max(1.0, dist.scale):
                diagnostics.append(f"{label} attempt {attempt}: innermost boundary collapsed")
                continue
            params = {"offsets": list(offs), "a": offs[0]}
            if r >= 2:
                params["b"] = offs[1]
            rep = _finalize(dist, alpha, symmetric_support(mu, offs), q,
                            "three_interval" if (q == 2 and r == 2) else f"r{r}",
                            res.residual, total_iter, params, r)
            if _accepted(rep, diagnostics, f"{label} attempt {attempt}"):
                return rep
    raise SolverError(f"degree-{q} design for {dist} at alpha={alpha} failed", diagnostics)


# ---------------------------------------------------------------------------

def solve_optimal(dist: CovariateDistribution, q: int, alpha: float, method: str = "auto") -> SolveReport:
    """Dispatch to the appropriate solver for ``(dist, q)``.

    ``method`` is ``auto``, ``newton`` or ``closed-form``.
    """
    if method not in ("auto", "newton", "closed-form"):
        raise DomainError(f"unknown method {method!r}")
    if q == 1:
        if method == "newton":
            return solve_linear_asymmetric(dist, alpha)
        if dist.symmetric:
            return solve_linear_symmetric(dist, alpha)
        if method == "closed-form":
            raise DomainError(f"no closed form for linear regression under {dist}")
        return solve_linear_asymmetric(dist, alpha)
    if q == 2 and dist.kind == "uniform" and method != "newton":
        return solve_uniform_quadratic_closed_form(alpha, dist)
    if method == "closed-form":
        raise DomainError(f"no closed form for degree {q} under {dist}")
    if q == 2 and dist.symmetric and dist.center == 0.0:
        return solve_quadratic_symmetric(dist, alpha)
    return solve_general_symmetric(dist, q, alpha)
