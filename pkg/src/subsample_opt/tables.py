"""Regenerate the reference tables (boundaries, crossover points, efficiencies)."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

from .distributions import exponential, normal, student_t, uniform
from .efficiency import efficiency_at, thread_count
from .solver import critical_alpha, solve_linear_asymmetric, solve_optimal, solve_quadratic_symmetric

TABLE_ALPHAS = (0.5, 0.3, 0.1, 0.01)
CROSSOVER_DOF = (5, 6, 7, 8, 9, 30)
EFFICIENCY_ROWS = (
    ("linear", "normal", 1, normal()),
    ("linear", "exponential", 1, exponential()),
    ("quadratic", "normal", 2, normal()),
    ("quadratic", "uniform", 2, uniform()),
    ("quadratic", "t5", 2, student_t(5)),
    ("quadratic", "t9", 2, student_t(9)),
)
WHICH = ("exp", "normal", "unif", "t5", "t5-crossover", "eff")


def _map(fn, items):
    n = thread_count()
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def table_exp(alphas=TABLE_ALPHAS):
    d = exponential()

    def row(al):
        rep = solve_linear_asymmetric(d, al)
        lower = d.cdf(rep.b)
        return {"alpha": al, "b": rep.b, "P(X<=b)": lower, "a": rep.a,
                "P(X>=a)": d.sf(rep.a), "pct_mass_[0,b]": 100.0 * lower / al}

    return _map(row, alphas)


def table_normal(alphas=TABLE_ALPHAS):
    d = normal()

    def row(al):
        rep = solve_quadratic_symmetric(d, al)
        inner = d.mass(-rep.b, rep.b)
        return {"alpha": al, "a": rep.a, "1-Phi(a)": d.sf(rep.a), "b": rep.b,
                "2Phi(b)-1": inner, "pct_mass_[-b,b]": 100.0 * inner / al}

    return _map(row, alphas)


def table_unif(alphas=TABLE_ALPHAS):
    d = uniform()

    def row(al):
        rep = solve_optimal(d, 2, al)
        return {"alpha": al, "a": rep.a, "P(X>=a)": d.sf(rep.a), "b": rep.b,
                "pct_mass_[-b,b]": 100.0 * d.mass(-rep.b, rep.b) / al}

    return _map(row, alphas)


def table_t5(alphas=(0.10, 0.07, 0.03, 0.01)):
    d = student_t(5)

    def row(al):
        rep = solve_quadratic_symmetric(d, al)
        inner = d.mass(-rep.b, rep.b) if rep.b > 0 else 0.0
        return {"alpha": al, "a": rep.a, "P(X>=a)": d.sf(rep.a), "b": rep.b,
                "P(-b<=X<=b)": inner, "pct_mass_[-b,b]": 100.0 * inner / al,
                "branch": rep.branch}

    return _map(row, alphas)


def table_crossover(dofs=CROSSOVER_DOF):
    rows = _map(lambda nu: {"nu": str(nu), "alpha_star": critical_alpha(student_t(nu))}, dofs)
    rows.append({"nu": "inf", "alpha_star": critical_alpha(normal())})
    return rows


def table_efficiency(alphas=TABLE_ALPHAS):
    def row(spec):
        model, name, q, dist = spec
        out = {"model": model, "distribution": name}
        for al in alphas:
            out[str(al)] = efficiency_at(dist, q, "uniform_random", al).efficiency
        return out

    return _map(row, EFFICIENCY_ROWS)


BUILDERS = {
    "exp": table_exp,
    "normal": table_normal,
    "unif": table_unif,
    "t5": table_t5,
    "t5-crossover": table_crossover,
    "eff": table_efficiency,
}

TITLES = {
    "exp": "Linear regression, standard exponential covariate",
    "normal": "Quadratic regression, standard normal covariate",
    "unif": "Quadratic regression, uniform covariate on [-1, 1]",
    "t5": "Quadratic regression, t5 covariate",
    "t5-crossover": "Critical proportion alpha* for t covariates (inf = normal)",
    "eff": "D-efficiency of uniform random subsampling",
}


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.5f}"
    return str(v)


def format_table(name: str, rows) -> str:
    cols = list(rows[0])
    body = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(cols)]
    lines = [f"# {TITLES[name]}", "  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def render(which: str) -> str:
    names = WHICH if which == "all" else (which,)
    return "\n\n".join(format_table(n, BUILDERS[n]()) for n in names) + "\n"
