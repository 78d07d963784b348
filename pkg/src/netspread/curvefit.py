"""Least-squares fitting of seven parametric curve families.

Model forms (coefficient order as listed):

    Poly1   y = b1*x + c                      [b1, c]
    Poly2   y = b1*x + b2*x^2 + c             [b1, b2, c]
    Poly3   y = b1*x + b2*x^2 + b3*x^3 + c    [b1, b2, b3, c]
    Power1  y = b*x^a                         [b, a]        (x > 0)
    Gauss1  y = a*exp(-((x-b)/c)^2)           [a, b, c]     (c > 0 by convention)
    Exp1    y = a*exp(b*x)                    [a, b]
    Log1    y = b*ln(x) + c                   [b, c]        (x > 0)

Linear-in-parameters families solve by orthogonal factorization; the
nonlinear ones run a damped Gauss-Newton iteration (Levenberg-Marquardt)
from a deterministic log-linearization or peak-shape seed, with analytic
Jacobians.  Accepted steps never increase the squared-residual objective.

Goodness of fit: r2 = 1 - sse/sst and adj_r2 = 1 - (1-r2)*(n-1)/(n-k)
with k the coefficient count, which is why fits require n > k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AnalysisError,
    DegenerateDataError,
    FitDomainError,
    SingularDesignError,
)

_GRAD_TOL = 1e-10
_COS_TOL = 1e-8
_MAX_ITER = 200


@dataclass(frozen=True)
class CurveFamily:
    """One parametric family: tag, coefficient count and names, formula text."""

    tag: str
    arity: int
    params: tuple[str, ...]
    formula: str
    positive_x: bool = False


POLY1 = CurveFamily("Poly1", 2, ("b1", "c"), "y = b1*x + c")
POLY2 = CurveFamily("Poly2", 3, ("b1", "b2", "c"), "y = b1*x + b2*x^2 + c")
POLY3 = CurveFamily("Poly3", 4, ("b1", "b2", "b3", "c"),
                    "y = b1*x + b2*x^2 + b3*x^3 + c")
POWER1 = CurveFamily("Power1", 2, ("b", "a"), "y = b*x^a", positive_x=True)
GAUSS1 = CurveFamily("Gauss1", 3, ("a", "b", "c"), "y = a*exp(-((x-b)/c)^2)")
EXP1 = CurveFamily("Exp1", 2, ("a", "b"), "y = a*exp(b*x)")
LOG1 = CurveFamily("Log1", 2, ("b", "c"), "y = b*ln(x) + c", positive_x=True)

ALL_FAMILIES = (POLY1, POLY2, POLY3, POWER1, GAUSS1, EXP1, LOG1)
_BY_TAG = {f.tag.lower(): f for f in ALL_FAMILIES}

# Recorded in fit outputs; the normality of residuals is assumed by the
# least-squares error model, never tested here.
ERROR_MODEL_NOTE = "least squares; residuals assumed i.i.d. normal (not tested)"


def get_family(tag: str) -> CurveFamily:
    family = _BY_TAG.get(tag.lower())
    if family is None:
        raise ValueError(f"unknown curve family {tag!r}; "
                         f"expected one of {[f.tag for f in ALL_FAMILIES]}")
    return family


@dataclass(frozen=True)
class FitResult:
    """Estimated coefficients and determination scores for one family."""

    family: CurveFamily
    coefficients: np.ndarray
    sse: float
    r2: float
    adj_r2: float
    residuals: np.ndarray
    converged: bool

    @property
    def n(self) -> int:
        return len(self.residuals)

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.family.params.index(name)])

    def as_dict(self) -> dict:
        return {
            "family": self.family.tag,
            "formula": self.family.formula,
            "coefficients": {name: float(v) for name, v
                             in zip(self.family.params, self.coefficients)},
            "sse": float(self.sse),
            "r2": float(self.r2),
            "adj_r2": float(self.adj_r2),
            "converged": bool(self.converged),
            "n": self.n,
        }


@dataclass(frozen=True)
class FitRanking:
    """best_fit output: feasible fits ranked best-first, plus skip notes."""

    results: tuple[FitResult, ...]
    skipped: tuple[tuple[str, str], ...]

    @property
    def best(self) -> FitResult:
        return self.results[0]


def _evaluate(family: CurveFamily, coefs: np.ndarray, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        if family.tag in ("Poly1", "Poly2", "Poly3"):
            d = family.arity - 1
            y = np.full_like(x, coefs[d], dtype=float)
            for i in range(d):
                y = y + coefs[i] * x ** (i + 1)
            return y
        if family.tag == "Power1":
            return coefs[0] * x ** coefs[1]
        if family.tag == "Gauss1":
            u = (x - coefs[1]) / coefs[2]
            return coefs[0] * np.exp(-u * u)
        if family.tag == "Exp1":
            return coefs[0] * np.exp(coefs[1] * x)
        if family.tag == "Log1":
            return coefs[0] * np.log(x) + coefs[1]
    raise ValueError(f"unknown family {family.tag!r}")


def _jacobian(family: CurveFamily, coefs: np.ndarray, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        if family.tag == "Power1":
            b, a = coefs
            xa = x ** a
            return np.column_stack([xa, b * xa * np.log(x)])
        if family.tag == "Gauss1":
            a, b, c = coefs
            u = (x - b) / c
            e = np.exp(-u * u)
            return np.column_stack([e, a * e * 2.0 * u / c,
                                    a * e * 2.0 * u * u / c])
        if family.tag == "Exp1":
            a, b = coefs
            e = np.exp(b * x)
            return np.column_stack([e, a * x * e])
    raise ValueError(f"no analytic Jacobian for {family.tag!r}")


def _check_inputs(family: CurveFamily, xs, ys) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise ValueError("xs and ys must be 1-D vectors of equal length")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise FitDomainError("xs and ys must be finite (drop missing values first)")
    n = len(x)
    if n <= family.arity:
        raise DegenerateDataError(
            f"{family.tag} needs more than {family.arity} points, got {n} "
            f"(an exact interpolation at n = {family.arity} is not a fit)"
        )
    if family.positive_x and (x <= 0).any():
        bad = np.flatnonzero(x <= 0)
        shown = ", ".join(f"x[{i}]={x[i]}" for i in bad[:5])
        raise FitDomainError(
            f"{family.tag} requires x > 0; offending points: {shown}"
            + (" ..." if len(bad) > 5 else "")
        )
    return x, y


def _linear_basis(family: CurveFamily, x: np.ndarray) -> np.ndarray:
    if family.tag in ("Poly1", "Poly2", "Poly3"):
        d = family.arity - 1
        cols = [x ** (i + 1) for i in range(d)]
    else:  # Log1
        cols = [np.log(x)]
    cols.append(np.ones_like(x))
    return np.column_stack(cols)


def _fit_linear(family: CurveFamily, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    design = _linear_basis(family, x)
    coefs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise SingularDesignError(
            f"{family.tag}: design matrix is rank deficient "
            f"(rank {rank} < {design.shape[1]}); is x constant?"
        )
    return coefs


def _seed(family: CurveFamily, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if family.tag == "Exp1":
        pos = y > 0
        if pos.sum() >= 2 and len(np.unique(x[pos])) >= 2:
            slope, intercept = np.polyfit(x[pos], np.log(y[pos]), 1)
            return np.array([np.exp(intercept), slope])
        scale = np.max(np.abs(y))
        sign = 1.0 if y.sum() >= 0 else -1.0
        return np.array([sign * (scale if scale > 0 else 1.0), 0.0])
    if family.tag == "Power1":
        pos = y > 0
        if pos.sum() >= 2 and len(np.unique(x[pos])) >= 2:
            slope, intercept = np.polyfit(np.log(x[pos]), np.log(y[pos]), 1)
            return np.array([np.exp(intercept), slope])
        mx = float(np.mean(x))
        my = float(np.mean(y))
        return np.array([my / mx if mx != 0 and my != 0 else 1.0, 1.0])
    if family.tag == "Gauss1":
        peak = int(np.argmax(y))
        a = float(y[peak])
        b = float(x[peak])
        at_half = x[y >= a / 2.0] if a > 0 else x
        c = (float(at_half.max()) - float(at_half.min())) / 2.0
        if c <= 0:
            c = (float(x.max()) - float(x.min())) / 4.0
        if c <= 0:
            c = 1.0
        return np.array([a if a != 0 else 1.0, b, c])
    raise ValueError(f"no seed rule for {family.tag!r}")


def _at_optimum(jac: np.ndarray, resid: np.ndarray, sse: float) -> bool:
    """Stationarity certificate for the squared-residual objective.

    Either the residual-gradient norm is below the absolute tolerance
    (exact/noiseless fits reach this) or the residual is numerically
    orthogonal to every Jacobian column (the scale-free criterion that
    noisy data at arbitrary magnitude can actually satisfy).
    """
    grad = jac.T @ resid
    if np.max(np.abs(grad)) <= _GRAD_TOL:
        return True
    if sse <= 1e-300:
        return True
    col_norms = np.sqrt((jac * jac).sum(axis=0))
    denom = np.maximum(col_norms * math.sqrt(sse), 1e-300)
    return bool(np.max(np.abs(grad) / denom) <= _COS_TOL)


def _fit_nonlinear(family: CurveFamily, x: np.ndarray,
                   y: np.ndarray) -> tuple[np.ndarray, bool]:
    """Damped Gauss-Newton from the deterministic seed.

    Steps solve (J'J + lam*diag(J'J)) d = J'r and are accepted only when
    they strictly decrease the SSE; rejected steps raise the damping.
    """
    theta = _seed(family, x, y).astype(float)
    resid = y - _evaluate(family, theta, x)
    sse = float(resid @ resid)
    if not np.isfinite(sse):
        theta = np.where(np.isfinite(theta), theta, 1.0)
        resid = y - _evaluate(family, theta, x)
        sse = float(resid @ resid)
    lam = 1e-3
    for _ in range(_MAX_ITER):
        jac = _jacobian(family, theta, x)
        if not np.isfinite(jac).all():
            return theta, False
        if _at_optimum(jac, resid, sse):
            return theta, True
        grad = jac.T @ resid
        jtj = jac.T @ jac
        damping = np.maximum(np.diag(jtj), 1e-12)
        accepted = False
        for _ in range(50):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(damping), grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = theta + step
            cand_resid = y - _evaluate(family, candidate, x)
            cand_sse = float(cand_resid @ cand_resid)
            if np.isfinite(cand_sse) and cand_sse < sse:
                rel_step = np.max(np.abs(step) / (1.0 + np.abs(theta)))
                theta, resid, sse = candidate, cand_resid, cand_sse
                lam = max(lam * 0.3, 1e-12)
                accepted = True
                if rel_step < 1e-13:
                    return theta, True
                break
            lam *= 10.0
            if lam > 1e14:
                break
        if not accepted:
            # No descent step left: stalled at numerical SSE resolution.
            return theta, _at_optimum(_jacobian(family, theta, x), resid, sse)
    return theta, False


def _scores(y: np.ndarray, resid: np.ndarray, arity: int) -> tuple[float, float, float]:
    n = len(y)
    sse = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst > 0:
        r2 = 1.0 - sse / sst
    else:
        r2 = 1.0 if sse <= 1e-30 else float("-inf")
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - arity)
    return sse, r2, adj_r2


def fit(family: CurveFamily | str, xs, ys) -> FitResult:
    """Least-squares fit of one family to (xs, ys).

    Raises FitDomainError on domain violations, SingularDesignError on a
    rank-deficient design and DegenerateDataError when n <= arity.  A
    nonlinear fit that fails to converge is returned with converged=False,
    never silently.
    """
    if isinstance(family, str):
        family = get_family(family)
    x, y = _check_inputs(family, xs, ys)
    if family.tag in ("Poly1", "Poly2", "Poly3", "Log1"):
        coefs = _fit_linear(family, x, y)
        converged = True
    else:
        if len(np.unique(x)) < 2:
            raise SingularDesignError(f"{family.tag}: x is constant")
        coefs, converged = _fit_nonlinear(family, x, y)
        if family.tag == "Gauss1":
            coefs = coefs.copy()
            coefs[2] = abs(coefs[2])  # width sign is unidentifiable; fix c > 0
    resid = y - _evaluate(family, coefs, x)
    sse, r2, adj_r2 = _scores(y, resid, family.arity)
    return FitResult(family, np.asarray(coefs, dtype=float), sse, r2, adj_r2,
                     resid, converged)


def best_fit(xs, ys, families: tuple[CurveFamily, ...] = ALL_FAMILIES) -> FitRanking:
    """Fit every requested family and rank by adjusted determination.

    Families whose domain constraints fail (or with too few points, or a
    singular design) are skipped with a note.  Ties in adj_r2 resolve
    toward fewer coefficients.  All families skipped is an error.
    """
    results: list[FitResult] = []
    skipped: list[tuple[str, str]] = []
    for family in families:
        if isinstance(family, str):
            family = get_family(family)
        try:
            results.append(fit(family, xs, ys))
        except (FitDomainError, SingularDesignError, DegenerateDataError) as exc:
            skipped.append((family.tag, str(exc)))
    if not results:
        raise AnalysisError(
            "no curve family is applicable: "
            + "; ".join(f"{tag}: {note}" for tag, note in skipped)
        )
    results.sort(key=lambda r: (-r.adj_r2, r.family.arity, r.family.tag))
    return FitRanking(tuple(results), tuple(skipped))


def group_mean(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    """Mean of ys over exact matches of xs; keys returned sorted ascending."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) == 0:
        raise DegenerateDataError("group_mean: empty input")
    if len(x) != len(y):
        raise ValueError("xs and ys must have equal length")
    keys = np.unique(x)
    means = np.array([y[x == k].mean() for k in keys])
    return keys, means


def predict(fit_result: FitResult, x) -> float | np.ndarray:
    """Evaluate a converged fit at x (scalar or vector)."""
    if not fit_result.converged:
        raise AnalysisError(
            f"{fit_result.family.tag} fit did not converge; refusing to predict"
        )
    arr = np.asarray(x, dtype=float)
    if fit_result.family.positive_x and (arr <= 0).any():
        raise FitDomainError(f"{fit_result.family.tag} requires x > 0")
    value = _evaluate(fit_result.family, fit_result.coefficients, arr)
    return float(value) if np.isscalar(x) or arr.ndim == 0 else value
