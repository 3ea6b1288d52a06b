"""Sparsity-promoting regression on stacked latent targets.

Columns are rescaled to unit norm before solving and coefficients are
reported in the original scale, so thresholds act on each term's actual
contribution to the fit rather than on its arbitrary physical units.

Two solvers cover the usual trade-offs: ``l1`` runs proximal-gradient
iterations (ISTA) on the lasso objective, ``stlsq`` alternates least
squares with hard thresholding until the support stabilizes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from ..numerics import solve_least_squares

STLSQ_MAX_ROUNDS = 100
ISTA_MAX_ITER = 20000
ISTA_STEP_TOL = 1e-8


@dataclass(frozen=True)
class RegressionProblem:
    """Stacked targets G and per-term response columns H."""

    target: np.ndarray          # (rows,)
    columns: np.ndarray         # (rows, n_terms)
    term_names: tuple
    row_times: np.ndarray       # source timestep index per row
    system: str = ""

    def __post_init__(self):
        g = np.asarray(self.target, dtype=float)
        h = np.asarray(self.columns, dtype=float)
        if h.ndim != 2 or g.shape[0] != h.shape[0]:
            raise ValueError("target and columns row counts differ")
        if h.shape[1] != len(self.term_names):
            raise ValueError("column count != number of term names")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            raise ValueError("regression problem contains non-finite entries")
        object.__setattr__(self, "target", g)
        object.__setattr__(self, "columns", h)

    @property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.columns, axis=0)


@dataclass(frozen=True)
class SparseCoefficients:
    xi: np.ndarray              # original-scale coefficient per term
    term_names: tuple
    reg_weight: float
    residual_rmse: float
    mode: str
    converged: bool = True

    @property
    def support(self) -> tuple:
        return tuple(n for n, c in zip(self.term_names, self.xi) if c != 0.0)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.xi))

    def as_dict(self) -> dict:
        return dict(zip(self.term_names, self.xi))


def _scaled(problem: RegressionProblem):
    norms = problem.column_norms.copy()
    norms[norms == 0.0] = 1.0
    return problem.columns / norms, problem.target, norms


def _rmse(h, g, xi_scaled):
    return float(np.sqrt(np.mean((g - h @ xi_scaled) ** 2)))


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def sparse_regress(problem: RegressionProblem, reg_weight: float,
                   mode: str = "stlsq") -> SparseCoefficients:
    """Solve min 0.5||G - H xi||^2 + penalty at one regularization weight."""
    if reg_weight < 0:
        raise ValueError("reg_weight must be nonnegative")
    h, g, norms = _scaled(problem)
    if mode == "stlsq":
        xi, converged = _stlsq(h, g, reg_weight)
    elif mode == "l1":
        xi, converged = _ista(h, g, reg_weight)
    else:
        raise ValueError(f"unknown regression mode {mode!r}")
    return SparseCoefficients(
        xi=xi / norms, term_names=problem.term_names, reg_weight=reg_weight,
        residual_rmse=_rmse(h, g, xi), mode=mode, converged=converged)


def _stlsq(h, g, threshold):
    xi = solve_least_squares(h, g)
    if threshold == 0.0:
        return xi, True
    for _ in range(STLSQ_MAX_ROUNDS):
        active = np.abs(xi) >= threshold
        new_xi = np.zeros_like(xi)
        if active.any():
            new_xi[active] = solve_least_squares(h[:, active], g)
            # refit can push a coefficient back under the threshold
            new_xi[np.abs(new_xi) < threshold] = 0.0
        if np.array_equal(new_xi != 0.0, xi != 0.0):
            return new_xi, True
        xi = new_xi
        if not active.any():
            return xi, True
    return xi, False


def _ista(h, g, weight, trace=None):
    if weight == 0.0:
        return solve_least_squares(h, g), True
    lip = np.linalg.norm(h, 2) ** 2
    if lip == 0.0:
        return np.zeros(h.shape[1]), True
    step = 1.0 / lip
    xi = np.zeros(h.shape[1])
    hth = h.T @ h
    htg = h.T @ g
    for _ in range(ISTA_MAX_ITER):
        if trace is not None:
            trace.append(0.5 * float(np.sum((g - h @ xi) ** 2))
                         + weight * float(np.abs(xi).sum()))
        grad = hth @ xi - htg
        xi_new = _soft(xi - step * grad, step * weight)
        move = np.abs(xi_new - xi).max() if xi.size else 0.0
        xi = xi_new
        if move <= ISTA_STEP_TOL:
            return xi, True
    return xi, False


def penalized_objective(problem: RegressionProblem, xi_original, weight):
    """0.5||G - H xi||^2 + w ||xi_scaled||_1, in the solver's scaled space."""
    h, g, norms = _scaled(problem)
    xi_scaled = np.asarray(xi_original) * norms
    return (0.5 * float(np.sum((g - h @ xi_scaled) ** 2))
            + weight * float(np.abs(xi_scaled).sum()))


# ---------------------------------------------------------------------------
# regularization sweep and operating points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    entries: tuple              # (weight, SparseCoefficients) pairs
    rmse_mode: SparseCoefficients
    sparsity_mode: SparseCoefficients
    pareto: tuple = field(default=())

    def weights(self):
        return tuple(w for w, _ in self.entries)


def default_weight_grid(problem: RegressionProblem, n: int = 16) -> np.ndarray:
    """Log-spaced thresholds from 1e-4 to 1e0 of the largest LS coefficient."""
    h, g, _ = _scaled(problem)
    xi0 = solve_least_squares(h, g)
    top = np.abs(xi0).max()
    if top == 0.0:
        top = 1.0
    return top * np.logspace(-4, 0, n)


def sparsity_sweep(problem: RegressionProblem, weights=None,
                   mode: str = "stlsq",
                   sparsity_slack: float = 1.5) -> SweepResult:
    """Fit at every weight and extract the two operating points.

    "rmse mode" minimizes the residual; "sparsity mode" is the largest
    weight whose residual stays within ``sparsity_slack`` times that
    minimum.
    """
    if weights is None:
        weights = default_weight_grid(problem)
    weights = np.asarray(list(weights), dtype=float)
    if weights.size == 0 or np.any(np.diff(weights) <= 0):
        raise ValueError("weight grid must be strictly increasing")
    entries = tuple((float(w), sparse_regress(problem, float(w), mode))
                    for w in weights)
    rmses = np.array([c.residual_rmse for _, c in entries])
    best = int(np.argmin(rmses))
    cutoff = sparsity_slack * rmses[best]
    sparse_idx = max(i for i in range(len(entries)) if rmses[i] <= cutoff)
    pareto = _pareto_front(entries)
    return SweepResult(entries=entries, rmse_mode=entries[best][1],
                       sparsity_mode=entries[sparse_idx][1], pareto=pareto)


def _pareto_front(entries):
    pts = [(c.residual_rmse, c.nnz, i) for i, (_, c) in enumerate(entries)]
    front = []
    for rmse, nnz, i in pts:
        if not any(r2 <= rmse and n2 <= nnz and (r2, n2) != (rmse, nnz)
                   for r2, n2, _ in pts):
            front.append(i)
    return tuple(front)


def score_recovery(coeffs: SparseCoefficients, true_terms) -> tuple:
    """(precision, recall) of the selected support against the true set."""
    unknown = set(true_terms) - set(coeffs.term_names)
    if unknown:
        raise ValueError(f"true terms not in library: {sorted(unknown)}")
    support = set(coeffs.support)
    truth = set(true_terms)
    precision = len(support & truth) / len(support) if support else 0.0
    recall = len(support & truth) / len(truth) if truth else 1.0
    return precision, recall


# ---------------------------------------------------------------------------
# plot-ready CSV reports
# ---------------------------------------------------------------------------

def coefficients_csv(coeffs: SparseCoefficients) -> str:
    buf = io.StringIO()
    buf.write("term,coefficient,selected,reg_weight,mode\n")
    for name, c in zip(coeffs.term_names, coeffs.xi):
        sel = 1 if c != 0.0 else 0
        buf.write(f"{name},{c:.17g},{sel},{coeffs.reg_weight:.17g},{coeffs.mode}\n")
    return buf.getvalue()


def sweep_csv(sweep: SweepResult) -> str:
    buf = io.StringIO()
    buf.write("reg_weight,rmse,nnz\n")
    for w, c in sweep.entries:
        buf.write(f"{w:.17g},{c.residual_rmse:.17g},{c.nnz}\n")
    return buf.getvalue()
