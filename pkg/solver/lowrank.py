"""
--------------------------------------------------------
 Weighted rank-k fit of a frequency matrix
--------------------------------------------------------
Minimize  chi2 = sum_ij w_ij (F_ij - D_ij)^2,  D = S E,  rank k,
          0 <= D_ij <= 1,  D[:, 0] = 1  (unit effect column)
by alternating least squares:

 - S = [1 | A]: every state row carries a leading 1 and the
   first row of E acts as a per-column offset, so S u = 1
   holds exactly with E[:, 0] = u.
 - each half-sweep solves all rows (or columns) at once as a
   batch of small weighted normal equations.
 - after a sweep, entries outside [-delta, 1 + delta] are
   clipped in D-space and the factors refit once against the
   clipped target; a projection that raises chi2 by more than
   rel_tol is rejected and retried with a heavier penalty.
 - every run is then made feasible: columns still outside
   [0, 1] are refitted as bounded least-squares problems
   (cvxpy) and every column is shrunk toward u/2 just far
   enough that S e lies in [0, 1] exactly.
 - best feasible result of: SVD start, n_restarts perturbed
   starts and, in a rank sweep, the previous rank's model padded
   by one direction (both as a start and unchanged).
--------------------------------------------------------
"""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import os

import cvxpy
import numpy as np
import pandas as pd
from numpy.typing import NDArray

from models import io
from models.config import FitOptions
from models.experiment import FrequencyMatrix
from solver.errors import ArgumentError, DataError, NumericalError

_log = logging.getLogger(__name__)

_ABS_TOL = 1e-12          # chi2 treated as zero below this
_RIDGE = 1e-12            # relative ridge on the normal equations
_MAX_PROJECTION_TRIES = 4
_PENALTY_GROWTH = 4.0
_TIE_REL = 1e-3           # rank selection: within 0.1% of the minimum


# ---------------------------------------------------------------------
# Data structures
# ---------------------------------------------------------------------
@dataclass
class GptModel:
    """D = S E with S[:, 0] = 1 and E[:, 0] = u = (1, 0, ..., 0)."""
    S: NDArray[np.float64]
    E: NDArray[np.float64]

    @property
    def rank(self) -> int:
        return self.S.shape[1]

    def probabilities(self) -> NDArray[np.float64]:
        return self.S @ self.E

    def save(self, directory: str, tag: str) -> None:
        m, k = self.S.shape
        basis = [f"b{a}" for a in range(k)]
        io.write_matrix_csv(os.path.join(directory, f"S_{tag}.csv"), self.S, col_labels=basis)
        io.write_matrix_csv(
            os.path.join(directory, f"E_{tag}.csv"), self.E,
            row_labels=basis, col_labels=io.design_columns(self.E.shape[1]),
        )

    @classmethod
    def load(cls, directory: str, tag: str) -> "GptModel":
        S = io.read_matrix_csv(os.path.join(directory, f"S_{tag}.csv"))
        E = io.read_matrix_csv(os.path.join(directory, f"E_{tag}.csv"))
        if S.shape[1] != E.shape[0]:
            raise DataError(f"model {tag}: S is {S.shape}, E is {E.shape}")
        return cls(S, E)


@dataclass
class FitReport:
    rank: int
    chi2_train: float
    chi2_test: float = float("nan")
    iterations: int = 0
    restarts_used: int = 0
    converged: bool = False
    max_violation: float = 0.0
    chi2_history: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass
class RankSweep:
    reports: List[FitReport]
    selected_rank: int
    models: Dict[int, GptModel]


def reports_to_frame(reports: Sequence[FitReport]) -> pd.DataFrame:
    cols = ["rank", "chi2_train", "chi2_test", "iterations", "restarts_used", "converged", "max_violation"]
    return pd.DataFrame([{c: getattr(r, c) for c in cols} for r in reports], columns=cols)


# ---------------------------------------------------------------------
# Least-squares half-steps
# ---------------------------------------------------------------------
def _solve_batched(G: NDArray, r: NDArray) -> NDArray:
    d = G.shape[-1]
    if d == 0:
        return np.zeros(r.shape)
    scale = np.trace(G, axis1=1, axis2=2) / d
    ridge = _RIDGE * np.where(scale > 0, scale, 1.0)
    return np.linalg.solve(G + ridge[:, None, None] * np.eye(d), r[..., None])[..., 0]


def _update_states(X: NDArray, W: NDArray, E: NDArray) -> NDArray:
    """Rows S_i = [1, A_i] minimizing sum_j w_ij (X_ij - E_0j - A_i . C_j)^2."""
    m = X.shape[0]
    b, C = E[0], E[1:]
    d = C.shape[0]
    if d == 0:
        return np.ones((m, 1))
    CC = (C[:, None, :] * C[None, :, :]).reshape(d * d, -1)
    G = (W @ CC.T).reshape(m, d, d)
    r = (W * (X - b[None, :])) @ C.T
    return np.hstack([np.ones((m, 1)), _solve_batched(G, r)])


def _update_effects(X: NDArray, W: NDArray, S: NDArray) -> NDArray:
    """Columns E_j minimizing sum_i w_ij (X_ij - S_i . E_j)^2; E[:, 0] stays u."""
    m, k = S.shape
    SS = (S[:, :, None] * S[:, None, :]).reshape(m, k * k)
    G = (W.T @ SS).reshape(-1, k, k)
    r = (W * X).T @ S
    E = _solve_batched(G, r).T
    E[:, 0] = 0.0
    E[0, 0] = 1.0
    return E


def _chi2(X: NDArray, W: NDArray, D: NDArray) -> float:
    return float(np.sum(W * (X - D) ** 2))


def _violations(D: NDArray, delta: float) -> NDArray[np.bool_]:
    v = (D < -delta) | (D > 1.0 + delta)
    v[:, 0] = False
    return v


def _max_violation(D: NDArray) -> float:
    body = D[:, 1:]
    if body.size == 0:
        return 0.0
    return float(max(0.0, -body.min(), body.max() - 1.0))


# ---------------------------------------------------------------------
# Alternating least squares
# ---------------------------------------------------------------------
@dataclass
class _Run:
    S: NDArray
    E: NDArray
    chi2: float
    iterations: int
    converged: bool
    history: List[float]


def _als(X: NDArray, W: NDArray, S: NDArray, E: NDArray, opts: FitOptions) -> _Run:
    chi_prev = _chi2(X, W, S @ E)
    history = [chi_prev]
    w_pen = float(W.max()) if W.max() > 0 else 1.0
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        S = _update_states(X, W, E)
        E = _update_effects(X, W, S)
        chi = _chi2(X, W, S @ E)

        viol = _violations(S @ E, opts.clip_tol)
        if viol.any():
            D = S @ E
            target = np.where(viol, np.clip(D, 0.0, 1.0), X)
            scale = 1.0
            for _ in range(_MAX_PROJECTION_TRIES):
                Wp = W.copy()
                Wp[viol] = np.maximum(W[viol], scale * w_pen)
                S2 = _update_states(target, Wp, E)
                E2 = _update_effects(target, Wp, S2)
                chi2 = _chi2(X, W, S2 @ E2)
                if chi2 <= chi_prev * (1.0 + opts.rel_tol) + _ABS_TOL:
                    S, E, chi = S2, E2, chi2
                    break
                scale *= _PENALTY_GROWTH
            else:
                _log.debug("sweep %d: projection of %d entries rejected", it, int(viol.sum()))

        history.append(chi)
        if chi <= _ABS_TOL or chi_prev - chi <= opts.rel_tol * chi_prev:
            converged = True
            break
        chi_prev = chi
    return _Run(S, E, history[-1], it, converged, history)


# ---------------------------------------------------------------------
# Final feasibility
# ---------------------------------------------------------------------
def _bounded_column(x: NDArray, w: NDArray, S: NDArray) -> Optional[NDArray]:
    """argmin_e sum_i w_i (x_i - S_i . e)^2  s.t.  0 <= S e <= 1, or None if the solver fails."""
    e = cvxpy.Variable(S.shape[1])
    d = S @ e
    objective = cvxpy.Minimize(cvxpy.sum_squares(cvxpy.multiply(np.sqrt(w), d - x)))
    prob = cvxpy.Problem(objective, [d >= 0.0, d <= 1.0])
    try:
        prob.solve()
    except cvxpy.SolverError:
        return None
    if prob.status not in (cvxpy.OPTIMAL, cvxpy.OPTIMAL_INACCURATE) or e.value is None:
        return None
    return np.asarray(e.value, dtype=float)


def _shrink_to_box(S: NDArray, E: NDArray) -> NDArray:
    """
    Move each effect column toward u/2 until S e lies in [0, 1].
    With S[:, 0] = 1, S (u/2) = 1/2 on every row, so the scale
    0.5 / max_i |D_ij - 1/2| lands the column exactly on the box.
    """
    E = E.copy()
    k = E.shape[0]
    half = np.zeros(k)
    half[0] = 0.5
    dev = np.abs(S @ E[:, 1:] - 0.5).max(axis=0) if S.shape[0] else np.zeros(E.shape[1] - 1)
    lam = np.where(dev > 0.5, 0.5 / np.maximum(dev, 0.5), 1.0)
    E[:, 1:] = half[:, None] + lam[None, :] * (E[:, 1:] - half[:, None])
    return E


def _make_feasible(X: NDArray, W: NDArray, S: NDArray, E: NDArray, tol: float) -> NDArray:
    D = S @ E
    bad = np.flatnonzero(_violations(D, tol).any(axis=0))
    if bad.size:
        _log.debug("refitting %d effect columns under 0 <= D <= 1", bad.size)
        E = E.copy()
        for j in bad:
            e = _bounded_column(X[:, j], W[:, j], S)
            if e is None:
                _log.warning("bounded refit of column %d failed; shrinking instead", j)
                continue
            E[:, j] = e
    if _max_violation(S @ E) > 0.0:
        E = _shrink_to_box(S, E)
    return E


# ---------------------------------------------------------------------
# Starting points
# ---------------------------------------------------------------------
def _truncate(Y: NDArray, k: int) -> NDArray:
    U, s, Vt = np.linalg.svd(Y, full_matrices=False)
    return (U[:, :k] * s[:k]) @ Vt[:k]


def _svd_start(X: NDArray, W: NDArray, k: int, n_impute: int) -> NDArray:
    """Leading-1 state factor from the completed matrix (unprobed cells seeded with 0.5)."""
    observed = W > 0
    observed[:, 0] = True
    Y = np.where(observed, X, 0.5)
    Y[:, 0] = 1.0
    if not observed.all():
        # hard-impute: write the rank-k reconstruction back into unprobed cells
        for _ in range(n_impute):
            Y = np.where(observed, Y, np.clip(_truncate(Y, k), 0.0, 1.0))
    if k == 1:
        return np.ones((X.shape[0], 1))
    body = Y[:, 1:] - Y[:, 1:].mean(axis=0)
    U, s, _ = np.linalg.svd(body, full_matrices=False)
    A = U[:, : k - 1] * np.sqrt(s[: k - 1])
    return np.hstack([np.ones((X.shape[0], 1)), A])


def _check_rank(F: FrequencyMatrix, k: int) -> None:
    m, n_cols = F.shape
    probed_cols = 1 + int(F.probed.any(axis=0).sum())
    if k < 1:
        raise ArgumentError(f"rank must be >= 1, got {k}")
    if k > min(m, n_cols) or k > probed_cols:
        raise ArgumentError(
            f"rank {k} exceeds min(rows={m}, columns={n_cols}, probed columns={probed_cols})"
        )


def _fit(
    F: FrequencyMatrix,
    k: int,
    opts: FitOptions,
    seed: int,
    warm_start: Optional[GptModel],
    threads: int,
) -> Tuple[GptModel, FitReport]:
    _check_rank(F, k)
    W = F.weights
    X = np.where(W > 0, F.f, 0.0)

    S0 = _svd_start(X, W, k, opts.n_impute)
    starts: List[NDArray] = [S0]
    spread = 0.1 * (float(S0[:, 1:].std()) + 1e-3) if k > 1 else 0.0
    for r in range(opts.n_restarts):
        rng = np.random.default_rng([seed, k, r])
        S = S0.copy()
        S[:, 1:] += spread * rng.standard_normal(S[:, 1:].shape)
        starts.append(S)
    if warm_start is not None and warm_start.rank == k - 1:
        rng = np.random.default_rng([seed, k, opts.n_restarts])
        pad = 1e-3 * rng.standard_normal((X.shape[0], 1))
        starts.append(np.hstack([warm_start.S, pad]))

    def run(S_init: NDArray) -> _Run:
        # E fitted to the start; for the padded warm start this is no worse than [E_prev; 0]
        r = _als(X, W, S_init, _update_effects(X, W, S_init), opts)
        raw = _max_violation(r.S @ r.E)
        if raw > 0.0:
            _log.debug("rank %d: ALS leaves entries %.3g outside [0, 1]", k, raw)
            r.E = _make_feasible(X, W, r.S, r.E, opts.clip_tol)
            r.chi2 = _chi2(X, W, r.S @ r.E)
        return r

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(run, starts))
    else:
        runs = [run(S) for S in starts]

    candidates = list(runs)
    if warm_start is not None and warm_start.rank == k - 1:
        # the previous model with an inert extra direction is feasible and keeps chi2 nested in k
        S_w = starts[-1]
        E_w = np.vstack([warm_start.E, np.zeros((1, X.shape[1]))])
        if _max_violation(S_w @ E_w) <= opts.clip_tol:
            chi_w = _chi2(X, W, S_w @ E_w)
            candidates.append(_Run(S_w, E_w, chi_w, 0, False, [chi_w]))

    best = min(candidates, key=lambda r: r.chi2)
    model = GptModel(best.S, best.E)
    violation = _max_violation(model.probabilities())
    if violation > opts.clip_tol:
        raise NumericalError(f"rank {k} fit leaves entries {violation:.3g} outside [0, 1]")
    converged = any(r.converged for r in runs)
    if not converged:
        _log.warning("rank %d: no start converged within %d sweeps", k, opts.max_iters)
    report = FitReport(
        rank=k,
        chi2_train=best.chi2,
        iterations=best.iterations,
        restarts_used=len(runs),
        converged=converged,
        max_violation=violation,
        chi2_history=best.history,
    )
    _log.info("rank %d: chi2_train=%.6g after %d sweeps", k, best.chi2, best.iterations)
    return model, report


# ---------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------
def fit_rank_k(
    F_train: FrequencyMatrix,
    k: int,
    opts: Optional[FitOptions] = None,
    seed: int = 0,
    warm_start: Optional[GptModel] = None,
    threads: int = 1,
) -> Tuple[GptModel, FitReport]:
    """Best rank-k model of F_train (weighted chi2 over probed non-unit cells)."""
    return _fit(F_train, k, opts or FitOptions(), seed, warm_start, threads)


def fit_masked(
    F_train: FrequencyMatrix,
    k: int,
    opts: Optional[FitOptions] = None,
    seed: int = 0,
    warm_start: Optional[GptModel] = None,
    threads: int = 1,
) -> Tuple[GptModel, FitReport]:
    """
    Rank-k fit with unprobed cells at weight 0; the only constraint on the
    completed entries of D is that they are valid probabilities.
    """
    n_missing = int((~F_train.mask).sum())
    _log.info("masked fit: completing %d unprobed entries at rank %d", n_missing, k)
    return _fit(F_train, k, opts or FitOptions(), seed, warm_start, threads)


def testing_error(
    model: GptModel,
    F_test: FrequencyMatrix,
    train_mask: Optional[NDArray] = None,
) -> float:
    """chi2_test = sum over probed non-unit test cells of ((F_test - D) / sigma_test)^2."""
    D = model.probabilities()
    if D.shape != F_test.shape:
        raise ArgumentError(f"model predicts {D.shape} but the test matrix is {F_test.shape}")
    if train_mask is not None and not np.array_equal(np.asarray(train_mask, dtype=bool), F_test.mask):
        raise ArgumentError("train and test matrices probe different cells")
    W = F_test.weights
    return _chi2(np.where(W > 0, F_test.f, 0.0), W, D)


def select_rank(reports: Sequence[FitReport]) -> int:
    """Smallest rank whose test error is within 0.1% of the minimum."""
    best = min(r.chi2_test for r in reports)
    for r in sorted(reports, key=lambda r: r.rank):
        if r.chi2_test <= best * (1.0 + _TIE_REL) + _ABS_TOL:
            return r.rank
    return min(reports, key=lambda r: r.chi2_test).rank


def rank_sweep(
    F_train: FrequencyMatrix,
    F_test: FrequencyMatrix,
    ranks: Sequence[int],
    opts: Optional[FitOptions] = None,
    seed: int = 0,
    threads: int = 1,
) -> RankSweep:
    """
    Fit every rank on the training set, score it on the test set and pick
    the rank with the lowest testing error.
    """
    ranks = list(ranks)
    if not ranks or ranks != sorted(set(ranks)):
        raise ArgumentError(f"ranks must be nonempty and strictly ascending, got {ranks}")
    if F_train.shape != F_test.shape or not np.array_equal(F_train.mask, F_test.mask):
        raise ArgumentError("train and test matrices differ in shape or probed cells")
    opts = opts or FitOptions()

    masked = not F_train.mask.all()
    fit = fit_masked if masked else fit_rank_k
    reports: List[FitReport] = []
    models: Dict[int, GptModel] = {}
    prev: Optional[GptModel] = None
    for k in ranks:
        model, report = fit(F_train, k, opts, seed=seed, warm_start=prev, threads=threads)
        report.chi2_test = testing_error(model, F_test, F_train.mask)
        reports.append(report)
        models[k] = model
        prev = model
    selected = select_rank(reports)
    _log.info("rank sweep over %s selected k=%d", ranks, selected)
    return RankSweep(reports=reports, selected_rank=selected, models=models)
