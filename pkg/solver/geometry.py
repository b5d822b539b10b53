"""
--------------------------------------------------------
 Realized / consistent convex bodies
--------------------------------------------------------
 - VPolytope: convex hull of realized state (effect) vectors,
   inner bound on the true space.
 - HPolytope: {x : lo <= a.x <= hi, a_eq.x = b}, the dual of
   the realized space of the opposite kind, outer bound.
 - Ray shooting from the center: closed form against an
   HPolytope, one LP (HiGHS) against a VPolytope.
 - 3D projections: qhull hull of projected vertices, or of LP
   support points for H-bodies; joint numerical range sampling
   of the exact qutrit bodies for reference.
--------------------------------------------------------
"""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from models import io
from models.qutrit import (
    BLOCH_DIM,
    effect_to_bloch,
    is_valid_state_vector,
    projector,
    sample_haar_ket,
    state_to_bloch,
)
from solver.errors import ArgumentError, DataError

_log = logging.getLogger(__name__)

ABS_TOL = 1e-9
NORMALIZATION_TOL = 1e-6
MERGE_DECIMALS = 9
SPACES = ("state", "effect")


def _unit(dim: int) -> NDArray[np.float64]:
    u = np.zeros(dim)
    u[0] = 1.0
    return u


# ---------------------------------------------------------------------
# Bodies
# ---------------------------------------------------------------------
@dataclass
class VPolytope:
    vertices: NDArray[np.float64]
    ambient_tag: str = "state"

    def __post_init__(self) -> None:
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if self.vertices.shape[0] == 0 or self.vertices.shape[1] == 0:
            raise DataError("polytope needs at least one vertex")
        if self.ambient_tag not in SPACES:
            raise ArgumentError(f"ambient_tag must be one of {SPACES}, got {self.ambient_tag!r}")
        if self.ambient_tag == "state":
            off = np.abs(self.vertices[:, 0] - 1.0).max()
            if off > NORMALIZATION_TOL:
                raise DataError(f"state vertices must have leading component 1 (off by {off:.3g})")

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def contains(self, x: NDArray, tol: float = ABS_TOL) -> bool:
        """LP feasibility of x as a convex combination of the vertices."""
        V = self.vertices
        n = len(V)
        A_eq = np.vstack([V.T, np.ones((1, n))])
        b_eq = np.concatenate([np.asarray(x, dtype=float), [1.0]])
        # minimize the l_inf residual so near-boundary points resolve by tol
        c = np.zeros(n + 1)
        c[-1] = 1.0
        A_ub = np.vstack([
            np.hstack([A_eq, -np.ones((A_eq.shape[0], 1))]),
            np.hstack([-A_eq, -np.ones((A_eq.shape[0], 1))]),
        ])
        b_ub = np.concatenate([b_eq, -b_eq])
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * (n + 1), method="highs")
        return bool(res.status == 0 and res.fun <= tol)


@dataclass
class HPolytope:
    A: NDArray[np.float64]
    lo: NDArray[np.float64]
    hi: NDArray[np.float64]
    A_eq: NDArray[np.float64] = field(default_factory=lambda: np.zeros((0, BLOCH_DIM)))
    b_eq: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.lo = np.asarray(self.lo, dtype=float).reshape(-1)
        self.hi = np.asarray(self.hi, dtype=float).reshape(-1)
        self.A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, self.A.shape[1])
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        p = self.A.shape[0]
        if self.lo.shape != (p,) or self.hi.shape != (p,) or np.any(self.lo > self.hi):
            raise ArgumentError("inequality bounds must be one (lo <= hi) pair per row of A")
        if self.A_eq.shape[0] != self.b_eq.shape[0]:
            raise ArgumentError("one right-hand side per equality row required")

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def slack(self, x: NDArray) -> float:
        """Smallest inequality slack at x (negative = violated); equalities count by |residual|."""
        x = np.asarray(x, dtype=float)
        ax = self.A @ x
        s = float(np.min(np.minimum(ax - self.lo, self.hi - ax))) if len(ax) else np.inf
        if len(self.b_eq):
            s = min(s, -float(np.abs(self.A_eq @ x - self.b_eq).max()))
        return s

    def contains(self, x: NDArray, tol: float = ABS_TOL) -> bool:
        return self.slack(x) >= -tol

    def projection_contains(self, axes: Sequence[int], p: NDArray, tol: float = ABS_TOL) -> bool:
        """Some x in the body has x[axes] = p (l_inf residual <= tol)."""
        ax = list(axes)
        p = np.asarray(p, dtype=float).reshape(-1)
        if len(ax) != len(p):
            raise ArgumentError(f"{len(ax)} axes but a point of length {len(p)}")
        d = self.dim
        A_ub, b_ub = self._lp_bounds()
        P = np.eye(d)[ax]
        ones = np.ones((len(ax), 1))
        A_ub = np.vstack([
            np.hstack([A_ub, np.zeros((len(A_ub), 1))]),
            np.hstack([P, -ones]),
            np.hstack([-P, -ones]),
        ])
        b_ub = np.concatenate([b_ub, p, -p])
        A_eq = np.hstack([self.A_eq, np.zeros((len(self.b_eq), 1))]) if len(self.b_eq) else None
        c = np.zeros(d + 1)
        c[-1] = 1.0
        res = linprog(
            c, A_ub=A_ub, b_ub=b_ub,
            A_eq=A_eq, b_eq=self.b_eq if len(self.b_eq) else None,
            bounds=[(None, None)] * d + [(0, None)],
            method="highs",
        )
        return bool(res.status == 0 and res.fun <= tol)

    def _lp_bounds(self) -> Tuple[NDArray, NDArray]:
        A_ub = np.vstack([self.A, -self.A])
        b_ub = np.concatenate([self.hi, -self.lo])
        keep = np.isfinite(b_ub)
        return A_ub[keep], b_ub[keep]

    def support_point(self, c: NDArray) -> NDArray[np.float64]:
        """argmax c.x over the body."""
        A_ub, b_ub = self._lp_bounds()
        res = linprog(
            -np.asarray(c, dtype=float),
            A_ub=A_ub, b_ub=b_ub,
            A_eq=self.A_eq if len(self.b_eq) else None,
            b_eq=self.b_eq if len(self.b_eq) else None,
            bounds=[(None, None)] * self.dim,
            method="highs",
        )
        if res.status == 2:
            raise DataError("consistent body is empty (LP infeasible)")
        if res.status == 3:
            raise DataError("consistent body is unbounded along a support direction")
        if res.status != 0:
            raise DataError(f"support LP failed: {res.message}")
        return res.x

    def is_bounded(self) -> bool:
        """Every coordinate is bounded above and below."""
        for i, sign in product(range(self.dim), (1.0, -1.0)):
            c = np.zeros(self.dim)
            c[i] = sign
            try:
                self.support_point(c)
            except DataError:
                return False
        return True


@dataclass
class RayProbe:
    direction: NDArray[np.float64]        # unit norm, leading component 0 for states
    t_realized: float
    t_consistent: float

    @property
    def ratio(self) -> float:
        return self.t_realized / self.t_consistent if self.t_consistent > 0 else float("nan")

    @property
    def realized_norm(self) -> float:
        return self.t_realized * float(np.linalg.norm(self.direction[1:]))

    @property
    def consistent_norm(self) -> float:
        return self.t_consistent * float(np.linalg.norm(self.direction[1:]))


def probes_to_frame(probes: Sequence[RayProbe]) -> pd.DataFrame:
    rows = []
    for p in probes:
        row = {f"d{a}": float(v) for a, v in enumerate(p.direction)}
        row.update(t_realized=p.t_realized, t_consistent=p.t_consistent, ratio=p.ratio)
        rows.append(row)
    return pd.DataFrame(rows)


@dataclass
class Projection3D:
    axes: Tuple[int, int, int]
    points: NDArray[np.float64]
    hull_facets: List[Tuple[int, int, int]]
    degenerate: bool = False
    affine_dim: int = 3

    def to_dict(self) -> Dict[str, object]:
        return {
            "axes": list(self.axes),
            "points": self.points.tolist(),
            "facets": [list(f) for f in self.hull_facets],
            "degenerate": self.degenerate,
            "affine_dim": self.affine_dim,
        }

    def write_ply(self, path: str) -> None:
        io.write_ply(path, self.points, self.hull_facets)

    @property
    def volume(self) -> float:
        if self.affine_dim < 3:
            return 0.0
        return float(ConvexHull(self.points).volume)

    def extreme_points(self, tol: float = 1e-7) -> NDArray[np.float64]:
        """Hull points that are not within tol (l_inf) of the hull of the others."""
        P = self.points
        keep = []
        for i in range(len(P)):
            others = np.delete(P, i, axis=0)
            if len(others) == 0 or not VPolytope(others, "effect").contains(P[i], tol):
                keep.append(i)
        return P[keep]


# ---------------------------------------------------------------------
# Realized and consistent spaces
# ---------------------------------------------------------------------
def realized_state_space(S_realized: NDArray) -> VPolytope:
    S = np.atleast_2d(np.asarray(S_realized, dtype=float))
    if S.size == 0:
        raise DataError("no realized states")
    off = np.abs(S[:, 0] - 1.0)
    if off.max() > NORMALIZATION_TOL:
        i = int(off.argmax())
        raise DataError(f"state row {i} has leading component {S[i, 0]:.9g}, expected 1")
    return VPolytope(S / S[:, :1], "state")


def complement_closure(vectors: NDArray, u: Optional[NDArray] = None) -> NDArray[np.float64]:
    """vectors followed by u - vectors."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    u = _unit(V.shape[1]) if u is None else np.asarray(u, dtype=float)
    return np.vstack([V, u[None, :] - V])


def realized_effect_space(E_realized: NDArray) -> VPolytope:
    """Columns of E and their complements; column 0 must be the unit effect."""
    E = np.atleast_2d(np.asarray(E_realized, dtype=float))
    if E.size == 0:
        raise DataError("no realized effects")
    u = _unit(E.shape[0])
    if np.abs(E[:, 0] - u).max() > NORMALIZATION_TOL:
        raise DataError("effect matrix is missing the unit column u in position 0")
    cols = E.T.copy()
    cols[0] = u
    return VPolytope(complement_closure(cols, u), "effect")


def consistent_state_space(E_realized: NDArray) -> HPolytope:
    """{s : 0 <= s.e <= 1 for every realized effect e, s.u = 1}."""
    E = np.atleast_2d(np.asarray(E_realized, dtype=float))
    k, n = E.shape
    return HPolytope(E.T, np.zeros(n), np.ones(n), _unit(k)[None, :], np.ones(1))


def consistent_effect_space(S_realized: NDArray) -> HPolytope:
    """{e : 0 <= s.e <= 1 for every realized state s}."""
    S = np.atleast_2d(np.asarray(S_realized, dtype=float))
    m = S.shape[0]
    return HPolytope(S, np.zeros(m), np.ones(m), np.zeros((0, S.shape[1])), np.zeros(0))


def containment_slack(V: VPolytope, H: HPolytope) -> float:
    """Minimum slack of every vertex of V against H (>= 0 iff V lies in H)."""
    return min(H.slack(v) for v in V.vertices)


# ---------------------------------------------------------------------
# Ray shooting
# ---------------------------------------------------------------------
def ray_shoot_h(body: HPolytope, origin: NDArray, direction: NDArray, tol: float = ABS_TOL) -> float:
    """Largest t with origin + t direction in body (+inf if the ray never leaves)."""
    x0 = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    if len(body.b_eq):
        drift = np.abs(body.A_eq @ d).max()
        if drift > tol * max(1.0, float(np.linalg.norm(d))):
            raise ArgumentError(f"direction leaves the equality constraints (residual {drift:.3g})")
    v = body.A @ x0
    if np.any(v < body.lo - tol) or np.any(v > body.hi + tol):
        raise ArgumentError("ray origin violates an inequality of the body")
    r = body.A @ d
    eps = 1e-14 * max(1.0, float(np.linalg.norm(d)))
    up, down = r > eps, r < -eps
    bounds = np.concatenate([(body.hi[up] - v[up]) / r[up], (body.lo[down] - v[down]) / r[down]])
    if bounds.size == 0:
        return float("inf")
    return max(0.0, float(bounds.min()))


def ray_shoot_v(body: VPolytope, origin: NDArray, direction: NDArray) -> float:
    """
    maximize t  s.t.  sum_l lam_l v_l - t d = origin,  sum_l lam_l = 1,  lam >= 0, t >= 0
    """
    x0 = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    V = body.vertices
    n = len(V)
    A_eq = np.vstack([
        np.hstack([V.T, -d[:, None]]),
        np.hstack([np.ones((1, n)), np.zeros((1, 1))]),
    ])
    b_eq = np.concatenate([x0, [1.0]])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * (n + 1), method="highs")
    if res.status == 2:
        raise ArgumentError("ray origin is not inside the realized hull")
    if res.status == 3:
        return float("inf")
    if res.status != 0:
        raise DataError(f"ray LP failed: {res.message}")
    return float(res.x[-1])


def _shoot_all(
    V: VPolytope,
    H: HPolytope,
    center: NDArray,
    directions: NDArray,
    threads: int,
) -> List[RayProbe]:
    if not H.contains(center):
        raise DataError("center lies outside the consistent body; the fit is not self-consistent")
    if not V.contains(center, tol=NORMALIZATION_TOL):
        raise DataError("center lies outside the realized hull; too few or too biased realized vectors")

    def probe(d: NDArray) -> RayProbe:
        return RayProbe(d, ray_shoot_v(V, center, d), ray_shoot_h(H, center, d))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(probe, directions))
    return [probe(d) for d in directions]


def _summarize(probes: List[RayProbe]) -> Tuple[float, float, List[RayProbe]]:
    finite = [p for p in probes if np.isfinite(p.t_consistent) and p.t_consistent > 0]
    dropped = len(probes) - len(finite)
    if dropped:
        _log.warning("%d degenerate rays excluded from ratio statistics", dropped)
    if not finite:
        raise DataError("every ray escaped the consistent body; it is unbounded")
    ratios = np.array([p.ratio for p in finite])
    _log.info("ratio over %d rays: mean=%.4f std=%.4f", len(finite), ratios.mean(), ratios.std())
    return float(ratios.mean()), float(ratios.std()), finite


def haar_state_directions(n_rays: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Unit Bloch directions (leading 0) of Haar-random pure states."""
    out = np.empty((n_rays, BLOCH_DIM))
    for r in range(n_rays):
        s = state_to_bloch(projector(sample_haar_ket(rng)))
        s[0] = 0.0
        out[r] = s / np.linalg.norm(s)
    return out


def linear_dimension_ratio(
    S_real: VPolytope,
    S_cons: HPolytope,
    n_rays: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> Tuple[float, float, List[RayProbe]]:
    """Mean and std of t_realized / t_consistent over Haar pure-state directions from (1, 0, ..., 0)."""
    if n_rays < 1:
        raise ArgumentError("n_rays must be positive")
    dirs = haar_state_directions(n_rays, rng)
    return _summarize(_shoot_all(S_real, S_cons, _unit(S_real.dim), dirs, threads))


def effect_dimension_ratio(
    E_real: VPolytope,
    E_cons: HPolytope,
    n_rays: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> Tuple[float, float, List[RayProbe]]:
    """Same statistic for effects: rays from u/2 toward Haar rank-1 projectors."""
    if n_rays < 1:
        raise ArgumentError("n_rays must be positive")
    center = _unit(E_real.dim) / 2.0
    dirs = np.empty((n_rays, BLOCH_DIM))
    for r in range(n_rays):
        d = effect_to_bloch(projector(sample_haar_ket(rng))) - center
        dirs[r] = d / np.linalg.norm(d)
    return _summarize(_shoot_all(E_real, E_cons, center, dirs, threads))


def straddling_from_probes(probes: Sequence[RayProbe]) -> Tuple[float, float, bool]:
    """(max realized Bloch norm, min consistent Bloch norm, max <= min)."""
    finite = [p for p in probes if np.isfinite(p.t_consistent)]
    if not finite:
        raise DataError("no finite rays to compare")
    r_max = max(p.realized_norm for p in finite)
    c_min = min(p.consistent_norm for p in finite)
    return r_max, c_min, bool(r_max <= c_min)


def straddling_check(
    S_real: VPolytope,
    S_cons: HPolytope,
    n_rays: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> Tuple[float, float, bool]:
    _, _, probes = linear_dimension_ratio(S_real, S_cons, n_rays, rng, threads)
    return straddling_from_probes(probes)


@dataclass
class SandwichReport:
    realized_in_qutrit: float
    qutrit_in_consistent: float
    n_vertices: int
    n_samples: int

    def to_dict(self) -> Dict[str, float]:
        return {
            "realized_in_qutrit": self.realized_in_qutrit,
            "qutrit_in_consistent": self.qutrit_in_consistent,
            "n_vertices": self.n_vertices,
            "n_samples": self.n_samples,
        }


def qutrit_sandwich(
    S_real: VPolytope,
    S_cons: HPolytope,
    n_samples: int,
    rng: np.random.Generator,
    tol: float = 1e-6,
) -> SandwichReport:
    """How far realized subset of qutrit subset of consistent holds, as two fractions."""
    inside = [is_valid_state_vector(v, tol=tol) for v in S_real.vertices]
    pure = [state_to_bloch(projector(sample_haar_ket(rng))) for _ in range(n_samples)]
    covered = [S_cons.contains(s, tol=tol) for s in pure]
    return SandwichReport(
        realized_in_qutrit=float(np.mean(inside)),
        qutrit_in_consistent=float(np.mean(covered)) if covered else float("nan"),
        n_vertices=len(inside),
        n_samples=n_samples,
    )


# ---------------------------------------------------------------------
# 3D projections
# ---------------------------------------------------------------------
def _check_axes(axes: Sequence[int], dim: int) -> Tuple[int, int, int]:
    ax = tuple(int(a) for a in axes)
    if len(ax) != 3 or len(set(ax)) != 3 or not all(0 <= a < dim for a in ax):
        raise ArgumentError(f"axes must be three distinct indices in 0..{dim - 1}, got {axes}")
    return ax  # type: ignore[return-value]


def _prune_collinear(poly: NDArray, tol: float) -> NDArray[np.int_]:
    """Indices of the corners of an ordered polygon (drop vertices on straight edges)."""
    n = len(poly)
    keep = []
    for i in range(n):
        a, b, c = poly[i - 1], poly[i], poly[(i + 1) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if abs(cross) > tol * max(1.0, np.linalg.norm(c - a) ** 2):
            keep.append(i)
    return np.array(keep if len(keep) >= 3 else list(range(n)), dtype=int)


def _hull_projection(points: NDArray, axes: Tuple[int, int, int], tol: float = 1e-9) -> Projection3D:
    P = np.unique(np.round(np.asarray(points, dtype=float), MERGE_DECIMALS), axis=0)
    centered = P - P.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False) if len(P) > 1 else np.zeros(1)
    scale = max(1.0, float(np.abs(P).max()))
    affine_dim = int((s > tol * scale * max(1, len(P))).sum())

    if affine_dim == 3:
        hull = ConvexHull(P)
        idx = {v: i for i, v in enumerate(hull.vertices)}
        facets = [tuple(idx[v] for v in simplex) for simplex in hull.simplices]
        return Projection3D(axes, P[hull.vertices], facets, False, 3)

    if affine_dim == 2:
        _, _, Vt = np.linalg.svd(centered, full_matrices=False)
        flat = centered @ Vt[:2].T
        order = ConvexHull(flat).vertices          # counter-clockwise in 2D
        corners = order[_prune_collinear(flat[order], tol)]
        facets = [(0, i, i + 1) for i in range(1, len(corners) - 1)]
        return Projection3D(axes, P[corners], facets, True, 2)

    if affine_dim == 1:
        _, _, Vt = np.linalg.svd(centered, full_matrices=False)
        t = centered @ Vt[0]
        return Projection3D(axes, P[[int(t.argmin()), int(t.argmax())]], [], True, 1)

    return Projection3D(axes, P[:1], [], True, 0)


def project_vpolytope(body: VPolytope, axes: Sequence[int]) -> Projection3D:
    ax = _check_axes(axes, body.dim)
    proj = _hull_projection(body.vertices[:, list(ax)], ax)
    if proj.degenerate:
        _log.debug("projection onto %s is %d-dimensional", ax, proj.affine_dim)
    return proj


def support_directions(n_dirs: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """The 26 lattice directions of {-1, 0, 1}^3 first, then uniform random unit vectors."""
    lattice = np.array([d for d in product((-1.0, 0.0, 1.0), repeat=3) if any(d)])
    lattice /= np.linalg.norm(lattice, axis=1, keepdims=True)
    if n_dirs <= len(lattice):
        return lattice[:n_dirs]
    extra = rng.standard_normal((n_dirs - len(lattice), 3))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.vstack([lattice, extra])


def project_hpolytope(
    body: HPolytope,
    axes: Sequence[int],
    n_dirs: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> Projection3D:
    """Hull of LP maximizers of d.x for n_dirs directions d in the chosen subspace (inner approximation)."""
    ax = _check_axes(axes, body.dim)
    if n_dirs < 4:
        raise ArgumentError("n_dirs must be at least 4")
    dirs = support_directions(n_dirs, rng)

    def lift(d: NDArray) -> NDArray:
        c = np.zeros(body.dim)
        c[list(ax)] = d
        return body.support_point(c)[list(ax)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pts = list(pool.map(lift, dirs))
    else:
        pts = [lift(d) for d in dirs]
    return _hull_projection(np.array(pts), ax)


def hull_volume_change(
    body: HPolytope,
    axes: Sequence[int],
    n_dirs: int,
    rng: np.random.Generator,
) -> float:
    """Relative volume change of project_hpolytope when n_dirs doubles (0 for flat projections)."""
    coarse = project_hpolytope(body, axes, n_dirs, rng).volume
    fine = project_hpolytope(body, axes, 2 * n_dirs, rng).volume
    return relative_volume_change(coarse, fine)


def relative_volume_change(coarse: float, fine: float) -> float:
    """|fine - coarse| / fine, 0 when the finer hull is flat."""
    if fine == 0.0:
        return 0.0
    return float(abs(fine - coarse) / fine)


# ---------------------------------------------------------------------
# Joint numerical range of the exact qutrit bodies
# ---------------------------------------------------------------------
def sample_jnr(
    axes: Sequence[int],
    space: str,
    n_samples: int,
    rng: np.random.Generator,
) -> Projection3D:
    """
    state:  hull of (<psi|A_mu|psi>, ...) with A_0 = I, A_a = lambda_a
    effect: hull of {0, u'} plus (<psi|B_mu|psi>, ...) and u' - that point,
            B_0 = I/3, B_a = lambda_a / 2, u' = u restricted to the axes
    """
    ax = _check_axes(axes, BLOCH_DIM)
    if space not in SPACES:
        raise ArgumentError(f"space must be one of {SPACES}, got {space!r}")
    if n_samples < 4:
        raise ArgumentError("n_samples must be at least 4")

    to_bloch: Callable[[NDArray], NDArray] = state_to_bloch if space == "state" else effect_to_bloch
    pts = np.array([to_bloch(projector(sample_haar_ket(rng)))[list(ax)] for _ in range(n_samples)])
    if space == "effect":
        u_ax = _unit(BLOCH_DIM)[list(ax)]
        pts = np.vstack([pts, u_ax - pts, np.zeros((1, 3)), u_ax[None, :]])
    return _hull_projection(pts, ax)


# ---------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------
def _polygon(points2: NDArray, tol: float) -> NDArray[np.float64]:
    P = np.unique(np.round(points2, MERGE_DECIMALS), axis=0)
    if len(P) < 3:
        return P
    centered = P - P.mean(axis=0)
    if np.linalg.svd(centered, compute_uv=False)[-1] <= tol:
        return P
    return P[ConvexHull(P).vertices]


def section(projection: Projection3D, axis: int, value: float, tol: float = 1e-9) -> NDArray[np.float64]:
    """
    Ordered polygon of the hull's intersection with the plane x[axis] = value,
    in the two remaining coordinates of the projection.
    """
    pos = list(projection.axes).index(axis) if axis in projection.axes else -1
    if pos < 0:
        raise ArgumentError(f"axis {axis} is not one of the projection axes {projection.axes}")
    rest = [i for i in range(3) if i != pos]
    P = projection.points
    h = P[:, pos] - value

    if np.all(np.abs(h) <= tol):
        return _polygon(P[:, rest], tol)

    cut = [P[i, rest] for i in np.flatnonzero(np.abs(h) <= tol)]
    edges = set()
    for f in projection.hull_facets:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            edges.add((min(a, b), max(a, b)))
    if not edges and len(P) == 2:
        edges.add((0, 1))
    for a, b in edges:
        if h[a] * h[b] < 0:
            w = h[a] / (h[a] - h[b])
            cut.append(P[a, rest] + w * (P[b, rest] - P[a, rest]))
    if not cut:
        return np.zeros((0, 2))
    return _polygon(np.array(cut), tol)


def _segment_distance(P: NDArray, a: NDArray, b: NDArray) -> NDArray[np.float64]:
    ab = b - a
    L = float(ab @ ab)
    t = np.clip((P - a) @ ab / L, 0.0, 1.0) if L > 0 else np.zeros(len(P))
    return np.linalg.norm(P - (a + t[:, None] * ab), axis=1)


def _distance_to_convex(P: NDArray, poly: NDArray, tol: float) -> NDArray[np.float64]:
    """Euclidean distance of each row of P to the filled convex polygon poly (ordered)."""
    if len(poly) == 1:
        return np.linalg.norm(P - poly[0], axis=1)
    nxt = np.roll(poly, -1, axis=0)
    pairs = list(zip(poly, nxt)) if len(poly) > 2 else [(poly[0], poly[1])]
    d = np.min([_segment_distance(P, a, b) for a, b in pairs], axis=0)
    edges = nxt - poly
    area = 0.5 * float(np.sum(poly[:, 0] * nxt[:, 1] - nxt[:, 0] * poly[:, 1]))
    if len(poly) > 2 and abs(area) > tol:
        rel = P[:, None, :] - poly[None, :, :]
        cross = edges[None, :, 0] * rel[..., 1] - edges[None, :, 1] * rel[..., 0]
        inside = np.all(np.sign(area) * cross >= -tol, axis=1)
        d[inside] = 0.0
    return d


def hausdorff_distance(a: NDArray, b: NDArray, tol: float = 1e-12) -> float:
    """
    Symmetric Hausdorff distance between two convex polygons (as filled sets).
    The distance to a convex set is convex along every edge, so both directed
    distances are attained at vertices.
    """
    A = np.atleast_2d(np.asarray(a, dtype=float))
    B = np.atleast_2d(np.asarray(b, dtype=float))
    if A.size == 0 or B.size == 0:
        raise ArgumentError("cannot compare an empty section")
    A, B = _polygon(A, tol), _polygon(B, tol)
    return float(max(_distance_to_convex(A, B, tol).max(), _distance_to_convex(B, A, tol).max()))
