"""
--------------------------------------------------------
 Experiment designs + Poissonian count simulator
--------------------------------------------------------
Stand-in for a heralded three-detector qutrit experiment:

  - build_haar_design      m Haar preparations, n matched rank-1 effects
  - build_fiducial_design  15 Gell-Mann eigenvector fiducials + n_random
                           Haar states/effects, random x random block unprobed
  - simulate_counts        N_tot ~ Poisson(rate * exposure) per probed cell,
                           split multinomially over detectors D0/D1/D2
  - counts_to_frequencies  F = counts0 / N_tot with binomial uncertainty

Column 0 of every m x (n+1) matrix is the unit effect u, added by hand.
--------------------------------------------------------
"""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import logging
import os

import numpy as np
from numpy.typing import NDArray

from models import io
from models.qutrit import (
    DIM, UNIT_EFFECT, depolarize, effects_to_bloch_matrix, gell_mann,
    ideal_probability_matrix, projector, sample_haar_ket, states_to_bloch_matrix,
)
from solver.errors import ArgumentError, DataError

_log = logging.getLogger(__name__)

N_FIDUCIAL = 15
TRAIN_STREAM, TEST_STREAM = 0, 1


# ---------------------------------------------------------------------
# Design
# ---------------------------------------------------------------------
@dataclass
class Design:
    """
    Which preparations and measurements are probed:
    - preparations: (m, 3, 3) density operators rho_i
    - measurements: (n, 3, 3) outcome-0 effects Q_j
    - mask: (m, n+1) booleans, True where (i, j) is probed; column 0 is u
    """
    preparations: NDArray[np.complex128]
    measurements: NDArray[np.complex128]
    mask: NDArray[np.bool_]
    includes_unit_column: bool = True
    description: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.preparations = np.asarray(self.preparations, dtype=np.complex128).reshape(-1, DIM, DIM)
        self.measurements = np.asarray(self.measurements, dtype=np.complex128).reshape(-1, DIM, DIM)
        self.mask = np.asarray(self.mask, dtype=bool)
        m, n = len(self.preparations), len(self.measurements)
        if self.mask.shape != (m, n + 1):
            raise ArgumentError(f"mask must have shape {(m, n + 1)}, got {self.mask.shape}")
        if not self.mask[:, 0].all():
            raise ArgumentError("mask column 0 (unit effect) must be all True")
        for i, rho in enumerate(self.preparations):
            w = np.linalg.eigvalsh(rho)
            if abs(np.trace(rho).real - 1.0) > 1e-9 or w.min() < -1e-9:
                raise ArgumentError(f"preparation {i} is not a density operator")
        for j, q in enumerate(self.measurements):
            w = np.linalg.eigvalsh(q)
            if w.min() < -1e-9 or w.max() > 1.0 + 1e-9:
                raise ArgumentError(f"measurement {j} is not an effect 0 <= Q <= I")

    @property
    def m(self) -> int:
        return len(self.preparations)

    @property
    def n(self) -> int:
        return len(self.measurements)

    @property
    def probed(self) -> NDArray[np.bool_]:
        """Mask of probed cells excluding the synthetic unit column."""
        out = self.mask.copy()
        out[:, 0] = False
        return out

    @property
    def n_probed(self) -> int:
        return int(self.probed.sum())

    def ideal_probabilities(self, epsilon: float = 0.0) -> NDArray[np.float64]:
        rhos = self.preparations if epsilon == 0.0 else np.array([depolarize(r, epsilon) for r in self.preparations])
        return ideal_probability_matrix(rhos, self.measurements)

    def generator_state_vectors(self) -> NDArray[np.float64]:
        """S^qutrit: rows are the Bloch vectors of the generating preparations."""
        return states_to_bloch_matrix(self.preparations)

    def generator_effect_vectors(self) -> NDArray[np.float64]:
        """E^qutrit: columns are u followed by the Bloch vectors of the Q_j."""
        return np.hstack([UNIT_EFFECT[:, None], effects_to_bloch_matrix(self.measurements)])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "description": self.description,
            "includes_unit_column": self.includes_unit_column,
            "preparations": io.complex_to_pairs(self.preparations),
            "measurements": io.complex_to_pairs(self.measurements),
            "mask": self.mask.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "Design":
        try:
            return cls(
                preparations=io.pairs_to_complex(d["preparations"]),
                measurements=io.pairs_to_complex(d["measurements"]),
                mask=np.asarray(d["mask"], dtype=bool),
                includes_unit_column=bool(d.get("includes_unit_column", True)),
                description=dict(d.get("description", {})),
            )
        except KeyError as exc:
            raise DataError(f"design record is missing field {exc}") from exc

    def save(self, path: str) -> None:
        io.write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: str) -> "Design":
        return cls.from_dict(io.read_json(path))


def build_haar_design(m: int, n: int, rng: np.random.Generator) -> Design:
    """
    m Haar pure states; the j-th measurement is the projector onto the
    j-th sampled state, so D[j, j+1] = 1 in theory. Fully probed.
    """
    if m < 1 or n < 1:
        raise ArgumentError(f"need m, n >= 1, got m={m}, n={n}")
    if n > m:
        raise ArgumentError(f"n={n} measurements cannot reuse only m={m} sampled states")
    kets = [sample_haar_ket(rng) for _ in range(m)]
    rhos = np.array([projector(k) for k in kets])
    return Design(
        preparations=rhos,
        measurements=rhos[:n].copy(),
        mask=np.ones((m, n + 1), dtype=bool),
        description={"kind": "haar", "m": m, "n": n},
    )


def fiducial_kets(tol: float = 1e-9) -> List[NDArray[np.complex128]]:
    """
    The 15 pairwise-distinct normalized eigenvectors of lambda_1..lambda_8.
    Diagonal generators contribute the computational basis; vectors equal up
    to a global phase are kept once.
    """
    kets: List[NDArray[np.complex128]] = []
    for a in range(1, 9):
        lam = gell_mann(a)
        if np.allclose(lam, np.diag(np.diag(lam))):
            vecs = np.eye(DIM, dtype=np.complex128)
        else:
            _, vecs = np.linalg.eigh(lam)
        for v in vecs.T:
            v = v / np.linalg.norm(v)
            if all(abs(np.vdot(k, v)) < 1.0 - tol for k in kets):
                kets.append(v)
    return kets


def build_fiducial_design(n_random: int, rng: np.random.Generator) -> Design:
    """
    Fiducials first, then n_random Haar states (measured by their own
    projectors). Probed: fiducial rows x all columns and all rows x fiducial
    columns; the n_random x n_random random block is left unfilled.
    """
    if n_random < 0:
        raise ArgumentError(f"n_random must be >= 0, got {n_random}")
    kets = fiducial_kets()
    if len(kets) != N_FIDUCIAL:
        raise DataError(f"expected {N_FIDUCIAL} fiducial states, found {len(kets)}")
    kets += [sample_haar_ket(rng) for _ in range(n_random)]
    rhos = np.array([projector(k) for k in kets])
    size = len(kets)
    mask = np.zeros((size, size + 1), dtype=bool)
    mask[:, 0] = True
    mask[:N_FIDUCIAL, :] = True
    mask[:, 1:N_FIDUCIAL + 1] = True
    return Design(
        preparations=rhos,
        measurements=rhos.copy(),
        mask=mask,
        description={"kind": "fiducial", "n_random": n_random},
    )


# ---------------------------------------------------------------------
# Counts
# ---------------------------------------------------------------------
@dataclass
class CountTable:
    """Heralded coincidence counts at D0/D1/D2 for each (preparation, measurement)."""
    counts0: NDArray
    counts1: NDArray
    counts2: NDArray
    exposure: float
    rate: float

    @property
    def total(self) -> NDArray:
        return self.counts0 + self.counts1 + self.counts2

    def save(self, directory: str, prefix: str) -> None:
        m, n = self.counts0.shape
        cols = io.design_columns(n, unit_column=False)
        for k, arr in enumerate((self.counts0, self.counts1, self.counts2)):
            io.write_matrix_csv(os.path.join(directory, f"{prefix}_counts{k}.csv"), arr, col_labels=cols)

    @classmethod
    def load(cls, directory: str, prefix: str, rate: float, exposure: float) -> "CountTable":
        arrs = [io.read_matrix_csv(os.path.join(directory, f"{prefix}_counts{k}.csv")) for k in range(3)]
        if all(np.array_equal(a, np.round(a)) for a in arrs):
            arrs = [a.astype(np.int64) for a in arrs]
        return cls(arrs[0], arrs[1], arrs[2], exposure=exposure, rate=rate)


def _simulate_row(
    i: int, probs: NDArray, probed: NDArray, lam: float, seed: int, stream: int, expected: bool,
) -> Tuple[NDArray, NDArray, NDArray]:
    n = probs.shape[0]
    dtype = float if expected else np.int64
    c0, c1, c2 = (np.zeros(n, dtype=dtype) for _ in range(3))
    for j in np.flatnonzero(probed):
        p = min(max(probs[j], 0.0), 1.0)
        if expected:
            c0[j], c1[j], c2[j] = lam * p, lam * (1.0 - p) / 2.0, lam * (1.0 - p) / 2.0
            continue
        # per-cell substream: independent of execution order
        rng = np.random.default_rng([seed, stream, i, int(j)])
        n_tot = rng.poisson(lam)
        c0[j], c1[j], c2[j] = rng.multinomial(n_tot, [p, (1.0 - p) / 2.0, (1.0 - p) / 2.0])
    return c0, c1, c2


def simulate_counts(
    design: Design,
    rate: float,
    exposure: float,
    seed: int,
    stream: int = TRAIN_STREAM,
    epsilon: float = 0.0,
    expected: bool = False,
    threads: int = 1,
) -> CountTable:
    """
    Poissonian three-detector counts for every probed configuration.
    The outcome-0 probability is Tr[rho_i' Q_j] with rho' the preparation
    depolarized by `epsilon`; the remainder is split evenly over D1/D2.
    `expected=True` writes expected counts instead of random draws.
    """
    if rate < 0 or exposure < 0:
        raise ArgumentError(f"rate and exposure must be nonnegative, got {rate}, {exposure}")
    probs = design.ideal_probabilities(epsilon)[:, 1:]
    probed = design.probed[:, 1:]
    lam = float(rate) * float(exposure)

    def work(i: int):
        return _simulate_row(i, probs[i], probed[i], lam, seed, stream, expected)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, range(design.m)))
    else:
        rows = [work(i) for i in range(design.m)]
    c0, c1, c2 = (np.vstack([r[k] for r in rows]) for k in range(3))
    _log.info("simulated %d probed cells (stream %d, %.0f expected counts/cell)", design.n_probed, stream, lam)
    return CountTable(c0, c1, c2, exposure=float(exposure), rate=float(rate))


# ---------------------------------------------------------------------
# Frequencies
# ---------------------------------------------------------------------
@dataclass
class FrequencyMatrix:
    """
    f:     m x (n+1) frequencies; column 0 is the unit effect (ones, sigma 0)
    sigma: statistical uncertainty; +inf on unprobed cells (weight 0)
    mask:  probed cells, column 0 all True
    """
    f: NDArray[np.float64]
    sigma: NDArray[np.float64]
    mask: NDArray[np.bool_]

    def __post_init__(self) -> None:
        self.f = np.asarray(self.f, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if not (self.f.shape == self.sigma.shape == self.mask.shape):
            raise DataError(f"shape mismatch: f {self.f.shape}, sigma {self.sigma.shape}, mask {self.mask.shape}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.f.shape

    @property
    def probed(self) -> NDArray[np.bool_]:
        out = self.mask.copy()
        out[:, 0] = False
        return out

    @property
    def weights(self) -> NDArray[np.float64]:
        """1/sigma^2 on probed non-unit cells, 0 elsewhere."""
        w = np.zeros_like(self.f)
        p = self.probed
        w[p] = 1.0 / self.sigma[p] ** 2
        return w

    @classmethod
    def from_probabilities(
        cls, D: NDArray, mask: Optional[NDArray] = None, sigma: float = 1.0,
    ) -> "FrequencyMatrix":
        """Noiseless frequencies F = D with uniform uncertainty on probed cells."""
        D = np.asarray(D, dtype=float)
        mask = np.ones(D.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        f = np.where(mask, D, 0.0)
        f[:, 0] = 1.0
        sig = np.where(mask, float(sigma), np.inf)
        sig[:, 0] = 0.0
        return cls(f, sig, mask)

    def save(self, directory: str, prefix: str) -> None:
        cols = io.design_columns(self.shape[1])
        io.write_matrix_csv(os.path.join(directory, f"{prefix}_f.csv"), self.f, col_labels=cols)
        io.write_matrix_csv(os.path.join(directory, f"{prefix}_sigma.csv"), self.sigma, col_labels=cols)
        io.write_matrix_csv(os.path.join(directory, f"{prefix}_mask.csv"), self.mask, col_labels=cols)

    @classmethod
    def load(cls, directory: str, prefix: str) -> "FrequencyMatrix":
        return cls(
            io.read_matrix_csv(os.path.join(directory, f"{prefix}_f.csv")),
            io.read_matrix_csv(os.path.join(directory, f"{prefix}_sigma.csv")),
            io.read_matrix_csv(os.path.join(directory, f"{prefix}_mask.csv"), dtype=bool),
        )


def counts_to_frequencies(table: CountTable, design: Design) -> FrequencyMatrix:
    """
    f = counts0 / (counts0 + counts1 + counts2) on probed cells, with
    sigma = sqrt(f (1 - f) / N_tot) floored at 1/(2 N_tot) so that
    saturated cells (f in {0, 1}) keep a finite weight.
    """
    probed = design.probed[:, 1:]
    total = np.asarray(table.total, dtype=float)
    if total.shape != probed.shape:
        raise DataError(f"count table shape {total.shape} does not match design {probed.shape}")
    empty = probed & (total <= 0)
    if empty.any():
        i, j = map(int, np.argwhere(empty)[0])
        raise DataError(f"probed cell (P{i}, M{j + 1}) has zero total counts")

    f = np.zeros_like(total)
    sigma = np.full_like(total, np.inf)
    n_tot = total[probed]
    fp = np.asarray(table.counts0, dtype=float)[probed] / n_tot
    f[probed] = fp
    sigma[probed] = np.maximum(np.sqrt(fp * (1.0 - fp) / n_tot), 1.0 / (2.0 * n_tot))

    ones = np.ones((design.m, 1))
    return FrequencyMatrix(
        f=np.hstack([ones, f]),
        sigma=np.hstack([np.zeros((design.m, 1)), sigma]),
        mask=design.mask.copy(),
    )
