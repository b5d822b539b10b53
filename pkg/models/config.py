"""
Run configuration: a single JSON file whose fields can be overridden
from the command line (flags mirror the field names).
"""

from __future__ import annotations
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple
import json

from solver.errors import ConfigError

# Default axis triples for state and effect projections.
FIGURE_AXES: List[Tuple[int, int, int]] = [
    (1, 2, 3), (2, 3, 8), (3, 4, 6), (1, 3, 4), (2, 5, 8),
    (3, 4, 5), (0, 3, 8), (0, 1, 3), (0, 3, 4), (0, 7, 8),
]


@dataclass(frozen=True)
class DesignSpec:
    kind: str = "haar"          # "haar" | "fiducial"
    m: int = 100
    n: int = 100
    n_random: int = 400

    def describe(self) -> str:
        if self.kind == "haar":
            return f"haar({self.m},{self.n})"
        return f"fiducial({self.n_random})"

    @classmethod
    def parse(cls, text: str) -> "DesignSpec":
        """'haar(30,30)' or 'fiducial(60)'."""
        t = text.replace(" ", "").lower()
        try:
            name, args = t.rstrip(")").split("(")
            vals = [int(v) for v in args.split(",") if v]
        except ValueError as exc:
            raise ConfigError(f"cannot parse design {text!r}") from exc
        if name == "haar" and len(vals) == 2:
            return cls(kind="haar", m=vals[0], n=vals[1])
        if name == "fiducial" and len(vals) == 1:
            return cls(kind="fiducial", n_random=vals[0])
        raise ConfigError(f"unknown design {text!r}; expected haar(m,n) or fiducial(n_random)")


@dataclass(frozen=True)
class FitOptions:
    max_iters: int = 500
    rel_tol: float = 1e-8
    n_restarts: int = 5
    clip_tol: float = 1e-9
    n_impute: int = 20


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    design: DesignSpec = field(default_factory=DesignSpec)
    rate: float = 2000.0
    exposure: float = 2.0
    epsilon: float = 0.01
    ranks: Tuple[int, ...] = tuple(range(2, 13))
    rays: int = 1000
    n_dirs: int = 2000
    threads: int = 1
    output_dir: str = "out"
    fit: FitOptions = field(default_factory=FitOptions)
    projections: Tuple[Tuple[int, int, int], ...] = tuple(FIGURE_AXES)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        d = self.design
        if d.kind not in ("haar", "fiducial"):
            raise ConfigError(f"design kind must be 'haar' or 'fiducial', got {d.kind!r}")
        if d.kind == "haar" and (d.m < 1 or d.n < 1 or d.n > d.m):
            raise ConfigError(f"haar design needs 1 <= n <= m, got m={d.m}, n={d.n}")
        if d.kind == "fiducial" and d.n_random < 0:
            raise ConfigError(f"fiducial design needs n_random >= 0, got {d.n_random}")
        if self.rate <= 0 or self.exposure <= 0:
            raise ConfigError("rate and exposure must be positive")
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not self.ranks or any(k < 1 for k in self.ranks) or list(self.ranks) != sorted(set(self.ranks)):
            raise ConfigError(f"ranks must be nonempty, positive and strictly ascending, got {list(self.ranks)}")
        if self.rays < 1 or self.n_dirs < 4 or self.threads < 1:
            raise ConfigError("rays, n_dirs (>= 4) and threads must be positive")
        if self.fit.max_iters < 1 or self.fit.n_restarts < 0 or self.fit.rel_tol <= 0:
            raise ConfigError("fit options: max_iters >= 1, n_restarts >= 0, rel_tol > 0")
        for axes in self.projections:
            if len(axes) != 3 or len(set(axes)) != 3 or not all(0 <= a <= 8 for a in axes):
                raise ConfigError(f"projection axes must be three distinct indices in 0..8, got {axes}")

    # -----------------------------------------------------------------
    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["ranks"] = list(self.ranks)
        d["projections"] = [list(a) for a in self.projections]
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "RunConfig":
        d = dict(d)
        try:
            if "design" in d:
                design = d["design"]
                d["design"] = DesignSpec.parse(design) if isinstance(design, str) else DesignSpec(**design)
            if "fit" in d:
                d["fit"] = FitOptions(**d["fit"])
            if "ranks" in d:
                d["ranks"] = tuple(int(k) for k in d["ranks"])
            if "projections" in d:
                d["projections"] = tuple(tuple(int(a) for a in ax) for ax in d["projections"])
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"invalid configuration field: {exc}") from exc

    @classmethod
    def from_json(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_dict(json.load(f))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

    def with_overrides(self, **overrides: Optional[Any]) -> "RunConfig":
        """Replace fields whose override is not None (unset CLI flags)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if isinstance(changes.get("design"), str):
            changes["design"] = DesignSpec.parse(changes["design"])
        if "ranks" in changes:
            changes["ranks"] = tuple(changes["ranks"])
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(f"unknown override: {exc}") from exc


def parse_ranks(text: str) -> Tuple[int, ...]:
    """'2-12' or '8,9,10' (mixed forms allowed: '2-4,9')."""
    out: List[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise ConfigError(f"cannot parse ranks {text!r}") from exc
    return tuple(out)
