#!/usr/bin/env python3
import os, sys
# --- make project root importable (so "import solver" works when running this script directly)
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

import argparse
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from models import io
from models.config import RunConfig, parse_ranks
from models.experiment import (
    TEST_STREAM, TRAIN_STREAM, Design, FrequencyMatrix,
    build_fiducial_design, build_haar_design, counts_to_frequencies, simulate_counts,
)
from solver import geometry as geo
from solver.errors import DataError, GptError, exit_code_for
from solver.gauge import gauge_fix
from solver.lowrank import GptModel, rank_sweep, reports_to_frame

_log = logging.getLogger("gpt_pipeline")

# RNG substreams derived from the run seed (0/1 are the train/test count streams)
DESIGN_STREAM, RAY_STREAM, EFFECT_RAY_STREAM, SANDWICH_STREAM, PROJECTION_STREAM = 2, 3, 4, 5, 6
QUTRIT_RANK = 9
VOLUME_TOL = 0.01         # relative hull-volume change under doubled n_dirs


def _stage_dir(config: RunConfig, stage: str) -> str:
    path = os.path.join(config.output_dir, stage)
    os.makedirs(path, exist_ok=True)
    return path


def build_design(config: RunConfig) -> Design:
    rng = np.random.default_rng([config.seed, DESIGN_STREAM])
    spec = config.design
    if spec.kind == "haar":
        return build_haar_design(spec.m, spec.n, rng)
    return build_fiducial_design(spec.n_random, rng)


# ---------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------
def cmd_simulate(config: RunConfig) -> str:
    out = _stage_dir(config, "simulate")
    design = build_design(config)
    design.save(os.path.join(out, "design.json"))

    for prefix, stream in (("train", TRAIN_STREAM), ("test", TEST_STREAM)):
        table = simulate_counts(
            design, config.rate, config.exposure, config.seed,
            stream=stream, epsilon=config.epsilon, threads=config.threads,
        )
        table.save(out, prefix)
        counts_to_frequencies(table, design).save(out, prefix)

    io.write_json(os.path.join(out, "manifest.json"), {
        "seed": config.seed,
        "rate": config.rate,
        "exposure": config.exposure,
        "epsilon": config.epsilon,
        "design": config.design.describe(),
        "m": design.m,
        "n": design.n,
        "n_probed": design.n_probed,
        "config": config.to_dict(),
    })
    print(f"[simulate] {config.design.describe()}: {design.m}x{design.n + 1} matrices, "
          f"{design.n_probed} probed cells -> {out}")
    return out


# ---------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------
def _load_frequencies(path: str) -> FrequencyMatrix:
    directory, prefix = os.path.split(path)
    F = FrequencyMatrix.load(directory or ".", prefix)
    manifest_path = os.path.join(directory or ".", "manifest.json")
    if os.path.exists(manifest_path):
        man = io.read_json(manifest_path)
        expected = (int(man["m"]), int(man["n"]) + 1)
        if F.shape != expected:
            raise DataError(f"{path}: matrices are {F.shape} but the manifest records {expected}")
    return F


def cmd_fit(config: RunConfig, train_path: Optional[str] = None, test_path: Optional[str] = None) -> str:
    sim = os.path.join(config.output_dir, "simulate")
    train_path = train_path or os.path.join(sim, "train")
    test_path = test_path or os.path.join(sim, "test")
    F_train = _load_frequencies(train_path)
    F_test = _load_frequencies(test_path)

    sweep = rank_sweep(F_train, F_test, config.ranks, config.fit, seed=config.seed, threads=config.threads)

    out = _stage_dir(config, "fit")
    frame = reports_to_frame(sweep.reports)
    frame.to_csv(os.path.join(out, "reports.csv"), index=False)
    io.write_json(os.path.join(out, "reports.json"), [r.to_dict() for r in sweep.reports])
    for k, model in sweep.models.items():
        model.save(out, str(k))
    io.write_json(os.path.join(out, "selection.json"), {
        "selected_rank": sweep.selected_rank,
        "ranks": list(config.ranks),
        "train": train_path,
        "test": test_path,
    })

    for r in sweep.reports:
        flag = "" if r.converged else "  (not converged)"
        print(f"[fit] k={r.rank:<2d} chi2_train={r.chi2_train:.6g} chi2_test={r.chi2_test:.6g} "
              f"iters={r.iterations}{flag}")
    print(f"[fit] selected rank {sweep.selected_rank} -> {out}")
    return out


# ---------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------
def _residuals(D: np.ndarray, D_ref: np.ndarray, probed: np.ndarray) -> Dict[str, float]:
    diff = (D - D_ref)[:, 1:]
    on = diff[probed[:, 1:]]
    return {
        "mean": float(diff.mean()),
        "std": float(diff.std()),
        "probed_mean": float(on.mean()) if on.size else float("nan"),
        "probed_std": float(on.std()) if on.size else float("nan"),
    }


def _write_projections(
    config: RunConfig, out: str, bodies: Dict[str, Any],
) -> Tuple[List[str], Dict[str, float]]:
    """Write every projection; H-bodies are also re-projected with twice the directions."""
    proj_dir = os.path.join(out, "projections")
    rng = np.random.default_rng([config.seed, PROJECTION_STREAM])
    written: List[str] = []
    volume_change: Dict[str, float] = {}
    for axes in config.projections:
        tag = "".join(str(a) for a in axes)
        for name, body in bodies.items():
            if isinstance(body, geo.VPolytope):
                proj = geo.project_vpolytope(body, axes)
            else:
                proj = geo.project_hpolytope(body, axes, config.n_dirs, rng, threads=config.threads)
                fine = geo.project_hpolytope(body, axes, 2 * config.n_dirs, rng, threads=config.threads)
                volume_change[f"{name}_{tag}"] = geo.relative_volume_change(proj.volume, fine.volume)
            base = os.path.join(proj_dir, f"{name}_{tag}")
            io.write_json(base + ".json", proj.to_dict())
            proj.write_ply(base + ".ply")
            written.append(base)
    return written, volume_change


def cmd_analyze(config: RunConfig, model_dir: Optional[str] = None, rank: Optional[int] = None) -> str:
    model_dir = model_dir or os.path.join(config.output_dir, "fit")
    selection = io.read_json(os.path.join(model_dir, "selection.json"))
    k = int(rank if rank is not None else selection["selected_rank"])
    if k != QUTRIT_RANK:
        raise DataError(f"gauge alignment to qutrit vectors needs a rank-{QUTRIT_RANK} model, got rank {k}")
    design = Design.load(os.path.join(os.path.dirname(selection["train"]) or ".", "design.json"))
    model = GptModel.load(model_dir, str(k))
    if model.S.shape[0] != design.m:
        raise DataError(f"model has {model.S.shape[0]} states but the design has {design.m}")

    gauge = gauge_fix(model, design.generator_state_vectors())
    out = _stage_dir(config, "analyze")
    basis = [f"b{a}" for a in range(k)]
    io.write_matrix_csv(os.path.join(out, "S_realized.csv"), gauge.S_realized, col_labels=basis)
    io.write_matrix_csv(os.path.join(out, "E_realized.csv"), gauge.E_realized,
                        row_labels=basis, col_labels=io.design_columns(design.n + 1))
    io.write_matrix_csv(os.path.join(out, "Lambda.csv"), gauge.Lambda, row_labels=basis, col_labels=basis)

    S_real = geo.realized_state_space(gauge.S_realized)
    S_cons = geo.consistent_state_space(gauge.E_realized)
    E_real = geo.realized_effect_space(gauge.E_realized)
    E_cons = geo.consistent_effect_space(S_real.vertices)

    try:
        mean, std, probes = geo.linear_dimension_ratio(
            S_real, S_cons, config.rays, np.random.default_rng([config.seed, RAY_STREAM]), config.threads)
        e_mean, e_std, _ = geo.effect_dimension_ratio(
            E_real, E_cons, config.rays, np.random.default_rng([config.seed, EFFECT_RAY_STREAM]), config.threads)
    except DataError as exc:
        raise DataError(f"rank-{k} model from {model_dir}: {exc}") from exc
    r_max, c_min, straddles = geo.straddling_from_probes(probes)
    sandwich = geo.qutrit_sandwich(
        S_real, S_cons, config.rays, np.random.default_rng([config.seed, SANDWICH_STREAM]))
    geo.probes_to_frame(probes).to_csv(os.path.join(out, "rays.csv"), index=False)

    residuals = _residuals(gauge.probabilities(), design.ideal_probabilities(), design.mask)
    io.write_json(os.path.join(out, "residuals.json"), residuals)
    written, volume_change = _write_projections(config, out, {
        "states_realized": S_real,
        "states_consistent": S_cons,
        "effects_realized": E_real,
        "effects_consistent": E_cons,
    })
    worst = max(volume_change.values(), default=0.0)
    if worst >= VOLUME_TOL:
        _log.warning("support projections not converged: volume changes by %.3g under doubled n_dirs", worst)
    summary = {
        "rank": k,
        "gauge": {
            "chi2_alignment": gauge.chi2_alignment,
            "condition_number": gauge.condition_number,
            "ridge": gauge.ridge,
        },
        "ratio": {"mean": mean, "std": std, "n_rays": len(probes)},
        "effect_ratio": {"mean": e_mean, "std": e_std},
        "straddle": {"max_realized_norm": r_max, "min_consistent_norm": c_min, "straddles": straddles},
        "sandwich": sandwich.to_dict(),
        "containment": {
            "states": geo.containment_slack(S_real, S_cons),
            "effects": geo.containment_slack(E_real, E_cons),
        },
        "residuals": residuals,
        "volume_change": {
            "values": volume_change,
            "max": worst,
            "converged": bool(worst < VOLUME_TOL),
        },
    }
    io.write_json(os.path.join(out, "summary.json"), summary)

    print(f"[analyze] ratio mean={mean:.4f} std={std:.4f} over {len(probes)} rays")
    print(f"[analyze] straddle max_realized={r_max:.4f} min_consistent={c_min:.4f} -> {straddles}")
    print(f"[analyze] residual mean={residuals['mean']:.4g} std={residuals['std']:.4g}")
    print(f"[analyze] {len(written)} projections -> {os.path.join(out, 'projections')}")
    print(f"[analyze] support-projection volume change {worst:.3g} (converged: {worst < VOLUME_TOL})")
    return out


# ---------------------------------------------------------------------
# report
# ---------------------------------------------------------------------
def cmd_report(config: RunConfig) -> Dict[str, Any]:
    fit_dir = os.path.join(config.output_dir, "fit")
    reports_csv = os.path.join(fit_dir, "reports.csv")
    if not os.path.exists(reports_csv):
        raise DataError(f"no fit results at {reports_csv}; run 'fit' first")
    frame = pd.read_csv(reports_csv)
    selection = io.read_json(os.path.join(fit_dir, "selection.json"))
    report: Dict[str, Any] = {
        "design": config.design.describe(),
        "selected_rank": selection["selected_rank"],
        "fit": frame.to_dict(orient="records"),
    }
    summary_path = os.path.join(config.output_dir, "analyze", "summary.json")
    if os.path.exists(summary_path):
        report["analysis"] = io.read_json(summary_path)
    io.write_json(os.path.join(config.output_dir, "report.json"), report)

    print(frame[["rank", "chi2_train", "chi2_test", "iterations"]].to_string(index=False))
    print(f"[report] selected rank {selection['selected_rank']}")
    if "analysis" in report:
        a = report["analysis"]
        print(f"[report] ratio {a['ratio']['mean']:.3f} +/- {a['ratio']['std']:.3f}, "
              f"straddles={a['straddle']['straddles']}, residual mean={a['residuals']['mean']:.4g}")
    return report


# ---------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------
def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="JSON run configuration.")
    common.add_argument("--seed", type=int, help="Run seed.")
    common.add_argument("--design", type=str, help="haar(m,n) or fiducial(n_random).")
    common.add_argument("--ranks", type=str, help="Ranks to fit, e.g. 2-12 or 8,9,10.")
    common.add_argument("--rays", type=int, help="Rays for the dimension ratio.")
    common.add_argument("--n-dirs", type=int, dest="n_dirs", help="Support directions per H-projection.")
    common.add_argument("--epsilon", type=float, help="Depolarizing level of the simulated preparations.")
    common.add_argument("--threads", type=int, help="Worker threads.")
    common.add_argument("--out", type=str, help="Output directory.")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug.")

    ap = argparse.ArgumentParser(description="Theory-agnostic tomography of a simulated qutrit.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Simulate train/test count tables.")
    p_fit = sub.add_parser("fit", parents=[common], help="Rank sweep on simulated frequencies.")
    p_fit.add_argument("--train", type=str, help="Train frequencies as DIR/PREFIX (default OUT/simulate/train).")
    p_fit.add_argument("--test", type=str, help="Test frequencies as DIR/PREFIX (default OUT/simulate/test).")
    p_an = sub.add_parser("analyze", parents=[common], help="Gauge fix and geometry of a fitted model.")
    p_an.add_argument("--model-dir", type=str, help="Fit output directory (default OUT/fit).")
    p_an.add_argument("--rank", type=int, help="Analyze this rank instead of the selected one.")
    sub.add_parser("report", parents=[common], help="Summarize fit and analysis results.")
    return ap.parse_args(argv)


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_json(args.config) if args.config else RunConfig()
    return config.with_overrides(
        seed=args.seed,
        design=args.design,
        ranks=parse_ranks(args.ranks) if args.ranks else None,
        rays=args.rays,
        n_dirs=args.n_dirs,
        epsilon=args.epsilon,
        threads=args.threads,
        output_dir=args.out,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
        if args.command == "simulate":
            cmd_simulate(config)
        elif args.command == "fit":
            cmd_fit(config, args.train, args.test)
        elif args.command == "analyze":
            cmd_analyze(config, args.model_dir, args.rank)
        else:
            cmd_report(config)
    except GptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
