"""Command-line entry point: run one configured experiment and write CSV plus a JSON manifest.

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 configuration
error, 3 runtime or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
import traceback
from importlib import metadata
from pathlib import Path

import numpy as np

from . import harness
from .config import ConfigError, ExperimentConfig, load_config_document, parse_config

__all__ = ["main", "run", "parse_config", "CSV_COLUMNS", "EXIT_OK", "EXIT_FAIL", "EXIT_CONFIG", "EXIT_RUNTIME"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

CSV_COLUMNS = {
    "noise-check": ["lambda", "empirical", "target", "se", "bias_bound", "pass"],
    "she-mean": ["check", "value", "threshold", "pass"],
    "pde-convergence": ["check", "value", "threshold", "pass"],
    "sampler-check": ["check", "value", "threshold", "pass"],
    "duality-gap": ["n", "y_estimate", "y_se", "z_estimate", "z_se", "gap", "combined_se", "theory_scale", "pass"],
    "moments-martingale": ["t", "moment_max", "envelope", "martingale_mean", "martingale_se", "pass"],
    "gronwall": ["gamma", "c", "k", "min_log_margin", "pass"],
}

_GAP_NOTE = (
    "The duality gap compares E exp(-<Y_t, psi>) from the stable-noise simulator with "
    "E exp(-<phi, Z_t>) from the dual jump process at each truncation level n; the "
    "individual duality identities between them are exercised only through this comparison."
)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


class _Result:
    def __init__(self):
        self.rows: list[list] = []
        self.assertions: list[tuple[str, bool, str]] = []

    def check(self, name: str, ok: bool, detail: str = ""):
        self.assertions.append((name, bool(ok), detail))


def _abort_check(res: _Result, paths, cfg: ExperimentConfig):
    aborted = sum(p.aborted for p in paths)
    frac = aborted / max(len(paths), 1)
    res.check("replica_abort_fraction", frac <= cfg.allowance.abort_fraction, f"{aborted}/{len(paths)} aborted")


def _rows_from_checks(res: _Result, rows):
    for r in rows:
        res.rows.append([r.check, r.value, r.threshold, r.passed])
        res.check(r.check, r.passed, f"value={r.value!r} threshold={r.threshold!r}")


def _dispatch(cfg: ExperimentConfig, workers: int) -> _Result:
    res = _Result()
    exp = cfg.experiment
    if exp == "noise-check":
        for r in harness.run_noise_check(cfg, workers):
            res.rows.append([r.lam, r.empirical, r.target, r.se, r.bias_bound, r.passed])
            res.check(f"laplace_lambda={r.lam:g}", r.passed, f"|{r.empirical!r} - {r.target!r}| vs 3*{r.se!r} + {r.bias_bound!r}")
    elif exp == "she-mean":
        rows, paths = harness.run_she_mean(cfg, workers)
        _rows_from_checks(res, rows)
        frac = harness.clamp_fraction(paths)
        res.rows.append(["clamp_fraction", frac, 0.01, frac <= 0.01])
        res.check("clamp_fraction", frac <= 0.01, f"worst per-step clamped fraction {frac!r}")
        _abort_check(res, paths, cfg)
    elif exp == "pde-convergence":
        _rows_from_checks(res, harness.run_pde_convergence(cfg))
    elif exp == "sampler-check":
        _rows_from_checks(res, harness.run_sampler_check(cfg, workers))
    elif exp == "duality-gap":
        t = cfg.output_times[-1]
        paths = harness.simulate_y_ensemble(cfg.phi, cfg.model, [t], cfg.replicas, cfg.seed, workers, psi=cfg.psi)
        gx = harness.run_gap_experiment(cfg, workers, y_paths=paths)
        for r in gx.reports:
            res.rows.append(
                [r.n, r.y_side.estimate, r.y_side.std_error, r.z_side.estimate, r.z_side.std_error,
                 r.gap, r.combined_se, r.theory_scale, r.passed]
            )
            res.check(f"gap_n={r.n}", r.passed, f"gap={r.gap!r} vs 3*{r.combined_se!r} + {cfg.allowance.gap!r}")
        res.check("gap_monotone_within_ci", gx.monotone)
        res.check("y_side_identical_across_n", gx.y_identical)
        _abort_check(res, paths, cfg)
    elif exp == "moments-martingale":
        paths = harness.simulate_y_ensemble(
            cfg.phi, cfg.model, [t for t in cfg.output_times if t > 0], cfg.replicas, cfg.seed, workers, psi=cfg.psi
        )
        rows, _ = harness.run_moment_and_martingale_suite(cfg, workers, y_paths=paths)
        for r in rows:
            res.rows.append([r.t, r.moment_max, r.envelope, r.martingale_mean, r.martingale_se, r.passed])
            res.check(f"moment_martingale_t={r.t:g}", r.passed)
        _abort_check(res, paths, cfg)
    elif exp == "gronwall":
        for r in harness.run_gronwall_check(cfg):
            res.rows.append([r.gamma, r.c, r.k, r.min_log_margin, r.passed])
            res.check(f"gronwall_gamma={r.gamma:g}_c={r.c:g}", r.passed, f"log margin {r.min_log_margin!r}")
    else:  # parse_config rejects unknown names first
        raise ConfigError(f"experiment: unknown experiment {exp!r}")
    return res


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None, workers: int = 1, stream=None) -> int:
    """Run the configured experiment and write ``results.csv`` and ``manifest.json``.

    Returns the exit status; pass/fail lines go to ``stream`` (stdout by default).
    """
    stream = stream or sys.stdout
    out = Path(out_dir if out_dir is not None else cfg.out)
    start = time.perf_counter()
    res = _dispatch(cfg, max(1, int(workers)))
    wall = time.perf_counter() - start
    ok = all(a[1] for a in res.assertions)

    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(_csv_text(CSV_COLUMNS[cfg.experiment], res.rows))
    manifest = {
        "manifest_version": 1,
        "library_version": _version(),
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "streams": {
            "noise_replicas": harness.Y_STREAMS,
            "dual_replicas": harness.Z_STREAMS,
            "noise_increments": harness.NOISE_STREAMS,
            "samplers": harness.SAMPLER_STREAMS,
            "time_change": harness.TIME_CHANGE_STREAMS,
            "pde_pairs": harness.PDE_STREAMS,
        },
        "config": cfg.to_dict(),
        "workers": int(workers),
        "wall_time_s": round(wall, 3),
        "results_csv": "results.csv",
        "assertions": [{"name": n, "passed": p, "detail": d} for n, p, d in res.assertions],
        "passed": ok,
    }
    if cfg.experiment == "duality-gap":
        manifest["notes"] = _GAP_NOTE
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    for name, passed, detail in res.assertions:
        print(f"{'PASS' if passed else 'FAIL'} {name}{'  ' + detail if detail else ''}", file=stream)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="stable-she", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON experiment configuration or a previous run manifest")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="seed (overrides the config)")
    ap.add_argument("--replicas", type=int, help="replica count (overrides the config)")
    ap.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    args = ap.parse_args(argv)
    try:
        text = Path(args.config).read_text()
        cfg = load_config_document(text).with_overrides(args.seed, args.replicas, args.out)
        if args.workers < 1:
            raise ConfigError("--workers: must be at least 1")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"cannot read config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg, workers=args.workers)
    except Exception:  # reported, mapped to the runtime exit code
        traceback.print_exc()
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
