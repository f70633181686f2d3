"""``gridid`` command line tool: dataset generation, estimation, sweeps, model comparison.

Exit codes: 0 success, 2 configuration error, 3 numerical or observability
failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import io
from .estimation import EstimatorConfig, ObservabilityError, lasso_estimate, mle_estimate
from .measurement import (
    NoiseSpec,
    TrueStates,
    apply_noise,
    center,
    derive_currents,
    generate_load_profiles,
    measurements_from_readings,
    synthesize_dataset,
)
from .metrics import (
    DEFAULT_SPARSITY_THRESHOLD,
    METRIC_COLUMNS,
    MetricReport,
    phaseless_current_errors,
    power_model_errors,
    rrmse,
    sparsity_report,
)
from .network import NetworkError, NetworkModel, build_admittance, ieee33, load_network
from .powerflow import PowerFlowDivergence

log = logging.getLogger("gridid")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
METHODS = ("mle_with_phase", "mle_phaseless", "lasso_with_phase", "lasso_phaseless")
BUILTIN_NETWORK = "ieee33"
APPROX_NOISE_LEVEL = 1e-3
# objective_descent is 1 when the estimator's objective trace never increased, empty for the lasso
SWEEP_COLUMNS = ("noise_level", "method", "rrmse_y", "sparsity_false_positives", "objective_descent", "status")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    network_path: str = BUILTIN_NETWORK
    n_samples: int = 1440
    sigma_load_rel: float = 0.2
    noise_levels: tuple = (1e-4, 1e-3, 1e-2, 1e-1)
    seed: int = 0
    methods: tuple = METHODS
    output_dir: str = "out"
    max_iters: int = 100
    rel_tol: float = 1e-8
    sigma_delta_inflation: float = 100.0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.sigma_load_rel < 0:
            raise ConfigError("sigma_load_rel must be >= 0")
        if not self.noise_levels:
            raise ConfigError("noise_levels must not be empty")
        for x in self.noise_levels:
            if not 0 <= x <= 0.1:
                raise ConfigError(f"noise level {x} outside [0, 0.1]")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}, got {sorted(unknown)}")

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        doc = dict(doc)
        for key in ("noise_levels", "methods"):
            if key in doc:
                doc[key] = tuple(doc[key])
        net = doc.get("network_path")
        if base_dir is not None and net and net != BUILTIN_NETWORK and not Path(net).is_absolute():
            doc["network_path"] = str(base_dir / net)
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc, path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise_levels"] = list(self.noise_levels)
        d["methods"] = list(self.methods)
        return d

    def network(self) -> NetworkModel:
        return ieee33() if self.network_path == BUILTIN_NETWORK else load_network(self.network_path)


def child_seed(seed: int, index: int) -> int:
    """Independent seed for cell ``index`` of an experiment seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint32)[0])


def _level_tag(level: float) -> str:
    return f"{level:g}"


def _truth(cfg: ExperimentConfig, network: NetworkModel) -> TrueStates:
    profiles = generate_load_profiles(network, cfg.n_samples, cfg.sigma_load_rel, seed=cfg.seed)
    return synthesize_dataset(network, profiles)


def _estimate(ms, method: str, cfg: ExperimentConfig):
    """Run one method on raw measurements; returns (y_hat, objective trace)."""
    ms = center(derive_currents(ms))
    if method.startswith("mle"):
        ecfg = EstimatorConfig(
            max_iters=cfg.max_iters,
            rel_tol=cfg.rel_tol,
            phase_mode="with_phase" if ms.with_phase else "phaseless",
            sigma_delta_inflation=cfg.sigma_delta_inflation,
        )
        res = mle_estimate(ms, ecfg)
        return res.y_hat, res.neg_log_likelihood_trace
    return lasso_estimate(ms), []


def _with_phase(method: str) -> bool:
    return method.endswith("with_phase")


# ---------------------------------------------------------------------------
# commands


def cmd_generate(cfg: ExperimentConfig) -> Path:
    """Write the true states, one measurement file per noise level and phase mode, and a manifest."""
    out = Path(cfg.output_dir)
    network = cfg.network()
    truth = _truth(cfg, network)
    files = {"truth": "truth.csv", "measurements": []}
    io.write_states(out / "truth.csv", truth.v, truth.theta, truth.p, truth.q)
    for li, level in enumerate(cfg.noise_levels):
        spec = NoiseSpec.from_level(level)
        for with_phase in (True, False):
            mode = "with_phase" if with_phase else "phaseless"
            seed = child_seed(cfg.seed, 2 * li + (0 if with_phase else 1))
            ms = apply_noise(truth, spec, with_phase, seed=seed, sigma_delta_inflation=cfg.sigma_delta_inflation)
            name = f"measurements_{_level_tag(level)}_{mode}.csv"
            io.write_states(out / name, ms.v_mag, ms.theta, ms.p, ms.q)
            files["measurements"].append({"noise_level": level, "mode": mode, "seed": seed, "file": name})
    manifest = {"config": cfg.to_dict(), "network": network.name, "n_buses": network.n, "files": files}
    io.write_json(out / "manifest.json", manifest)
    return out / "manifest.json"


def cmd_estimate(dataset, method: str, noise_level: float, cfg: ExperimentConfig, out=None) -> MetricReport:
    """Estimate ``Y`` from a generated dataset; writes the matrix, a metrics row and the trace."""
    dataset = Path(dataset)
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    manifest = io.read_json(dataset / "manifest.json")
    mode = "with_phase" if _with_phase(method) else "phaseless"
    entry = next(
        (m for m in manifest["files"]["measurements"]
         if m["mode"] == mode and np.isclose(m["noise_level"], noise_level, rtol=1e-12, atol=0)),
        None,
    )
    if entry is None:
        raise ConfigError(f"dataset has no {mode} measurements at noise level {noise_level}")
    gen_cfg = ExperimentConfig.from_dict(manifest["config"])
    y_true = build_admittance(gen_cfg.network()).y
    v_mag, theta, p, q = io.read_states(dataset / entry["file"])
    ms = measurements_from_readings(v_mag, theta, p, q, NoiseSpec.from_level(noise_level), cfg.sigma_delta_inflation)
    y_hat, trace = _estimate(ms, method, cfg)
    fp, _ = sparsity_report(y_hat, y_true, DEFAULT_SPARSITY_THRESHOLD)
    report = MetricReport(rrmse_y=rrmse(y_hat, y_true), sparsity_false_positives=fp)
    out = Path(out or cfg.output_dir)
    stem = f"{method}_{_level_tag(noise_level)}"
    io.write_matrix(out / f"y_hat_{stem}.csv", y_hat)
    io.write_rows(out / f"metrics_{stem}.csv", METRIC_COLUMNS, [report.as_row()])
    io.write_rows(out / f"trace_{stem}.csv", ("iteration", "objective"), enumerate(trace))
    return report


def _sweep_cell(args):
    cfg, truth, y_true, index, level, method = args
    seed = child_seed(cfg.seed, index)
    start = time.perf_counter()
    try:
        ms = apply_noise(truth, NoiseSpec.from_level(level), _with_phase(method), seed=seed,
                         sigma_delta_inflation=cfg.sigma_delta_inflation)
        y_hat, trace = _estimate(ms, method, cfg)
        err, status = rrmse(y_hat, y_true), "ok"
        fp, _ = sparsity_report(y_hat, y_true, DEFAULT_SPARSITY_THRESHOLD)
        descent = int(all(b <= a for a, b in zip(trace, trace[1:]))) if trace else ""
    except (ObservabilityError, np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
        err, fp, descent, status = float("nan"), "", "", f"failed: {exc}"
    elapsed = time.perf_counter() - start
    log.info("cell %d level=%g %s rrmse=%.4g (%.1fs)", index, level, method, err, elapsed)
    return level, method, err, fp, descent, status


def _threads() -> int:
    raw = os.environ.get("GRIDID_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"GRIDID_THREADS must be an integer, got {raw!r}") from exc


def cmd_sweep(cfg: ExperimentConfig) -> Path:
    """RRMSE of every method at every noise level, one CSV row per cell.

    Failed cells are recorded with a status message and the sweep carries on.
    """
    network = cfg.network()
    truth = _truth(cfg, network)
    y_true = build_admittance(network).y
    cells = [
        (cfg, truth, y_true, k, level, method)
        for k, (level, method) in enumerate((lv, m) for lv in cfg.noise_levels for m in cfg.methods)
    ]
    workers = min(_threads(), len(cells))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    out = Path(cfg.output_dir) / "sweep.csv"
    io.write_rows(out, SWEEP_COLUMNS, results)
    io.write_json(Path(cfg.output_dir) / "sweep_manifest.json",
                  {"config": cfg.to_dict(), "rrmse_y": "complex Frobenius norm ratio",
                   "sparsity_threshold_pu": DEFAULT_SPARSITY_THRESHOLD,
                   "cells": [{"index": c[3], "noise_level": c[4], "method": c[5], "seed": child_seed(cfg.seed, c[3])}
                             for c in cells]})
    return out


def cmd_compare_approx(cfg: ExperimentConfig) -> Path:
    """Accuracy of the linearized and adapted power models and of the phase-less currents.

    The power models are evaluated on with-phase voltage readings at 0.1%
    noise and compared with the exact powers of the true states; the currents
    use phase-less readings at the same level.
    """
    network = cfg.network()
    truth = _truth(cfg, network)
    y = build_admittance(network).y
    spec = NoiseSpec.from_level(APPROX_NOISE_LEVEL)
    ms = apply_noise(truth, spec, True, seed=child_seed(cfg.seed, 0))
    # exact powers of the true states, model powers of the measured states
    noisy = replace(truth, v=ms.v_mag, theta=ms.theta)
    errs = power_model_errors(y, noisy, network.base_power, reference=truth)
    pl = apply_noise(truth, spec, False, seed=child_seed(cfg.seed, 1))
    i_re, i_im = phaseless_current_errors(truth, pl.v_mag, pl.p, pl.q)
    rows = [
        ("power", "linearized", "p", errs["rrmse_p_lin"], errs["mad_p_lin"]),
        ("power", "linearized", "q", errs["rrmse_q_lin"], errs["mad_q_lin"]),
        ("power", "adapted", "p", errs["rrmse_p_adapted"], errs["mad_p"]),
        ("power", "adapted", "q", errs["rrmse_q_adapted"], errs["mad_q"]),
        ("current", "phaseless", "re", i_re, None),
        ("current", "phaseless", "im", i_im, None),
    ]
    out = Path(cfg.output_dir) / "approximations.csv"
    io.write_rows(out, ("quantity", "model", "part", "rrmse", "mad"), rows)
    report = MetricReport(**{k: errs[k] for k in ("rrmse_p_adapted", "rrmse_q_adapted", "mad_p", "mad_q")},
                          rrmse_p_lin=errs["rrmse_p_lin"], rrmse_q_lin=errs["rrmse_q_lin"],
                          rrmse_i_re=i_re, rrmse_i_im=i_im)
    io.write_rows(Path(cfg.output_dir) / "approximations_metrics.csv", METRIC_COLUMNS, [report.as_row()])
    return out


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridid", description="Admittance matrix identification experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("generate", "estimate", "sweep", "compare-approx"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="experiment config (JSON); defaults apply when omitted")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        if name == "estimate":
            sp.add_argument("--dataset", help="directory written by 'generate' (default: the config output_dir)")
            sp.add_argument("--method", required=True, choices=METHODS)
            sp.add_argument("--noise-level", type=float, required=True)
    return ap


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["output_dir"] = args.out
    return replace(cfg, **over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _load_config(args)
        if args.command == "generate":
            path = cmd_generate(cfg)
        elif args.command == "estimate":
            dataset = args.dataset or cfg.output_dir
            report = cmd_estimate(dataset, args.method, args.noise_level, cfg, out=args.out or dataset)
            print(f"rrmse_y={report.rrmse_y:.6g} false_positives={report.sparsity_false_positives}")
            return EXIT_OK
        elif args.command == "sweep":
            path = cmd_sweep(cfg)
        else:
            path = cmd_compare_approx(cfg)
        print(path)
        return EXIT_OK
    except (ConfigError, NetworkError, KeyError) as exc:
        print(f"gridid: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ObservabilityError, PowerFlowDivergence, np.linalg.LinAlgError, FloatingPointError,
            ZeroDivisionError) as exc:
        print(f"gridid: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"gridid: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"gridid: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
