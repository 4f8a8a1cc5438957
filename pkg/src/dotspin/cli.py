"""Batch command-line front-end.

Runs the simulation experiments from declarative JSON configs, writes CSV
(sweeps) or JSON (scalar results with a provenance block), and bundles one
config per reproduced figure under `dotspin/configs/`.

Exit codes: 0 success, 1 config/validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import asdict
from importlib import resources

import numpy as np

from .core import NoiseModel, SpinSystemParams, transition_frequencies
from .experiments import (
    BellNoiseConfig,
    ExperimentResult,
    compute_error_budget,
    provenance_block,
    run_bell_parity_sweep,
    run_bell_tomography,
    run_hahn,
    run_nmr_chevron,
    run_rabi,
    run_ramsey,
    run_shuttle_experiments,
)
from . import fitting, hyperfine, vanvleck
from .readout import NuclearReadoutConfig, fidelity_curve, optimize_shots

FIGURE_IDS = ("2e", "2f", "2gj", "3ce", "4b", "4d", "4f", "ext1", "s1", "s2")

SUBCOMMANDS = (
    "spectrum", "chevron", "rabi", "ramsey", "hahn", "bell", "error-budget",
    "shuttle", "readout-fidelity", "hyperfine-mc", "vanvleck", "fit",
    "reproduce",
)


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending key path."""


# --------------------------------------------------------------------------
# Config validation

_PARAMS_SCHEMA = {
    "b_ext": float, "gamma_e": float, "gamma_n": float, "a_hf": float,
    "a_spectator": float, "electron_loaded": bool, "full_hamiltonian": bool,
}
_NOISE_SCHEMA = {
    "sigma_ix": float, "sigma_iz": float, "sigma_sz": float,
    "spectator_flip_prob": float, "seed": int,
}
_BELL_NOISE_SCHEMA = {
    "t2_star_e_us": float, "t2_star_n_us": float, "t2_rabi_n_us": float,
    "spectator_flip_prob": float, "pulse_length_error": float,
    "electron_t2star": bool, "spectator_nucleus": bool,
    "pulse_calibration": bool, "nmr_control": bool, "nuclear_t2star": bool,
}

_SCHEMAS = {
    "spectrum": {"params": _PARAMS_SCHEMA},
    "chevron": {
        "params": _PARAMS_SCHEMA, "noise": _NOISE_SCHEMA,
        "freq_start": float, "freq_stop": float, "freq_points": int,
        "dur_start": float, "dur_stop": float, "dur_points": int,
        "rabi": float, "charge_config": str, "electron_spin": str,
        "trials": int, "seed": int,
    },
    "rabi": {
        "params": _PARAMS_SCHEMA, "noise": _NOISE_SCHEMA,
        "frequency": float, "dur_start": float, "dur_stop": float,
        "dur_points": int, "rabi": float, "charge_config": str,
        "electron_spin": str, "trials": int, "seed": int,
    },
    "ramsey": {
        "params": _PARAMS_SCHEMA, "noise": _NOISE_SCHEMA,
        "tau_start": float, "tau_stop": float, "tau_points": int,
        "detuning_khz": float, "charge_config": str, "trials": int, "seed": int,
    },
    "hahn": {
        "params": _PARAMS_SCHEMA, "noise": _NOISE_SCHEMA,
        "tau_start": float, "tau_stop": float, "tau_points": int,
        "detuning_khz": float, "charge_config": str, "trials": int, "seed": int,
    },
    "bell": {
        "params": _PARAMS_SCHEMA, "bell_noise": _BELL_NOISE_SCHEMA,
        "mode": str,  # tomography | parity
        "vary": str, "phi_start": float, "phi_stop": float, "phi_points": int,
        "initial_nuclear": str, "trials": int, "seed": int,
    },
    "error-budget": {
        "params": _PARAMS_SCHEMA, "bell_noise": _BELL_NOISE_SCHEMA,
        "trials": int, "seed": int,
    },
    "shuttle": {
        "params": _PARAMS_SCHEMA, "noise": _NOISE_SCHEMA,
        "variant": str, "sweep_start": float, "sweep_stop": float,
        "sweep_points": int, "tau_0": float, "p_err": float,
        "t_ramp": float, "p_transfer": float, "trials": int, "seed": int,
    },
    "readout-fidelity": {
        "m_shots": int, "t_shot_ms": float, "t1_n_hours": float,
        "f_e_avg": float, "m_max": int,
    },
    "hyperfine-mc": {
        "diameter_start": float, "diameter_stop": float, "diameter_points": int,
        "thresholds": list, "ppm": float, "draws": int, "f_z": float, "seed": int,
    },
    "vanvleck": {
        "standoff_start": float, "standoff_stop": float, "standoff_points": int,
        "thickness": float, "lateral": list,
    },
    "fit": {"model": str, "input": str, "x_column": str, "y_column": str},
    "s1-stats": {
        "t1_a1_hours": float, "t1_a2_minutes": float, "a1": float, "a2": float,
        "sigma": float, "n_scans": int, "scan_interval_s": float, "seed": int,
    },
}


def validate_config(config: dict, experiment: str, path: str = "") -> None:
    if experiment not in _SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    _validate_section(config, _SCHEMAS[experiment], path or experiment)


def _validate_section(section: dict, schema: dict, path: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected a mapping")
    for key, value in section.items():
        if key not in schema:
            raise ConfigError(f"{path}.{key}: unknown key")
        expected = schema[key]
        if isinstance(expected, dict):
            _validate_section(value, expected, f"{path}.{key}")
        elif expected is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{path}.{key}: expected a number")
        elif not isinstance(value, expected):
            raise ConfigError(f"{path}.{key}: expected {expected.__name__}")


def _build_params(config: dict) -> SpinSystemParams:
    return SpinSystemParams(**config.get("params", {}))


def _build_noise(config: dict) -> NoiseModel:
    return NoiseModel(**config.get("noise", {}))


def _linspace(config, prefix, default_start, default_stop, default_points):
    return np.linspace(
        config.get(f"{prefix}_start", default_start),
        config.get(f"{prefix}_stop", default_stop),
        int(config.get(f"{prefix}_points", default_points)),
    )


# --------------------------------------------------------------------------
# Experiment dispatch


def _run_spectrum(config, trials, seed, threads):
    params = _build_params(config)
    return {"transition_frequencies_mhz": transition_frequencies(params)}


def _run_chevron(config, trials, seed, threads):
    params = _build_params(config)
    f = transition_frequencies(params)
    centre = {
        "unloaded": f["f_n0"], "qd1": f["f_n_elec_down"],
    }.get(config.get("charge_config", "unloaded"), f["f_n0"])
    freqs = _linspace(config, "freq", centre - 0.01, centre + 0.01, 21)
    durs = _linspace(config, "dur", 25.0, 1000.0, 21)
    return run_nmr_chevron(
        freqs, durs, params, noise=_build_noise(config), trials=trials,
        seed=seed, rabi=config.get("rabi", 2.0),
        charge_config=config.get("charge_config", "unloaded"),
        electron_spin=config.get("electron_spin", "down"), threads=threads,
    )


def _run_rabi(config, trials, seed, threads):
    params = _build_params(config)
    durs = _linspace(config, "dur", 25.0, 2000.0, 41)
    return run_rabi(
        durs, params, frequency=config.get("frequency"),
        noise=_build_noise(config), trials=trials, seed=seed,
        rabi=config.get("rabi", 2.0),
        charge_config=config.get("charge_config", "unloaded"),
        electron_spin=config.get("electron_spin", "down"), threads=threads,
    )


def _run_ramsey(config, trials, seed, threads):
    taus = _linspace(config, "tau", 10.0, 15000.0, 40)
    return run_ramsey(
        taus, detuning_khz=config.get("detuning_khz", 2.0),
        params=_build_params(config), noise=_build_noise(config),
        trials=trials, seed=seed,
        charge_config=config.get("charge_config", "unloaded"), threads=threads,
    )


def _run_hahn(config, trials, seed, threads):
    taus = _linspace(config, "tau", 10.0, 25000.0, 40)
    return run_hahn(
        taus, detuning_khz=config.get("detuning_khz", 0.0),
        params=_build_params(config), noise=_build_noise(config),
        trials=trials, seed=seed,
        charge_config=config.get("charge_config", "unloaded"), threads=threads,
    )


def _run_bell(config, trials, seed, threads):
    params = _build_params(config)
    bell_noise = BellNoiseConfig(**config.get("bell_noise", {}))
    if config.get("mode", "tomography") == "parity":
        phis = _linspace(config, "phi", 0.0, 360.0, 19)
        return run_bell_parity_sweep(
            params, bell_noise, phi_range=phis,
            vary=config.get("vary", "nuclear"), trials=trials, seed=seed,
            initial_nuclear=config.get("initial_nuclear", "down"),
            threads=threads,
        )
    res = run_bell_tomography(
        params, bell_noise, trials=trials, seed=seed,
        initial_nuclear=config.get("initial_nuclear", "down"), threads=threads,
    )
    return {
        "fidelity": res.fidelity,
        "components": res.components,
        "probabilities": {k: list(v) for k, v in res.probabilities.items()},
        "calibration": {k: list(np.atleast_1d(v)) for k, v in
                        res.calibration.items()},
    }


def _run_error_budget(config, trials, seed, threads):
    budget = compute_error_budget(
        _build_params(config), BellNoiseConfig(**config.get("bell_noise", {})),
        trials=trials, seed=seed, threads=threads,
    )
    return asdict(budget)


def _run_shuttle(config, trials, seed, threads):
    variant = config.get("variant", "phase")
    defaults = {"phase": (0.0, 20.0, 41), "repeated": (0.0, 100.0, 11),
                "electron": (0.0, 360.0, 19)}[variant]
    sweep = _linspace(config, "sweep", *defaults)
    if variant == "repeated":
        sweep = np.unique(np.round(sweep).astype(int))
    return run_shuttle_experiments(
        variant, sweep, params=_build_params(config),
        noise=_build_noise(config), trials=trials, seed=seed,
        tau_0=config.get("tau_0", 500.0), p_err=config.get("p_err", 0.0),
        t_ramp=config.get("t_ramp", 1.0),
        p_transfer=config.get("p_transfer", 0.0), threads=threads,
    )


def _run_readout_fidelity(config, trials, seed, threads):
    cfg = NuclearReadoutConfig(
        m_shots=config.get("m_shots", 26),
        t_shot_ms=config.get("t_shot_ms", 8.0),
        t1_n_hours=config.get("t1_n_hours", 1.0),
        f_e_avg=config.get("f_e_avg", 0.765),
    )
    m_max = config.get("m_max", 50)
    rows = fidelity_curve(cfg, m_max)
    m_opt = optimize_shots(cfg, m_max)
    return {
        "m": np.array([r[0] for r in rows], dtype=float),
        "f_t1": np.array([r[1] for r in rows]),
        "f_shot": np.array([r[2] for r in rows]),
        "f_n": np.array([r[3] for r in rows]),
        "m_opt": np.full(len(rows), float(m_opt)),
    }


def _run_hyperfine(config, trials, seed, threads):
    diameters = _linspace(config, "diameter", 3.0, 15.0, 13)
    return hyperfine.probability_curves(
        diameters, config.get("thresholds", [100.0, 200.0, 500.0]),
        ppm=config.get("ppm", 800.0), draws=config.get("draws", 1000),
        f_z=config.get("f_z", hyperfine.DEFAULT_F_Z), seed=seed,
    )


def _run_vanvleck(config, trials, seed, threads):
    standoffs = _linspace(config, "standoff", 2.0, 20.0, 10)
    return vanvleck.standoff_sweep(
        standoffs, thickness=config.get("thickness", 50.0),
        lateral=tuple(config.get("lateral", (300.0, 100.0))),
    )


def _run_fit(config, trials, seed, threads):
    import csv as _csv

    path = config["input"]
    with open(path) as fh:
        rows = list(_csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"fit.input: no data rows in {path}")
    x_col = config.get("x_column") or list(rows[0])[0]
    y_col = config.get("y_column") or list(rows[0])[1]
    x = np.array([float(r[x_col]) for r in rows])
    y = np.array([float(r[y_col]) for r in rows])
    model = config["model"]
    fitters = {
        "ramsey": fitting.fit_ramsey, "hahn": fitting.fit_hahn,
        "sinusoid": fitting.fit_sinusoid,
        "coherence_decay": fitting.fit_coherence_decay,
    }
    if model not in fitters:
        raise ConfigError(f"fit.model: unknown model {model!r}")
    res = fitters[model](x, y)
    return {
        "model": res.model,
        "parameters": res.parameters,
        "uncertainties": res.uncertainties,
        "residual_norm": res.residual_norm,
        "converged": res.converged,
        "flags": res.flags,
    }


def _run_s1_stats(config, trials, seed, threads):
    """Synthetic centre-frequency telegraph record: two nuclei flipping at
    their characteristic lifetimes, then the full fit/classify pipeline."""
    rng = np.random.default_rng(seed)
    a1 = config.get("a1", 503.0)
    a2 = config.get("a2", 119.0)
    sigma = config.get("sigma", 34.0)
    dt = config.get("scan_interval_s", 40.0)
    n = config.get("n_scans", 4000)
    p1 = 1.0 - np.exp(-dt / (config.get("t1_a1_hours", 1.0) * 3600.0))
    p2 = 1.0 - np.exp(-dt / (config.get("t1_a2_minutes", 10.0) * 60.0))
    s1 = np.cumsum(rng.random(n) < p1) % 2
    s2 = np.cumsum(rng.random(n) < p2) % 2
    # spectrum peaks sit at +-a1 +-a2, so a flip of either nucleus moves the
    # centre frequency by twice its peak-position amplitude
    centres = (2 * s1 - 1) * a1 + (2 * s2 - 1) * a2
    observed = centres + rng.normal(0.0, sigma / 4, n)
    hist_fit = fitting.fit_esr_histogram(
        centres + rng.normal(0.0, sigma, n), bin_width=8.0
    )
    events = fitting.classify_shifts(
        observed, 2 * hist_fit.parameters["a1"], 2 * hist_fit.parameters["a2"],
        hist_fit.parameters["sigma"], times=np.arange(n) * dt,
    )
    out = {"histogram_fit": {
        "a1": hist_fit.parameters["a1"], "a2": hist_fit.parameters["a2"],
        "sigma": hist_fit.parameters["sigma"],
    }}
    for label, scale, unit in (("A1", 3600.0, "hours"), ("A2", 60.0, "minutes")):
        iv = events["intervals"][label]
        if len(iv) >= 10:
            t1 = fitting.fit_flip_intervals(iv)
            out[f"t1_{label.lower()}_{unit}"] = t1.parameters["t1"] / scale
    return out


_RUNNERS = {
    "spectrum": _run_spectrum,
    "chevron": _run_chevron,
    "rabi": _run_rabi,
    "ramsey": _run_ramsey,
    "hahn": _run_hahn,
    "bell": _run_bell,
    "error-budget": _run_error_budget,
    "shuttle": _run_shuttle,
    "readout-fidelity": _run_readout_fidelity,
    "hyperfine-mc": _run_hyperfine,
    "vanvleck": _run_vanvleck,
    "fit": _run_fit,
    "s1-stats": _run_s1_stats,
}


# --------------------------------------------------------------------------
# Output


def _write_table(table: dict, out, fmt: str, meta: dict, seed, trials) -> None:
    if isinstance(table, ExperimentResult):
        if fmt == "json":
            text = table.to_json()
        else:
            with _out_path(out) as path:
                table.to_csv(path)
            return
    elif fmt == "csv" and all(
        isinstance(v, (np.ndarray, list)) for v in table.values()
    ):
        with _out_path(out) as path:
            hyperfine.export_csv(
                {k: np.asarray(v, dtype=float) for k, v in table.items()}, path
            )
        return
    else:
        payload = {
            "result": _jsonable(table),
            "provenance": provenance_block(meta, seed or 0, trials or 0),
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
    if out == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


@contextmanager
def _out_path(out):
    """Yield a real filesystem path; '-' spools to a temp file and echoes it
    to stdout so the CSV writers only ever deal with paths."""
    if out != "-":
        yield out
        return
    with tempfile.NamedTemporaryFile("r", suffix=".csv", delete=True) as fh:
        yield fh.name
        sys.stdout.write(fh.read())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.ndarray, list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# --------------------------------------------------------------------------
# Entry point


def _load_bundled_config(figure_id: str) -> dict:
    name = f"fig_{figure_id}.json"
    ref = resources.files("dotspin.configs").joinpath(name)
    if not ref.is_file():
        raise ConfigError(f"no bundled config for figure {figure_id!r}")
    return json.loads(ref.read_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dotspin",
        description="Quantum-dot-coupled nuclear spin qubit simulation suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        if name == "reproduce":
            p.add_argument("figure", choices=FIGURE_IDS)
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--dry-run", action="store_true")
        if name == "readout-fidelity":
            p.add_argument("--scan-m", default=None, metavar="LO..HI")
        if name == "fit":
            p.add_argument("--model", default=None)
            p.add_argument("--input", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    command = args.command
    config: dict = {}
    if command == "reproduce":
        bundle = _load_bundled_config(args.figure)
        runs = bundle["runs"] if "runs" in bundle else [bundle]
        return _run_all(runs, args)
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}:{exc.lineno}: {exc.msg}")
    config.setdefault("experiment", command)
    if getattr(args, "model", None):
        config["model"] = args.model
    if getattr(args, "input", None):
        config["input"] = args.input
    if getattr(args, "scan_m", None):
        lo, _, hi = args.scan_m.partition("..")
        config["m_max"] = int(hi or lo)
    return _run_all([config], args)


def _run_all(runs, args) -> int:
    for i, run in enumerate(runs):
        run = dict(run)
        experiment = run.pop("experiment", args.command)
        out = run.pop("out", None)
        fmt = run.pop("format", None)
        trials = args.trials if args.trials is not None else run.pop("trials", 1)
        seed = args.seed if args.seed is not None else run.pop("seed", 0)
        if trials < 1:
            raise ConfigError("trials must be >= 1")
        if args.threads < 1:
            raise ConfigError("threads must be >= 1")
        validate_config(run, experiment)
        out = args.out or out or "-"
        if out != "-" and not os.path.isabs(out):
            out = os.path.join(os.environ.get("DOTSPIN_OUTDIR", "."), out)
        fmt = args.fmt or fmt or (
            "json" if experiment in
            ("spectrum", "bell", "error-budget", "fit", "s1-stats") else "csv"
        )
        if args.dry_run:
            plan = {"experiment": experiment, "config": run, "trials": trials,
                    "seed": seed, "out": out, "format": fmt,
                    "threads": args.threads}
            print(json.dumps(_jsonable(plan), indent=2, sort_keys=True))
            continue
        result = _RUNNERS[experiment](run, trials, seed, args.threads)
        _write_table(result, out, fmt, {"experiment": experiment, **run},
                     seed, trials)
    return 0


if __name__ == "__main__":
    sys.exit(main())
