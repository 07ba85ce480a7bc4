"""Command-line interface: simulate, infer, sweep, score.

Configuration can come from an INI file (sections ``[encoder]``,
``[embedding]``, ``[scan]``, ``[test]``, ``[run]``) mirrored one-to-one by
command-line flags; flags win over the file.  The environment variable
``CT_SEED`` provides a seed default that ``--seed`` overrides.  All output
files are written atomically.  Exit codes: 0 success, 2 configuration
error, 3 data error (or numerical error for ``simulate``), 4 numerical
error during analysis.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .alphabet import encode, fit_encoder
from .capacity import approx_capacity
from .dynamics import (INIT_GENERATOR_ID, NOISE_GENERATOR_ID,
                       OU_BENCHMARK_NOISE, OuConfig, UlamConfig,
                       ou_benchmark_coefficients, simulate_ou, simulate_ulam)
from .errors import (CausalTensorsError, DegenerateData, InsufficientData,
                     InvalidInput, NumericalError, ShapeError)
from .inference import (PipelineConfig, graph_to_dot, graph_to_json_dict,
                        run_pipeline, scan_delays, significance_scan)
from .alphabet import EmbeddingSpec

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read_csv(path: str):
    try:
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError, StopIteration) as err:
        raise InvalidInput(f"cannot read CSV {path!r}: {err}") from err
    if data.shape[1] != len(header):
        raise InvalidInput("CSV header width does not match the data")
    return [h.strip() for h in header], data


def _env_seed() -> int:
    raw = os.environ.get("CT_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as err:
        raise InvalidInput(f"CT_SEED must be an integer, got {raw!r}") from err


_CONFIG_KEYS = {
    "encoder": {"bins": int, "strategy": str, "normalization": str,
                "threshold": float},
    "embedding": {"ell": int, "m": int},
    "scan": {"tau_min": int, "tau_max": int, "score": str},
    "test": {"surrogates": int, "alpha": float},
    "run": {"seed": int, "threads": int, "smoothing": float,
            "dpi_slack": float, "delay_tol": int, "triad_basis": str},
}


def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as err:
        raise InvalidInput(f"cannot read config {path!r}: {err}") from err
    values = {}
    for section, keys in _CONFIG_KEYS.items():
        if not parser.has_section(section):
            continue
        for key, cast in keys.items():
            if parser.has_option(section, key):
                try:
                    values[key] = cast(parser.get(section, key))
                except ValueError as err:
                    raise InvalidInput(
                        f"config key [{section}] {key}: {err}") from err
    return values


def _add_analysis_flags(cmd: argparse.ArgumentParser):
    cmd.add_argument("--config", help="INI config file; flags win over it")
    enc = cmd.add_argument_group("encoder")
    enc.add_argument("--bins", type=int, default=None)
    enc.add_argument("--strategy", default=None,
                     choices=["equal_width", "quantile", "threshold"])
    enc.add_argument("--normalization", default=None,
                     choices=["none", "zscore", "minmax"])
    enc.add_argument("--threshold", type=float, default=None)
    emb = cmd.add_argument_group("embedding")
    emb.add_argument("--ell", type=int, default=None)
    emb.add_argument("--m", type=int, default=None)
    scan = cmd.add_argument_group("scan")
    scan.add_argument("--tau-min", type=int, default=None)
    scan.add_argument("--tau-max", type=int, default=None)
    scan.add_argument("--score", default=None, choices=["capacity", "te"])
    test = cmd.add_argument_group("significance")
    test.add_argument("--surrogates", type=int, default=None)
    test.add_argument("--alpha", type=float, default=None)
    cmd.add_argument("--smoothing", type=float, default=None)
    cmd.add_argument("--seed", type=int, default=None)
    cmd.add_argument("--threads", type=int, default=None)


_PIPELINE_DEFAULTS = {
    "bins": 2, "strategy": "threshold", "normalization": "minmax",
    "threshold": 0.5, "ell": 1, "m": 1, "tau_min": 1, "tau_max": 20,
    "score": "capacity", "surrogates": 100, "alpha": 0.9, "smoothing": 0.0,
    "threads": 1, "dpi_slack": 0.01, "delay_tol": 1, "triad_basis": "single",
}


def _resolve_pipeline_config(args) -> PipelineConfig:
    values = dict(_PIPELINE_DEFAULTS)
    values["seed"] = _env_seed()
    if args.config:
        values.update(_load_config_file(args.config))
    for key in ("bins", "strategy", "normalization", "threshold", "ell", "m",
                "tau_min", "tau_max", "score", "surrogates", "alpha",
                "smoothing", "seed", "threads", "dpi_slack", "delay_tol",
                "triad_basis"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    n_surrogates = values.pop("surrogates")
    return PipelineConfig(n_surrogates=n_surrogates, **values)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_simulate_ulam(args) -> int:
    cfg = UlamConfig(epsilon=args.epsilon, length=args.length,
                     n_maps=args.n_maps, burn_in=args.burn_in,
                     seed=args.seed if args.seed is not None else _env_seed())
    data = simulate_ulam(cfg)
    header = [f"map{i}" for i in range(cfg.n_maps)]
    _write_csv(args.output, header, data)
    _write_json(args.output + ".meta.json", {
        "system": "ulam_lattice",
        "epsilon": cfg.epsilon, "length": cfg.length, "n_maps": cfg.n_maps,
        "burn_in": cfg.burn_in, "seed": cfg.seed,
        "init_generator": INIT_GENERATOR_ID,
    })
    return 0


def _cmd_simulate_ou(args) -> int:
    coeff = ou_benchmark_coefficients(args.noise)
    cfg = OuConfig(duration=args.duration, dt=args.dt,
                   sample_stride=args.stride, burn_in=args.burn_in,
                   seed=args.seed if args.seed is not None else _env_seed(),
                   coefficients=coeff)
    data = simulate_ou(cfg)
    _write_csv(args.output, ["x", "y", "z", "w"], data)
    _write_json(args.output + ".meta.json", {
        "system": "coupled_ou",
        "duration": cfg.duration, "dt": cfg.dt, "stride": cfg.sample_stride,
        "burn_in": cfg.burn_in, "seed": cfg.seed, "noise": args.noise,
        "noise_generator": NOISE_GENERATOR_ID,
    })
    return 0


def _cmd_infer(args) -> int:
    config = _resolve_pipeline_config(args)
    header, data = _read_csv(args.data)
    result = run_pipeline(data, header, config)
    _write_json(args.out_graph, graph_to_json_dict(result.graph))
    _write_json(args.out_report, result.report)
    _atomic_write(args.out_dot, graph_to_dot(result.graph))
    n_edges = len(result.graph.edges)
    print(f"{n_edges} edge(s); outputs: {args.out_graph}, "
          f"{args.out_report}, {args.out_dot}")
    return 0


def run_ulam_sweep(epsilons, length: int, bins: int = 4, ell: int = 1,
                   m: int = 1, tau_min: int = 1, tau_max: int = 20,
                   n_surrogates: int = 100, alpha: float = 0.9,
                   burn_in: int = 200_000, seed: int = 0, n_maps: int = 100):
    """Coupling sweep on the ring lattice, scored between adjacent maps.

    For each coupling value the map0 -> map1 relation is scanned over the
    delay range; one row per coupling reports the weighted capacity and
    transfer entropy at the best delay plus the surrogate verdict there.
    In coupling windows where the lattice locks onto a constant state the
    series carry no information at all and the row reports zeros.
    """
    rows = []
    for k, eps in enumerate(epsilons):
        sim = simulate_ulam(UlamConfig(epsilon=float(eps), length=length,
                                       burn_in=burn_in, seed=seed,
                                       n_maps=n_maps))
        try:
            enc0 = fit_encoder(sim[:, 0], bins, "equal_width", "none")
            enc1 = fit_encoder(sim[:, 1], bins, "equal_width", "none")
            src, dst = encode(sim[:, 0], enc0), encode(sim[:, 1], enc1)
            scan, sig = significance_scan(
                src, dst, ell, m + 1, range(tau_min, tau_max + 1),
                n_surrogates=n_surrogates, alpha=alpha,
                rng=np.random.default_rng(
                    np.random.SeedSequence([seed, 101, k])))
        except DegenerateData:
            rows.append({"epsilon": float(eps), "gamma_tilde": 0.0,
                         "te": 0.0, "best_tau": tau_min,
                         "significant": False})
            continue
        idx = int(np.nonzero(scan.taus == scan.best_tau)[0][0])
        rows.append({
            "epsilon": float(eps),
            "gamma_tilde": float(scan.gamma_tilde[idx]),
            "te": float(scan.te[idx]),
            "best_tau": int(scan.best_tau),
            "significant": bool(sig.significant),
        })
    return rows


def _cmd_sweep(args) -> int:
    epsilons = np.linspace(args.start, args.stop, args.points)
    if np.any(epsilons < 0) or np.any(epsilons > 1):
        raise InvalidInput("sweep range must stay inside [0, 1]")
    rows = run_ulam_sweep(
        epsilons, args.length, n_maps=args.n_maps,
        bins=args.bins if args.bins else 4,
        ell=args.ell if args.ell is not None else 1,
        m=args.m if args.m is not None else 1,
        tau_min=args.tau_min if args.tau_min is not None else 1,
        tau_max=args.tau_max if args.tau_max is not None else 20,
        n_surrogates=args.surrogates if args.surrogates is not None else 100,
        alpha=args.alpha if args.alpha is not None else 0.9,
        burn_in=args.burn_in,
        seed=args.seed if args.seed is not None else _env_seed())
    _write_csv(args.output,
               ["epsilon", "gamma_tilde", "te", "best_tau", "significant"],
               [[r["epsilon"], r["gamma_tilde"], r["te"], r["best_tau"],
                 r["significant"]] for r in rows])
    return 0


def _cmd_score(args) -> int:
    config = _resolve_pipeline_config(args)
    header, data = _read_csv(args.data)
    for col in (args.src, args.dst):
        if col not in header:
            raise InvalidInput(f"column {col!r} not in CSV header {header}")
    src_col = data[:, header.index(args.src)]
    dst_col = data[:, header.index(args.dst)]
    src = encode(src_col, fit_encoder(src_col, config.bins, config.strategy,
                                      config.normalization, config.threshold))
    dst = encode(dst_col, fit_encoder(dst_col, config.bins, config.strategy,
                                      config.normalization, config.threshold))
    scan = scan_delays(src, dst, config.ell, config.m_plus_1,
                       config.tau_range, score=config.score,
                       smoothing=config.smoothing, ba_tol=config.ba_tol)
    _write_csv(args.output, ["tau", "gamma_tilde", "te"],
               zip(scan.taus, scan.gamma_tilde, scan.te))
    print(f"best_tau={scan.best_tau}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causaltensors",
        description="Channel-tensor causal structure inference for time series")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate benchmark data")
    sim_sub = sim.add_subparsers(dest="system", required=True)

    ulam = sim_sub.add_parser("ulam", help="coupled quadratic-map lattice")
    ulam.add_argument("--epsilon", type=float, required=True)
    ulam.add_argument("--length", type=int, required=True)
    ulam.add_argument("--n-maps", type=int, default=2)
    ulam.add_argument("--burn-in", type=int, default=10_000)
    ulam.add_argument("--seed", type=int, default=None)
    ulam.add_argument("--output", required=True)
    ulam.set_defaults(func=_cmd_simulate_ulam, _errors="simulate")

    ou = sim_sub.add_parser("ou", help="four coupled noise-driven processes")
    ou.add_argument("--duration", type=float, required=True,
                    help="recorded time units (one sample per unit by default)")
    ou.add_argument("--dt", type=float, default=0.01)
    ou.add_argument("--stride", type=int, default=100)
    ou.add_argument("--burn-in", type=float, default=100.0)
    ou.add_argument("--noise", type=float, default=OU_BENCHMARK_NOISE)
    ou.add_argument("--seed", type=int, default=None)
    ou.add_argument("--output", required=True)
    ou.set_defaults(func=_cmd_simulate_ou, _errors="simulate")

    infer = sub.add_parser("infer", help="infer the causal hypergraph")
    infer.add_argument("data", help="CSV with one header row")
    infer.add_argument("--out-graph", default="graph.json")
    infer.add_argument("--out-report", default="report.json")
    infer.add_argument("--out-dot", default="graph.dot")
    _add_analysis_flags(infer)
    infer.set_defaults(func=_cmd_infer, _errors="analysis")

    sweep = sub.add_parser("sweep", help="coupling sweep on the map lattice")
    sweep.add_argument("--start", type=float, default=0.0)
    sweep.add_argument("--stop", type=float, default=1.0)
    sweep.add_argument("--points", type=int, default=51)
    sweep.add_argument("--length", type=int, default=100_000)
    sweep.add_argument("--n-maps", type=int, default=100)
    sweep.add_argument("--burn-in", type=int, default=200_000)
    sweep.add_argument("--output", required=True)
    _add_analysis_flags(sweep)
    sweep.set_defaults(func=_cmd_sweep, _errors="analysis")

    score = sub.add_parser("score", help="delay curve for one directed pair")
    score.add_argument("data")
    score.add_argument("--src", required=True)
    score.add_argument("--dst", required=True)
    score.add_argument("--output", required=True)
    _add_analysis_flags(score)
    score.set_defaults(func=_cmd_score, _errors="analysis")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    mode = getattr(args, "_errors", "analysis")
    try:
        return args.func(args)
    except (InvalidInput, ShapeError) as err:
        # For analysis commands a malformed data file is a data error, not
        # a config error; config mistakes are caught by validation below.
        if mode == "analysis" and "CSV" in str(err):
            print(f"error: {err}", file=sys.stderr)
            return EXIT_DATA
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateData, InsufficientData) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA if mode == "analysis" else EXIT_CONFIG
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL if mode == "analysis" else EXIT_DATA
    except CausalTensorsError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
