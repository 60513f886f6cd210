"""Command-line front end: run, fit, report, print-default-config.

Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 degenerate data.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from coexsim import __version__
from coexsim.engine import read_samples_csv, run_monte_carlo, write_json, write_samples_csv
from coexsim.scenario import ConfigError, ScenarioConfig, dump_config, load_config, validate_config
from coexsim.stats import (
    DegenerateDataError,
    FitConfig,
    GaussianMixture,
    bic_sweep,
    curve_points,
    fit_gmm,
    histogram,
    summarize,
)

log = logging.getLogger("coexsim")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

FIELDS = ("sinr_db", "rate_bps")
POPULATIONS = ("all", "interfered", "uninterfered")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _utc_now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- run --------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    cfg = validate_config(cfg.replace(**overrides))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = _utc_now()
    log.info("running %d trials, seed %d", cfg.n_trials, cfg.seed)
    samples = run_monte_carlo(cfg, workers=args.workers)

    write_samples_csv(samples, out / "samples.csv")
    config_path = out / "config.toml"
    config_path.write_text(dump_config(cfg))
    summary = summarize(samples).to_dict()
    summary.update(n_trials=cfg.n_trials, seed=cfg.seed, config_digest=cfg.digest())
    write_json(summary, out / "summary.json")
    write_json({
        "config_path": str(args.config) if args.config else None,
        "run_config": "config.toml",
        "config_digest": cfg.digest(),
        "config_file_digest": _file_digest(config_path),
        "seed": cfg.seed,
        "n_trials": cfg.n_trials,
        "output_dir": str(out),
        "started_at": started,
        "finished_at": _utc_now(),
        "tool_version": __version__,
    }, out / "manifest.json")
    print(f"wrote {len(samples)} samples to {out / 'samples.csv'}")
    return EXIT_OK


# --- fit --------------------------------------------------------------------

def select_population(samples, field: str, population: str) -> np.ndarray:
    values = getattr(samples, field)
    if population == "interfered":
        return values[samples.interfered]
    if population == "uninterfered":
        return values[~samples.interfered]
    return values


def _fit_config(args, k: int) -> FitConfig:
    return FitConfig(k=k, max_iter=args.max_iter, tol=args.tol,
                     n_restarts=args.restarts, seed=args.fit_seed)


def cmd_fit(args) -> int:
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    samples = read_samples_csv(args.samples)
    x = select_population(samples, args.field, args.population)
    fit = _fit_config(args, args.k)
    if len(x) < 10 * fit.k:
        raise DegenerateDataError(
            f"too few rows for population '{args.population}': {len(x)} (< {10 * fit.k})"
        )
    model = fit_gmm(x, fit)

    out = Path(args.out) if args.out else (
        Path(args.samples).parent / f"fit_{args.field}_{args.population}_k{args.k}"
    )
    out.mkdir(parents=True, exist_ok=True)
    model.to_json(out / "gmm.json")
    hist = histogram(x, args.bin_width)
    hist.to_csv(out / "histogram.csv")
    lo, hi = hist.edges[0], hist.edges[-1]
    step = args.curve_step
    if step is None:
        # 0.1 dB for SINR; rates span gigabits, so use a fixed point count
        step = 0.1 if args.field == "sinr_db" else (hi - lo) / 1000
    xs, dens = curve_points(model, lo, hi, step=step)
    with open(out / "curve.csv", "w") as fh:
        fh.write("x,density\n")
        fh.writelines(f"{a:.10g},{b:.10g}\n" for a, b in zip(xs, dens))

    print(f"{args.field} / {args.population}: n={len(x)} k={model.k} "
          f"loglik={model.log_likelihood:.6g} iters={model.n_iter} converged={model.converged}")
    for w, m, v in zip(model.weights, model.means, model.variances):
        print(f"  weight {w:.4f}  mean {m:.4g}  std {np.sqrt(v):.4g}")
    if args.bic:
        for k, b in bic_sweep(x, range(1, 6), fit).items():
            print(f"  BIC k={k}: {b:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


# --- report -----------------------------------------------------------------

def _load_or_fit(run_dir: Path, samples, field, population, k) -> GaussianMixture:
    cached = run_dir / f"fit_{field}_{population}_k{k}" / "gmm.json"
    if cached.exists():
        return GaussianMixture.from_json(cached)
    return fit_gmm(select_population(samples, field, population), FitConfig(k=k))


def verify_manifest(run_dir: Path) -> dict:
    manifest = json.loads((run_dir / "manifest.json").read_text())
    cfg_file = run_dir / manifest["run_config"]
    if _file_digest(cfg_file) != manifest["config_file_digest"]:
        raise ConfigError([f"{cfg_file} was modified after the run (digest mismatch)"])
    cfg = load_config(cfg_file)
    if cfg.digest() != manifest["config_digest"]:
        raise ConfigError([f"{cfg_file} does not match the recorded config digest"])
    return manifest


def _pct(x) -> str:
    return "n/a" if x is None else f"{100 * x:.1f}%"


def _num(x, fmt="{:.2f}") -> str:
    return "n/a" if x is None else fmt.format(x)


def build_report(run_dir: Path) -> str:
    run_dir = Path(run_dir)
    for name in ("manifest.json", "summary.json", "samples.csv"):
        if not (run_dir / name).exists():
            raise FileNotFoundError(f"missing run artifact: {run_dir / name}")
    manifest = verify_manifest(run_dir)
    cfg = load_config(run_dir / manifest["run_config"])
    s = json.loads((run_dir / "summary.json").read_text())
    samples = read_samples_csv(run_dir / "samples.csv")

    lines = [
        f"run: {run_dir}  seed={manifest['seed']}  trials={manifest['n_trials']}  "
        f"digest={manifest['config_digest'][:12]}",
        f"samples: {s['n_samples']}  interfered fraction: {_pct(s['interfered_fraction'])}",
        "",
        f"{'':24}{'interfered':>14}{'uninterfered':>14}",
        f"{'mean SINR [dB]':24}{_num(s['sinr_mean_interfered']):>14}"
        f"{_num(s['sinr_mean_uninterfered']):>14}",
        f"{'median SINR [dB]':24}{_num(s['sinr_median_interfered']):>14}"
        f"{_num(s['sinr_median_uninterfered']):>14}",
        f"{'mean rate [Gbit/s]':24}{_num(_scale(s['rate_mean_interfered'])):>14}"
        f"{_num(_scale(s['rate_mean_uninterfered'])):>14}",
        "",
        f"SINR decrease (interfered vs not): {_pct(s['sinr_decrease'])}",
        f"rate decrease (interfered vs not): {_pct(s['rate_decrease'])}",
        "",
    ]
    fits = [("all", 3), ("interfered", 2)]
    lowest = None
    for population, k in fits:
        try:
            model = _load_or_fit(run_dir, samples, "sinr_db", population, k)
        except DegenerateDataError as exc:
            lines.append(f"SINR mixture, {population}, k={k}: not available ({exc})")
            continue
        lines.append(f"SINR mixture, {population} UEs, k={k}:")
        for w, m, v in zip(model.weights, model.means, model.variances):
            lines.append(f"  weight {100 * w:5.1f}%  mean {m:7.2f} dB  std {np.sqrt(v):6.2f} dB")
        if population == "all" and k >= 2:
            lowest = model.means[1] - model.means[0]
    if lowest is not None:
        lines.append("")
        lines.append(
            f"peak separation (two lowest SINR components): {lowest:.2f} dB "
            f"vs A_m = {cfg.a_m_db:g} dB (difference {lowest - cfg.a_m_db:+.2f} dB)"
        )
    return "\n".join(lines) + "\n"


def _scale(x):
    return None if x is None else x / 1e9


def cmd_report(args) -> int:
    sys.stdout.write(build_report(Path(args.run_dir)))
    return EXIT_OK


def cmd_print_default_config(args) -> int:
    sys.stdout.write(dump_config(ScenarioConfig()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coexsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a Monte Carlo campaign")
    r.add_argument("--config", help="TOML scenario file (defaults if omitted)")
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fit", help="fit a Gaussian mixture to a samples.csv column")
    f.add_argument("samples", help="path to samples.csv")
    f.add_argument("--field", choices=FIELDS, default="sinr_db")
    f.add_argument("--population", choices=POPULATIONS, default="all")
    f.add_argument("--k", type=int, default=3)
    f.add_argument("--restarts", type=int, default=5)
    f.add_argument("--tol", type=float, default=1e-8)
    f.add_argument("--max-iter", type=int, default=500)
    f.add_argument("--fit-seed", type=int, default=0)
    f.add_argument("--bin-width", type=float, default=None)
    f.add_argument("--curve-step", type=float, default=None,
                   help="grid step for curve.csv (default 0.1 dB, or range/1000 for rates)")
    f.add_argument("--bic", action="store_true", help="also print BIC for k = 1..5")
    f.add_argument("--out", help="output directory")
    f.set_defaults(func=cmd_fit)

    rep = sub.add_parser("report", help="print a summary of a run directory")
    rep.add_argument("run_dir")
    rep.set_defaults(func=cmd_report)

    d = sub.add_parser("print-default-config", help="emit the default scenario as TOML")
    d.set_defaults(func=cmd_print_default_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, KeyError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
