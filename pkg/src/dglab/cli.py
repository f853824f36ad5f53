"""Command-line front end: wave-number sweeps, lambda scans, and vortex runs.

Three subcommands (also installed as standalone executables):

* ``vn-sweep``        dispersion/dissipation table for one configuration
* ``vn-lambda-scan``  mode-set dissipation structure along lambda
* ``tgv``             Taylor-Green vortex run with diagnostics and spectra

Every run writes a plain-text manifest with the canonical configuration,
its hash, timestamps, and the produced files.  A config file (INI, one
section per subcommand) can pre-set any flag; explicit flags win.

Exit codes: 0 success, 2 invalid arguments, 3 eigensolver failure,
4 positivity abort (partial outputs are kept).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, basis, diagnostics, dgsem3d, vn1d
from .physics3d import GasModel

EXIT_BAD_ARGS = 2
EXIT_EIGEN_FAILURE = 3
EXIT_POSITIVITY = 4


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def config_hash(config: dict) -> str:
    """Deterministic hash of a canonicalized config dict."""
    lines = sorted(f"{k}={config[k]!r}" for k in config)
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def write_manifest(path: Path, command: str, config: dict, outputs: list,
                   started: str) -> None:
    with open(path, "w") as fh:
        fh.write("# dglab run manifest\n")
        fh.write(f"version = {__version__}\n")
        fh.write(f"command = {command}\n")
        fh.write(f"config_hash = {config_hash(config)}\n")
        fh.write(f"started_utc = {started}\n")
        fh.write(f"finished_utc = {_utc_now()}\n")
        for out in outputs:
            fh.write(f"output = {out}\n")
        fh.write("[config]\n")
        for k in sorted(config):
            fh.write(f"{k} = {config[k]!r}\n")


def _apply_config_file(parser: argparse.ArgumentParser, args: list,
                       section: str) -> list:
    """Peel --config from argv and turn the file section into defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(args)
    if known.config:
        ini = configparser.ConfigParser()
        read = ini.read(known.config)
        if not read:
            parser.error(f"config file {known.config!r} not found")
        if ini.has_section(section):
            defaults = {k.replace("-", "_"): v for k, v in ini.items(section)}
            parser.set_defaults(**defaults)
    return rest


def _kernel_from_args(degree: int, kernel: str, power, cutoff):
    if kernel == "power":
        if power is None:
            raise ValueError("power kernel needs --svv-p")
        return basis.svv_kernel(degree, basis.POWER, power=float(power))
    if cutoff is None:
        raise ValueError("exponential kernel needs --svv-cutoff")
    return basis.svv_kernel(degree, basis.EXPONENTIAL, cutoff=int(cutoff))


# --------------------------------------------------------------- vn-sweep

def _vn_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vn-sweep",
        description="Plane-wave dispersion/dissipation sweep of the 1D "
                    "advection-diffusion DG operator.")
    p.add_argument("--config", help="INI file with a [vn-sweep] section")
    p.add_argument("--N", type=int, required=False, default=None,
                   help="polynomial degree")
    p.add_argument("--family", choices=list(basis.NODE_FAMILIES),
                   default=basis.GAUSS)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0,
                   help="interface dissipation parameter")
    visc = p.add_mutually_exclusive_group()
    visc.add_argument("--pe", type=float, default=None, help="Peclet number")
    visc.add_argument("--inviscid", action="store_true")
    p.add_argument("--svv-mu", type=float, default=None,
                   help="filtered-viscosity amplitude")
    p.add_argument("--svv-kernel", choices=[basis.POWER, basis.EXPONENTIAL],
                   default=basis.POWER)
    p.add_argument("--svv-p", type=float, default=None, help="kernel power")
    p.add_argument("--svv-cutoff", type=int, default=None,
                   help="exponential kernel cut-off mode")
    p.add_argument("--kpoints", type=int, default=256)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--deterministic", action="store_true", default=True)
    p.add_argument("--out", default=".", help="output directory")
    return p


def _vn_config(ns: argparse.Namespace) -> vn1d.VnConfig:
    if ns.N is None:
        raise ValueError("--N is required")
    svv = None
    if ns.svv_mu is not None:
        kern = _kernel_from_args(int(ns.N), ns.svv_kernel, ns.svv_p,
                                 ns.svv_cutoff)
        svv = vn1d.VnSvv(mu=float(ns.svv_mu), kernel=kern)
    peclet = None if (ns.inviscid or ns.pe in (None, "")) else float(ns.pe)
    return vn1d.VnConfig(degree=int(ns.N), family=ns.family,
                         lam=float(ns.lam), peclet=peclet, svv=svv)


def cmd_vn_sweep(ns: argparse.Namespace) -> int:
    started = _utc_now()
    try:
        cfg = _vn_config(ns)
    except (ValueError, basis.BasisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    grid = vn1d.default_khat_grid(int(ns.kpoints))
    try:
        sweep = _parallel_sweep(cfg, grid, int(ns.threads))
    except vn1d.VnEigenError as exc:
        print(f"eigensolver failure at kh={exc.kh:.6g}: {exc}", file=sys.stderr)
        return EXIT_EIGEN_FAILURE
    if sweep.failures:
        for kh, msg in sweep.failures:
            print(f"eigensolver failure at kh={kh:.6g}: {msg}", file=sys.stderr)
        return EXIT_EIGEN_FAILURE

    config = _namespace_config(ns, ["N", "family", "lam", "pe", "inviscid",
                                    "svv_mu", "svv_kernel", "svv_p",
                                    "svv_cutoff", "kpoints"])
    tag = config_hash(config)[:8]
    outdir = Path(ns.out)
    outdir.mkdir(parents=True, exist_ok=True)
    sweep_path = outdir / f"vn_sweep_{tag}.csv"
    vn1d.write_sweep_csv(sweep_path, sweep)
    manifest = outdir / f"manifest_{tag}.txt"
    write_manifest(manifest, "vn-sweep", config, [sweep_path.name], started)
    print(f"wrote {sweep_path}")
    return 0


def _parallel_sweep(cfg: vn1d.VnConfig, grid: np.ndarray,
                    threads: int) -> vn1d.SweepResult:
    """Sweep with the eigen-evaluations fanned out over k chunks.

    Each chunk is a pure function of (cfg, k); results are re-assembled
    in grid order before the sequential mode-tracking pass, so output is
    independent of the worker count.
    """
    if threads <= 1 or grid.size < 64:
        return vn1d.dispersion_dissipation_sweep(cfg, grid)

    def batcher(cfg_b, khs):
        chunks = np.array_split(np.arange(khs.size), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda idx: vn1d._decompose_batch(cfg_b, khs[idx]), chunks))
        omega = np.concatenate([p[0] for p in parts])
        vecs = np.concatenate([p[1] for p in parts])
        amps = np.concatenate([p[2] for p in parts])
        failures = [f for p in parts for f in p[3]]
        return omega, vecs, amps, failures

    return vn1d.dispersion_dissipation_sweep(cfg, grid, batcher=batcher)


def _namespace_config(ns: argparse.Namespace, keys: list) -> dict:
    return {k: getattr(ns, k) for k in keys}


def main_vn_sweep(argv=None) -> int:
    parser = _vn_parser()
    rest = _apply_config_file(parser, list(sys.argv[1:] if argv is None else argv),
                              "vn-sweep")
    ns = parser.parse_args(rest)
    return cmd_vn_sweep(ns)


# ---------------------------------------------------------- vn-lambda-scan

def _lambda_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vn-lambda-scan",
        description="Mode-set maximum-dissipation structure along the "
                    "interface dissipation parameter.")
    p.add_argument("--config", help="INI file with a [vn-lambda-scan] section")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--family", choices=list(basis.NODE_FAMILIES),
                   default=basis.GAUSS_LOBATTO)
    p.add_argument("--lambda-min", dest="lambda_min", type=float, default=0.0)
    p.add_argument("--lambda-max", dest="lambda_max", type=float, default=2.0)
    p.add_argument("--lambda-steps", dest="lambda_steps", type=int, default=100)
    p.add_argument("--kpoints", type=int, default=256)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=".")
    return p


def cmd_vn_lambda_scan(ns: argparse.Namespace) -> int:
    started = _utc_now()
    if ns.N is None:
        print("error: --N is required", file=sys.stderr)
        return EXIT_BAD_ARGS
    if ns.lambda_min < 0 or ns.lambda_max < ns.lambda_min:
        print("error: invalid lambda range", file=sys.stderr)
        return EXIT_BAD_ARGS
    cfg = vn1d.VnConfig(degree=int(ns.N), family=ns.family)
    lams = np.linspace(float(ns.lambda_min), float(ns.lambda_max),
                       int(ns.lambda_steps))
    grid = vn1d.default_khat_grid(int(ns.kpoints))
    try:
        if int(ns.threads) > 1:
            points = _parallel_lambda_points(cfg, lams, grid, int(ns.threads))
            scan = vn1d.LambdaScan(points=points,
                                   events=_events_from_points(points))
        else:
            scan = vn1d.max_dissipation_vs_lambda(cfg, lams, grid)
    except vn1d.VnEigenError as exc:
        print(f"eigensolver failure at kh={exc.kh:.6g}: {exc}", file=sys.stderr)
        return EXIT_EIGEN_FAILURE

    config = _namespace_config(ns, ["N", "family", "lambda_min", "lambda_max",
                                    "lambda_steps", "kpoints"])
    tag = config_hash(config)[:8]
    outdir = Path(ns.out)
    outdir.mkdir(parents=True, exist_ok=True)
    scan_path = outdir / f"lambda_scan_{tag}.csv"
    with open(scan_path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["lambda", "group_index", "group_max_im_omega_hat",
                      "group_size", "bounded_max", "ambiguous"])
        for pt in scan.points:
            for gi, (gm, gs) in enumerate(zip(pt.group_maxima, pt.group_sizes)):
                out.writerow([f"{pt.lam:.17g}", gi, f"{gm:.17g}", int(gs),
                              f"{pt.bounded_max:.17g}", int(pt.ambiguous)])
    events_path = outdir / f"lambda_events_{tag}.csv"
    with open(events_path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["lambda", "kind"])
        for lam, kind in scan.events:
            out.writerow([f"{lam:.17g}", kind])
    manifest = outdir / f"manifest_{tag}.txt"
    write_manifest(manifest, "vn-lambda-scan", config,
                   [scan_path.name, events_path.name], started)
    print(f"wrote {scan_path}")
    for lam, kind in scan.events:
        print(f"event: {kind} at lambda = {lam:.4g}")
    return 0


def _parallel_lambda_points(cfg, lams, grid, threads):
    def point(lam):
        branch = vn1d._branch_max_dissipation(cfg, float(lam), grid)
        gm, gs, amb = vn1d._cluster(branch)
        return vn1d.LambdaScanPoint(lam=float(lam), branch_maxima=branch,
                                    group_maxima=gm, group_sizes=gs,
                                    ambiguous=amb)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(point, lams))


def _events_from_points(points):
    events = []
    prev = None
    for pt in points:
        defined = pt.branch_maxima[-1] > 1e-12
        if prev is not None and defined:
            if pt.n_groups < prev.n_groups:
                events.append((0.5 * (prev.lam + pt.lam), "merge"))
            elif pt.n_groups > prev.n_groups:
                events.append((0.5 * (prev.lam + pt.lam), "split"))
        prev = pt if defined else None
    return events


def main_vn_lambda_scan(argv=None) -> int:
    parser = _lambda_parser()
    rest = _apply_config_file(parser, list(sys.argv[1:] if argv is None else argv),
                              "vn-lambda-scan")
    ns = parser.parse_args(rest)
    return cmd_vn_lambda_scan(ns)


# --------------------------------------------------------------------- tgv

def _tgv_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tgv",
        description="Taylor-Green vortex run on a periodic Cartesian box.")
    p.add_argument("--config", help="INI file with a [tgv] section")
    p.add_argument("--E", type=int, default=None, help="elements per direction")
    p.add_argument("--N", type=int, default=None, help="polynomial degree")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    visc = p.add_mutually_exclusive_group()
    visc.add_argument("--re", type=float, default=None, help="Reynolds number")
    visc.add_argument("--inviscid", action="store_true")
    p.add_argument("--model",
                   choices=["none", "smagorinsky", "svv-const",
                            "svv-smagorinsky"],
                   default="none", help="added dissipation model")
    p.add_argument("--svv-p", type=float, default=None)
    p.add_argument("--svv-mu", type=float, default=None)
    p.add_argument("--mach", type=float, default=0.1)
    p.add_argument("--tend", type=float, default=None)
    p.add_argument("--snapshots", default="",
                   help="comma-separated spectrum snapshot times")
    p.add_argument("--cfl", type=float, default=0.4)
    p.add_argument("--diag-interval", dest="diag_interval", type=float,
                   default=0.05)
    p.add_argument("--grid-res", dest="grid_res", type=int, default=None,
                   help="uniform sampling resolution for spectra")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--deterministic", dest="deterministic",
                   action="store_true", default=True)
    p.add_argument("--fast-reduction", dest="deterministic",
                   action="store_false",
                   help="allow unordered reductions (no effect on results "
                        "in this single-process build)")
    p.add_argument("--out", default=".")
    return p


def _tgv_solver_config(ns: argparse.Namespace) -> dgsem3d.SolverConfig:
    if ns.E is None or ns.N is None or ns.tend is None:
        raise ValueError("--E, --N and --tend are required")
    reynolds = None if (ns.inviscid or ns.re in (None, "")) else float(ns.re)
    gas = GasModel(mach=float(ns.mach), reynolds=reynolds)
    model = ns.model
    svv = None
    degree = int(ns.N)
    if model in ("svv-const", "svv-smagorinsky"):
        if ns.svv_p is None:
            raise ValueError(f"model {model} needs --svv-p")
        kernel = basis.svv_kernel(degree, basis.POWER, power=float(ns.svv_p))
        if model == "svv-const":
            if ns.svv_mu is None:
                raise ValueError("model svv-const needs --svv-mu")
            svv = dgsem3d.SvvModel(kernel=kernel, mu_source="constant",
                                   mu=float(ns.svv_mu))
        else:
            if reynolds is not None:
                raise ValueError(
                    "svv-smagorinsky replaces physical viscosity; "
                    "use --inviscid")
            svv = dgsem3d.SvvModel(kernel=kernel, mu_source="smagorinsky")
    if model == "smagorinsky":
        viscosity_model = "smagorinsky"
    elif reynolds is not None:
        viscosity_model = "constant"
    else:
        viscosity_model = "none"
    snapshots = tuple(float(s) for s in str(ns.snapshots).split(",") if s)
    return dgsem3d.SolverConfig(
        degree=degree, elements=int(ns.E), gas=gas, lam=float(ns.lam),
        viscosity_model=viscosity_model, svv=svv, cfl=float(ns.cfl),
        t_end=float(ns.tend), snapshot_times=snapshots,
        diagnostics_interval=float(ns.diag_interval),
        deterministic=bool(ns.deterministic))


def cmd_tgv(ns: argparse.Namespace) -> int:
    started = _utc_now()
    try:
        cfg = _tgv_solver_config(ns)
    except (ValueError, basis.BasisError, dgsem3d.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS

    config = _namespace_config(ns, ["E", "N", "lam", "re", "inviscid", "model",
                                    "svv_p", "svv_mu", "mach", "tend",
                                    "snapshots", "cfl", "diag_interval",
                                    "grid_res", "deterministic"])
    tag = config_hash(config)[:8]
    outdir = Path(ns.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []

    def emit(result, completed: bool):
        series = diagnostics.series_from_run(result)
        diag_path = outdir / f"diagnostics_{tag}.csv"
        diagnostics.write_series_csv(diag_path, series)
        outputs.append(diag_path.name)
        for t, snap in sorted(result.snapshots.items()):
            spectrum = diagnostics.energy_spectrum(
                snap, cfg.gas, ns.grid_res and int(ns.grid_res))
            spath = outdir / f"spectrum_{tag}_t{t:g}.csv"
            diagnostics.write_spectrum_csv(spath, spectrum)
            outputs.append(spath.name)
        manifest = outdir / f"manifest_{tag}.txt"
        write_manifest(manifest, "tgv", config, outputs, started)
        print(f"wrote {diag_path}" + ("" if completed else " (partial)"))

    try:
        result = dgsem3d.run(cfg, diagnostics.tgv_initial_condition)
    except dgsem3d.PositivityError as exc:
        print(f"positivity abort: {exc}", file=sys.stderr)
        if exc.result is not None and exc.result.times.size >= 3:
            emit(exc.result, completed=False)
        return EXIT_POSITIVITY
    emit(result, completed=True)
    return 0


def main_tgv(argv=None) -> int:
    parser = _tgv_parser()
    rest = _apply_config_file(parser, list(sys.argv[1:] if argv is None else argv),
                              "tgv")
    ns = parser.parse_args(rest)
    return cmd_tgv(ns)


# -------------------------------------------------------------- dispatcher

def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = argparse.ArgumentParser(
        prog="dglab",
        description=__doc__.splitlines()[0] if __doc__ else "")
    parser.add_argument("command",
                        choices=["vn-sweep", "vn-lambda-scan", "tgv"])
    if not argv:
        parser.print_help()
        return EXIT_BAD_ARGS
    command, rest = argv[0], argv[1:]
    if command == "vn-sweep":
        return main_vn_sweep(rest)
    if command == "vn-lambda-scan":
        return main_vn_lambda_scan(rest)
    if command == "tgv":
        return main_tgv(rest)
    parser.parse_args([command])
    return EXIT_BAD_ARGS


if __name__ == "__main__":
    sys.exit(main())
