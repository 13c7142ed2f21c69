"""Command-line front-end: file-based, reproducible workflows.

Subcommands: ``spectrum | steady | sweep | simulate | fit | thresholds``.
A JSON run configuration supplies the device file, chain constants and
per-command settings; command-line flags override the file.  Every output
artifact embeds the resolved configuration and seed in its comment header
(or JSON body), and contains no timestamps, so identical inputs produce
byte-identical outputs.

Exit codes: 0 success; 2 usage or configuration problems; 3 physical
domain errors (flux range, degenerate flux, overcurrent, below threshold);
4 solver non-convergence; 5 insufficient or inconsistent data; 6 amplitude
divergence during integration; 7 malformed file payloads.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import calibration, circuit, dynamics, io, steady
from .config import load_device_config
from .errors import (
    BelowThresholdError,
    ConfigError,
    ConvergenceError,
    DegenerateFluxError,
    DivergenceError,
    EmptyTrajectoryError,
    FluxRangeError,
    FormatError,
    MissingCouplingError,
    NoSignalError,
    OvercurrentError,
    OverlappingRadiusError,
    PhaseDomainError,
    ResidualError,
    TriplerError,
)

ENV_CONFIG = "TRIPLER_CONFIG"

_EXIT_CODES = (
    (2, (ConfigError, MissingCouplingError)),
    (3, (DegenerateFluxError, FluxRangeError, OvercurrentError,
         BelowThresholdError, PhaseDomainError)),
    (4, (ConvergenceError, ResidualError)),
    (5, (NoSignalError, EmptyTrajectoryError, OverlappingRadiusError)),
    (6, (DivergenceError,)),
    (7, (FormatError,)),
)


def _exit_code(exc: TriplerError) -> int:
    for code, classes in _EXIT_CODES:
        if isinstance(exc, classes):
            return code
    return 1


class _Run:
    """Resolved run configuration: file values with flag overrides applied."""

    def __init__(self, args):
        path = args.config or os.environ.get(ENV_CONFIG)
        self.doc = {}
        self.config_path = path
        if path:
            try:
                self.doc = json.loads(Path(path).read_text(encoding="utf-8"))
            except FileNotFoundError:
                raise ConfigError(f"run configuration {path!r} not found")
            except json.JSONDecodeError as exc:
                raise ConfigError(f"run configuration {path!r}: {exc}")
        if args.out is not None:
            self.doc["out"] = args.out
        if args.seed is not None:
            self.doc["seed"] = args.seed
        self.threads = args.threads
        self.format = args.format

    @property
    def out_dir(self) -> Path:
        out = Path(self.doc.get("out", "."))
        out.mkdir(parents=True, exist_ok=True)
        return out

    @property
    def seed(self):
        return self.doc.get("seed")

    def section(self, name: str) -> dict:
        sec = self.doc.get(name)
        if not isinstance(sec, dict):
            raise ConfigError(f"run configuration lacks a {name!r} section")
        return sec

    def device(self) -> circuit.CircuitParams:
        dev = self.doc.get("device")
        if not dev:
            raise ConfigError("run configuration lacks a 'device' file path")
        base = Path(self.config_path).parent if self.config_path else Path(".")
        path = Path(dev) if os.path.isabs(dev) else base / dev
        return load_device_config(path)

    def chain(self) -> calibration.CalibrationChain:
        sec = self.section("chain")
        try:
            return calibration.CalibrationChain(
                gain_db=float(sec["gain_db"]),
                noise_floor_w=float(sec["noise_floor_w"]),
                att_db=sec.get("att_db"),
                x=sec.get("x"),
                scale07=float(sec.get("scale07", 0.7)),
            )
        except KeyError as exc:
            raise ConfigError(f"chain section missing {exc}")

    def meta(self, command: str) -> dict:
        return {"command": command, "config": self.doc, "seed": self.seed}


def _flux_axis(axis_spec) -> np.ndarray:
    try:
        lo, hi, n = axis_spec
        axis = np.linspace(float(lo), float(hi), int(n))
    except (TypeError, ValueError):
        raise ConfigError(f"expected a [lo, hi, n] axis, got {axis_spec!r}")
    if axis.size == 0:
        raise ConfigError("empty axis")
    return axis


def _b2_sq_from(sec, chain, params, flux) -> float:
    """Drive |B2|^2 from the config: direct, or generator power through X."""
    if "b2_sq" in sec:
        return float(sec["b2_sq"])
    if "pd_dbm" in sec:
        if chain is None or chain.x is None:
            raise ConfigError("drive given as power: the chain needs x")
        m1 = circuit.mode_profile(params, flux, 1)
        m2 = circuit.mode_profile(params, flux, 2)
        q2_ext = m2.omega / (2.0 * m2.gamma_ext)
        pd = float(calibration.dbm_to_watt(float(sec["pd_dbm"])))
        omega = m1.omega + 2.0 * math.pi * float(sec["delta1_hz"])
        from scipy.constants import hbar
        return pd * q2_ext / (3.0 * hbar * omega * chain.x)
    raise ConfigError("steady/simulate sections need b2_sq or pd_dbm")


def _kerr_meta(params) -> dict:
    m1 = circuit.mode_profile(params, 0.0, 1)
    return {
        "kerr_energy_convention": params.kerr_energy,
        "alpha1_rad_s_flux0": m1.alpha,
        "alpha1_over_2pi_hz_flux0": m1.alpha / (2.0 * math.pi),
    }


def cmd_spectrum(run: _Run) -> int:
    params = run.device()
    axis = _flux_axis(run.section("spectrum").get("flux", [0.0, 0.45, 10]))
    meta = run.meta("spectrum")
    meta.update(_kerr_meta(params))
    lines = [io._meta_lines(meta),
             "flux_frac,f1_hz,f2_hz,anharmonicity_hz,"
             "alpha1_rad_s,alpha2_rad_s,gamma1_rad_s,gamma2_rad_s\n"]
    for phi in axis:
        m1 = circuit.mode_profile(params, float(phi), 1)
        m2 = circuit.mode_profile(params, float(phi), 2)
        f1 = m1.omega / (2.0 * math.pi)
        f2 = m2.omega / (2.0 * math.pi)
        lines.append(",".join(repr(float(x)) for x in (
            phi, f1, f2, 3.0 * f1 - f2,
            m1.alpha, m2.alpha, m1.gamma, m2.gamma)) + "\n")
    out = run.out_dir / "spectrum.csv"
    io.atomic_write_text(out, "".join(lines))
    print(out)
    return 0


def _state_doc(st: steady.SteadyState) -> dict:
    return {
        "kind": st.kind,
        "branch": st.branch,
        "copy": st.copy,
        "r1_sq": st.r1_sq,
        "r2_sq": st.r2_sq,
        "theta_rad": st.theta,
        "phi1_rad": st.phi1,
        "phi2_rad": st.phi2,
        "stable": st.stable,
        "eigenvalues_alpha1": [[z.real, z.imag] for z in st.eigenvalues],
        "residual": st.residual,
    }


def cmd_steady(run: _Run) -> int:
    params = run.device()
    sec = run.section("steady")
    flux = float(sec.get("flux", 0.0))
    delta1 = 2.0 * math.pi * float(sec["delta1_hz"])
    chain = run.chain() if "chain" in run.doc else None
    b2_sq = _b2_sq_from(sec, chain, params, flux)
    point = circuit.device_point(params, flux, delta1, drive_b2=math.sqrt(b2_sq),
                                 drive_phase=float(sec.get("drive_phase", 0.0)))
    states = steady.solve_selfconsistent(point)
    if run.format == "csv":
        lines = [io._meta_lines(run.meta("steady") | _kerr_meta(params)),
                 "kind,branch,copy,r1_sq,r2_sq,theta_rad,phi1_rad,phi2_rad,"
                 "stable,max_re_lambda_alpha1\n"]
        for s in states:
            nums = ",".join(repr(float(x)) for x in (
                s.r1_sq, s.r2_sq, s.theta, s.phi1, s.phi2))
            lines.append(
                f"{s.kind},{s.branch},{s.copy},{nums},{int(s.stable)},"
                f"{float(max(z.real for z in s.eigenvalues))!r}\n")
        out = run.out_dir / "steady.csv"
        io.atomic_write_text(out, "".join(lines))
        print(out)
        return 0
    doc = {
        "meta": run.meta("steady") | _kerr_meta(params),
        "point": {
            "delta": point.delta, "Delta": point.Delta,
            "gamma1": point.gamma1, "gamma2": point.gamma2,
            "gamma2_ext": point.gamma2_ext, "beta": point.beta,
            "alpha1_rad_s": point.alpha1, "b2_sq": b2_sq,
        },
        "states": [_state_doc(s) for s in states],
    }
    out = run.out_dir / "steady.json"
    io.atomic_write_text(out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(out)
    return 0


def cmd_sweep(run: _Run) -> int:
    params = run.device()
    chain = run.chain()
    sec = run.section("sweep")
    flux = float(sec.get("flux", 0.0))
    d1 = 2.0 * math.pi * _flux_axis(sec["delta1_hz"])
    pd = calibration.dbm_to_watt(_flux_axis(sec["pd_dbm"]))
    rmap = calibration.region_map(params, flux, chain, d1, pd,
                                  threads=run.threads)
    meta = run.meta("sweep")
    lines = [io._meta_lines(meta), "delta1_hz,pd_dbm,label\n"]
    for i, dd in enumerate(rmap.delta1):
        for j, p in enumerate(rmap.pd_w):
            lines.append(f"{float(dd) / (2 * math.pi)!r},"
                         f"{float(calibration.watt_to_dbm(p))!r},"
                         f"{rmap.labels[i, j]}\n")
    out_csv = run.out_dir / "region_map.csv"
    io.atomic_write_text(out_csv, "".join(lines))
    boundary = [
        [dd / (2 * math.pi), float(calibration.watt_to_dbm(b))]
        for dd, b in zip(rmap.delta1, rmap.boundary_pd_w) if np.isfinite(b)
    ]
    out_json = run.out_dir / "boundary.json"
    io.atomic_write_text(out_json, json.dumps(
        {"meta": meta, "columns": ["delta1_hz", "pd_max_dbm"],
         "polyline": boundary}, indent=2, sort_keys=True) + "\n")
    print(out_csv)
    print(out_json)
    return 0


def cmd_simulate(run: _Run) -> int:
    params = run.device()
    sec = run.section("simulate")
    flux = float(sec.get("flux", 0.0))
    delta1 = 2.0 * math.pi * float(sec["delta1_hz"])
    chain = run.chain() if "chain" in run.doc else None
    b2_sq = _b2_sq_from(sec, chain, params, flux)
    point = circuit.device_point(params, flux, delta1, drive_b2=math.sqrt(b2_sq))
    system = dynamics.TwoModeSystem.from_point(point)
    init = sec.get("initial", [0.0, 0.0, 0.0, 0.0])
    a10 = complex(init[0], init[1])
    a20 = complex(init[2], init[3])
    noise = None
    if sec.get("noise_n_th"):
        noise = dynamics.NoiseConfig.thermal(system, float(sec["noise_n_th"]))
    traj = dynamics.integrate(
        system, (a10, a20), duration=float(sec["duration_s"]),
        dt=float(sec["dt_s"]), noise=noise, seed=run.seed,
        store_every=int(sec.get("store_every", 1)))
    out_bin = run.out_dir / "trajectory.trpl"
    io.write_trajectory(out_bin, traj)
    print(out_bin)
    meta = run.meta("simulate")
    for fs in sec.get("fs_hz", []):
        hist = dynamics.demodulate_histogram(traj, float(fs),
                                             bins=int(sec.get("bins", 101)))
        out_h = run.out_dir / f"histogram_fs{float(fs):.0f}.csv"
        io.write_histogram_csv(out_h, hist, meta=meta)
        print(out_h)
    return 0


def cmd_fit(run: _Run, files) -> int:
    params = run.device()
    chain = run.chain()
    if not files:
        raise NoSignalError("no linecut files given")
    linecuts = []
    for f in files:
        lc, _ = io.read_linecut_csv(f)
        linecuts.append(lc)
    result = calibration.fit_x(linecuts, params, chain)
    out = run.out_dir / "fit_report.json"
    io.write_fit_report(out, result, meta=run.meta("fit"))
    print(out)
    return 0


def cmd_thresholds(run: _Run) -> int:
    params = run.device()
    chain = run.chain()
    axis = _flux_axis(run.section("thresholds").get("flux", [0.0, 0.4, 17]))

    def solve(phi):
        return calibration.visible_threshold(params, float(phi), chain)

    if run.threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=run.threads) as pool:
            ths = list(pool.map(solve, axis))
    else:
        ths = [solve(phi) for phi in axis]
    lines = [io._meta_lines(run.meta("thresholds")),
             "flux_frac,delta1_threshold_hz\n"]
    for phi, th in zip(axis, ths):
        lines.append(f"{float(phi)!r},{float(th) / (2 * math.pi)!r}\n")
    out = run.out_dir / "thresholds.csv"
    io.atomic_write_text(out, "".join(lines))
    print(out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripler",
        description="Two-mode model of period-tripled oscillations in a "
                    "flux-tunable resonator")
    parser.add_argument("--config", help=f"run configuration JSON "
                        f"(default: ${ENV_CONFIG})")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="master RNG seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for grid sweeps")
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="preferred tabular output format")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "steady", "sweep", "simulate", "thresholds"):
        sub.add_parser(name)
    fit = sub.add_parser("fit")
    fit.add_argument("linecuts", nargs="*", help="linecut CSV files")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        run = _Run(args)
        if args.command == "spectrum":
            return cmd_spectrum(run)
        if args.command == "steady":
            return cmd_steady(run)
        if args.command == "sweep":
            return cmd_sweep(run)
        if args.command == "simulate":
            return cmd_simulate(run)
        if args.command == "fit":
            return cmd_fit(run, args.linecuts)
        if args.command == "thresholds":
            return cmd_thresholds(run)
        raise ConfigError(f"unknown command {args.command!r}")
    except TriplerError as exc:
        print(f"tripler {args.command}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except KeyError as exc:
        print(f"tripler {args.command}: missing configuration key {exc}",
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
