"""Command-line front end: ``hope solve | sweep | verify``.

Outputs written to ``--out``:

- ``efficiencies.csv``: one row per propagating reflected (medium ``u``) and
  transmitted (medium ``w``) mode.
- ``series.csv``: per-order H^s norm and successive ratio.
- ``sweep.csv`` (sweep only): one row per delta, re-summed from the stored orders,
  with per-delta efficiency tables under ``sweep/``.
- ``field_slice.json``: nodal E^L and eps_v on the requested plane.
- ``manifest.json``: config echo, numerics, version, timings, backend, schema.

Exit codes: 0 ok, 1 verification failure, 2 config error, 3 Wood anomaly /
near-singular mode, 4 divergent series, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .diagnostics import scattering_result
from .driver import HopeProblem, run_hope, taylor_sum
from .envelope import sample_envelope, slab_permittivity
from .errors import ConfigError, HopeError
from .spectral import barycentric_matrix, to_nodal

log = logging.getLogger("hope")

SCHEMA_VERSION = 1
EXIT_CODES = {"ok": 0, "verify_failed": 1, "config": 2, "shape": 2, "wood_anomaly": 3,
              "divergent_series": 4, "io": 5, "error": 1}

EFF_COLUMNS = ["p", "q", "medium", "gamma_re", "gamma_im",
               "amp_x_re", "amp_x_im", "amp_y_re", "amp_y_im", "amp_z_re", "amp_z_im",
               "efficiency"]


def fmt(x):
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


def parse_delta(text):
    """``VALUE`` or ``START:STEP:END`` (END included when hit to rounding)."""
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ConfigError(f"--delta expects VALUE or START:STEP:END, got {text!r}")
    start, step, end = (float(s) for s in parts)
    if step == 0 or (end - start) / step < 0:
        raise ConfigError(f"--delta range {text!r} is empty")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def version_string():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# ---------------------------------------------------------------------------
# writers


def write_efficiencies(path, result, table):
    amps, eff = result.amplitudes, result.efficiency
    lat = table.lateral
    rows = []
    for medium, amp, e, mask in (("u", amps.reflected, eff.reflected, eff.propagating_u),
                                 ("w", amps.transmitted, eff.transmitted, eff.propagating_w)):
        for i, p in enumerate(lat.p):
            for j, q in enumerate(lat.q):
                if not mask[i, j]:
                    continue
                g = table.gamma[medium][i, j]
                a = amp[:, i, j]
                rows.append([str(int(p)), str(int(q)), medium, fmt(g.real), fmt(g.imag),
                             fmt(a[0].real), fmt(a[0].imag), fmt(a[1].real), fmt(a[1].imag),
                             fmt(a[2].real), fmt(a[2].imag), fmt(e[i, j])])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EFF_COLUMNS)
        w.writerows(rows)


def write_series(path, series):
    ratios = series.ratios()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ell", f"norm_H{series.norm_index}", "ratio"])
        for ell, n in enumerate(series.norms):
            w.writerow([ell, fmt(n), "nan" if ell == 0 else fmt(ratios[ell - 1])])


def write_sweep(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta", "total_reflected", "total_transmitted", "energy_defect", "B_delta",
                    "tail_ratio"])
        for r in rows:
            w.writerow([fmt(r.delta), fmt(r.efficiency.total_reflected),
                        fmt(r.efficiency.total_transmitted), fmt(r.energy_defect),
                        fmt(r.series_report.b_delta), fmt(r.series_report.tail_ratio)])


def field_slice(E, problem, delta, plane):
    """Nodal E and eps_v on ``x=0``, ``y=0`` or ``z=0``."""
    lat, vert = problem.lateral, problem.vertical
    nodal = to_nodal(E, lat)  # (3, Nx, Ny, Nz)
    eps_v = slab_permittivity(problem.env, problem.config.eps_bar, delta)
    if plane == "y=0":
        f, e = nodal[:, :, 0, :], eps_v[:, 0, :]
        axes = {"x": lat.x, "z": vert.z}
    elif plane == "x=0":
        f, e = nodal[:, 0, :, :], eps_v[0, :, :]
        axes = {"y": lat.y, "z": vert.z}
    elif plane == "z=0":
        B = barycentric_matrix(vert.z / vert.h, np.array([0.0]))[0]
        f, e = nodal @ B, eps_v @ B
        axes = {"x": lat.x, "y": lat.y}
    else:
        raise ConfigError(f"unknown slice {plane!r}; use y=0, x=0 or z=0")
    out = {"plane": plane, "delta": float(delta), "axes": {k: v.tolist() for k, v in axes.items()}}
    for c, name in enumerate("xyz"):
        out[f"E{name}_re"] = f[c].real.tolist()
        out[f"E{name}_im"] = f[c].imag.tolist()
    out["eps_v"] = np.real(e).tolist()
    return out


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, allow_nan=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# orchestration


def _setup(args):
    cfg, num, env = load_config(args.config)
    updates = {}
    if args.order is not None:
        updates["L"] = args.order
    if args.dealias is not None:
        updates["dealias"] = args.dealias == "on"
    num = replace(num, **updates) if updates else num
    deltas = parse_delta(args.delta) if args.delta is not None else [cfg.delta]
    return cfg, num, env, deltas


def _check_deltas(problem, deltas):
    for d in deltas:
        sample_envelope(problem.envelope, problem.lateral, problem.vertical,
                        problem.config.eps_bar, d)


def _manifest(args, problem, timings, deltas):
    return {
        "schema_version": SCHEMA_VERSION,
        "version": version_string(),
        "command": args.command,
        "backend": args.backend,
        "threads": args.threads,
        "config": problem.config.as_dict(),
        "numerics": problem.num.as_dict(),
        "envelope": repr(problem.envelope),
        "deltas": [float(d) for d in deltas],
        "norm_index": args.norm_index,
        "timings_s": timings,
        "mode_counts": problem.table.counts(),
        "csv_columns": {"efficiencies": EFF_COLUMNS},
    }


def run_problem(args):
    """Shared solve/sweep pipeline; returns (problem, series, results, timings)."""
    timings = {}
    t = time.perf_counter()
    cfg, num, env, deltas = _setup(args)
    if args.command == "solve" and len(deltas) != 1:
        raise ConfigError("solve takes a single --delta; use sweep for ranges")
    cfg = cfg.with_delta(deltas[0])
    timings["config"] = time.perf_counter() - t

    t = time.perf_counter()
    problem = HopeProblem.build(cfg, num, env, backend=args.backend, threads=args.threads)
    _check_deltas(problem, deltas)
    timings["setup"] = time.perf_counter() - t

    t = time.perf_counter()
    series = run_hope(problem, norm_index=args.norm_index)
    timings["recursion"] = time.perf_counter() - t

    t = time.perf_counter()
    results = [scattering_result(series, problem, d) for d in deltas]
    for r in results:
        rep = r.series_report
        if rep is not None and not rep.within_radius:
            log.warning("delta = %g: fitted B*delta = %.3g >= 1, the series may not converge",
                        r.delta, rep.b_delta)
    timings["diagnostics"] = time.perf_counter() - t
    return problem, series, results, timings, deltas


def cmd_solve(args):
    problem, series, results, timings, deltas = run_problem(args)
    out = Path(args.out)
    t = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        res = results[0]
        write_efficiencies(out / "efficiencies.csv", res, problem.table)
        write_series(out / "series.csv", series)
        if args.command == "sweep":
            write_sweep(out / "sweep.csv", results)
            (out / "sweep").mkdir(exist_ok=True)
            for k, r in enumerate(results):
                write_efficiencies(out / "sweep" / f"efficiencies_{k:03d}.csv", r, problem.table)
        if args.slice:
            E = taylor_sum(series, res.delta)
            write_json(out / "field_slice.json", field_slice(E, problem, res.delta, args.slice))
        timings["output"] = time.perf_counter() - t
        write_json(out / "manifest.json", _manifest(args, problem, timings, deltas))
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc
    eff = res.efficiency
    print(f"delta={fmt(res.delta)} R={eff.total_reflected:.12g} T={eff.total_transmitted:.12g} "
          f"defect={eff.defect:.3e}")
    return 0


cmd_sweep = cmd_solve


class _IOFailure(HopeError):
    category = "io"


def cmd_verify(args):
    from .verification import run_suite

    ok = True
    for name, passed, detail in run_suite(args.suite):
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return 0 if ok else EXIT_CODES["verify_failed"]


def build_parser():
    parser = argparse.ArgumentParser(prog="hope", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep"):
        sp = sub.add_parser(name, help=f"{name} a scattering configuration")
        sp.add_argument("--config", required=True, help="TOML or JSON config file")
        sp.add_argument("--order", type=int, help="series truncation order L")
        sp.add_argument("--delta", help="VALUE or START:STEP:END")
        sp.add_argument("--out", default="results", help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--backend", choices=["collocation", "greens"], default="collocation")
        sp.add_argument("--slice", choices=["y=0", "x=0", "z=0"], default="y=0")
        sp.add_argument("--dealias", choices=["on", "off"])
        sp.add_argument("--norm-index", type=int, default=2, help="Sobolev index s of the norms")
    vp = sub.add_parser("verify", help="run the oracle suites")
    vp.add_argument("--suite", choices=["oracle", "backends", "transfer"], default="oracle")
    return parser


def main(argv=None):
    level = getattr(logging, os.environ.get("HOPE_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except HopeError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES["io"]


if __name__ == "__main__":
    sys.exit(main())
