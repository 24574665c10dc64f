"""Command-line driver: ``orowan [--config FILE] [--out DIR] <subcommand> [flags]``.

Exit status is 0 on success, 1 when a computation fails and 2 for an invalid
configuration. Output files are written only after every stage of the
subcommand has succeeded, so a failed run leaves no partial artifacts (the
layer/corrector cache excepted).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import cell as cell_mod
from .config import ConfigError, RunConfig, parse_config
from .corrector import assemble_corrector, solve_corrector
from .hull import HullParams, claim1_reference_sums, hull_value, sample_points
from .layer import assemble_layer, solve_layer
from .particles import integrate, lattice_mean_velocity, lattice_state, particle_rhs
from .potential import get_potential

OUTPUT_ENV = "OROWAN_OUTPUT_DIR"
VERSION = "0.1.0"

# subcommand flag -> config key
FLAGS = {
    "layer": {"half_width": "layer.half_width", "count": "layer.count", "tol": "layer.tol"},
    "corrector": {"L": "corrector.L"},
    "hull": {"delta": "hull.delta", "p0": "hull.p0", "L": "hull.L", "points": "hull.points"},
    "cell": {"p": "cell.p", "L": "cell.L", "horizon": "cell.horizon"},
    "orowan": {"p0": "cell.p0", "L0": "cell.L0", "deltas": "cell.deltas", "workers": "cell.workers"},
    "particles": {"N": "particles.count", "spacing": "particles.spacing", "L0": "particles.L0",
                  "c0": "particles.c0", "T": "particles.T", "dt": "particles.dt",
                  "wrap": "particles.wrap", "images": "particles.images"},
    "verify": {},
}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# cached intermediate solutions


def _cache_dir(out: Path) -> Path:
    return out / "cache"


def _write_arrays(path: Path, meta: dict, header, columns):
    lines = [f"# {k} = {json.dumps(v)}" for k, v in sorted(meta.items())]
    body = _csv_text(header, zip(*columns))
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n" + body)
    tmp.replace(path)


def _read_arrays(path: Path):
    meta, rows = {}, []
    lines = path.read_text().splitlines()
    for line in lines:
        if line.startswith("# "):
            k, v = line[2:].split(" = ", 1)
            meta[k] = json.loads(v)
    body = [ln for ln in lines if not ln.startswith("#")]
    data = np.array([[float(x) for x in ln.split(",")] for ln in body[1:]])
    return meta, data


def load_or_solve_layer(cfg: RunConfig, out: Path, log=None):
    key = cfg.digest("layer")
    path = _cache_dir(out) / f"layer-{key}.csv"
    pot = get_potential(cfg.potential)
    if path.exists():
        if log:
            log(f"layer: reusing cache {path.name}")
    else:
        ly = cfg.layer
        layer = solve_layer(pot, ly.half_width, ly.count, ly.tol)
        _write_arrays(path, {"potential": cfg.potential, "key": key,
                             "residual_history": list(layer.residual_history)},
                      ["x", "u"], [layer.xs, layer.u])
    # fresh and cached runs both rebuild from the file, so downstream output is identical
    meta, data = _read_arrays(path)
    return assemble_layer(pot, data[:, 0], data[:, 1], meta["residual_history"]), key


def load_or_solve_corrector(cfg: RunConfig, layer, layer_key: str, L: float, out: Path, log=None):
    key = hashlib.sha256(f"{layer_key}|{L!r}|{cfg.corrector.tol!r}".encode()).hexdigest()[:16]
    path = _cache_dir(out) / f"corrector-{key}.csv"
    if path.exists():
        if log:
            log(f"corrector: reusing cache {path.name}")
    else:
        sol = solve_corrector(layer, get_potential(cfg.potential), L, cfg.corrector.tol)
        _write_arrays(path, {"layer_key": layer_key, "L": L, "residual": sol.residual,
                             "condition": sol.condition}, ["x", "psi"], [sol.xs, sol.psi])
    meta, data = _read_arrays(path)
    return assemble_corrector(layer, L, data[:, 1], meta["residual"], meta["condition"])


# ---------------------------------------------------------------------------
# subcommands: each returns {filename: text} and summary lines


def run_layer(cfg, out, log):
    layer, _ = load_or_solve_layer(cfg, out, log)
    csv_text = _csv_text(["x", "phi", "phi1", "phi2", "phi3"],
                         zip(layer.xs, layer.phi, layer.phi1, layer.phi2, layer.phi3))
    summary = [f"potential = {cfg.potential}", f"c0 = {_fmt(layer.c0)}", f"K0 = {_fmt(layer.K0)}",
               f"K1 = {_fmt(layer.K1)}", f"residual = {_fmt(layer.residual)}"]
    return {"layer.csv": csv_text}, summary


def run_corrector(cfg, out, log):
    layer, key = load_or_solve_layer(cfg, out, log)
    sol = load_or_solve_corrector(cfg, layer, key, cfg.corrector.L, out, log)
    csv_text = _csv_text(["x", "psi", "psi1", "psi2"], zip(sol.xs, sol.psi, sol.psi1, sol.psi2))
    summary = [f"L = {_fmt(sol.L)}", f"c = {_fmt(sol.c)}", f"K2 = {_fmt(sol.K2)}",
               f"K3 = {_fmt(sol.K3)}", f"residual = {_fmt(sol.residual)}", f"gauge = {sol.gauge}"]
    return {"corrector.csv": csv_text}, summary


def run_hull(cfg, out, log):
    h = cfg.hull
    layer, key = load_or_solve_layer(cfg, out, log)
    cor = load_or_solve_corrector(cfg, layer, key, h.L, out, log)
    params = HullParams(h.delta, h.p0, h.L, h.n, layer, cor, get_potential(cfg.potential))
    rows = []
    for x in sample_points(params.eps, h.points):
        ev = hull_value(params, x, h.tol)
        rows.append((ev.x, ev.h, ev.deviation, ev.nl))
    sup = max(abs(r[3]) for r in rows)
    summary = [f"delta = {_fmt(h.delta)}", f"lambda_bar = {_fmt(params.lambda_bar)}",
               f"sup_residual = {_fmt(sup)}", f"C = {_fmt(sup / h.delta**2)}",
               f"sup_deviation = {_fmt(max(abs(r[2]) for r in rows))}"]
    return {"hull.csv": _csv_text(["x", "h", "h_minus_x", "nl_residual"], rows)}, summary


def run_cell(cfg, out, log):
    c = cfg.cell
    run = cell_mod.CellProblemConfig.for_density(c.p, c.L, c.points_per_unit, c.dt_factor, c.horizon,
                                                 c.burn_in, samples=c.samples)
    traj = cell_mod.evolve_cell(run, get_potential(cfg.potential))
    est = cell_mod.estimate_lambda(traj)
    files = {"cell.csv": _csv_text(["tau", "mean_w", "sup_w"],
                                   zip(traj.times, traj.means, traj.sup_norms))}
    if cfg.emit_plot_data:
        files["cell_profiles.csv"] = _csv_text(
            ["y"] + [f"w_tau_{_fmt(t)}" for t in traj.snapshot_times],
            zip(run.grid.nodes(), *traj.snapshots))
    summary = [f"p = {_fmt(c.p)}", f"L = {_fmt(c.L)}", f"lambda = {_fmt(est.lam)}",
               f"stderr = {_fmt(est.slope_fit_stderr)}", f"converged = {_fmt(est.converged)}"]
    return files, summary


def run_orowan(cfg, out, log):
    c = cfg.cell
    layer, _ = load_or_solve_layer(cfg, out, log)
    settings = cell_mod.ScanSettings(c.points_per_unit, c.dt_factor, c.drift_periods, c.burn_in,
                                     c.samples)
    rows = cell_mod.orowan_scan(c.p0, c.L0, c.deltas, get_potential(cfg.potential), layer.c0,
                                settings, c.workers)
    text = _csv_text(cell_mod.OROWAN_HEADER.split(","), (r.csv_fields() for r in rows))
    summary = [f"c0 = {_fmt(layer.c0)}"]
    for r in rows:
        summary.append(f"delta = {_fmt(r.delta)}: rel_error = {_fmt(r.rel_error)}"
                       + (f" ({r.error})" if r.error else ""))
    failed = [r for r in rows if r.error]
    return {"orowan.csv": text}, summary, bool(failed)


def run_particles(cfg, out, log):
    pt = cfg.particles
    c0 = pt.c0
    if c0 is None:
        c0 = load_or_solve_layer(cfg, out, log)[0].c0
    state = lattice_state(pt.count, pt.spacing, c0, pt.L0, pt.wrap, pt.images)
    traj = integrate(state, pt.dt, pt.T)
    text = _csv_text(["t"] + [f"x_{i + 1}" for i in range(pt.count)],
                     (np.concatenate([[t], x]) for t, x in zip(traj.times, traj.positions)))
    summary = [f"c0 = {_fmt(c0)}", f"mean_velocity = {_fmt(lattice_mean_velocity(traj))}",
               f"target = {_fmt(-c0 * pt.L0)}"]
    return {"particles.csv": text}, summary


def verify_checks(cfg, out, log):
    """Quick property checks; each row is (name, value, tolerance, passed)."""
    from .fractional import Grid1D, GridField, LevyQuadratureConfig, half_laplacian_quadrature
    from .fractional import half_laplacian_spectral

    rows = []
    lv = cfg.levy
    qcfg = LevyQuadratureConfig(lv.r, lv.R, lv.nodes_per_decade, lv.inner_decades)

    grid = Grid1D(2.0 * np.pi, 64)
    f = GridField(grid, np.cos(grid.nodes()))
    spec = half_laplacian_spectral(f).values
    quad = np.array([half_laplacian_quadrature(np.cos, -np.sin(x), x, qcfg, period=2 * np.pi)
                     for x in grid.nodes()[::8]])
    err = float(np.max(np.abs(quad - spec[::8])))
    rows.append(("spectral_vs_quadrature_cos", err, 1e-6, err <= 1e-6))

    xs = np.linspace(-5, 5, 11)
    q = np.array([half_laplacian_quadrature(np.arctan, 1 / (1 + x * x), x, qcfg) for x in xs])
    err = float(np.max(np.abs(q + xs / (1 + xs**2))))
    rows.append(("arctan_oracle", err, 1e-4, err <= 1e-4))

    layer, key = load_or_solve_layer(cfg, out, log)
    mono = float(np.min(layer.phi1))
    rows.append(("layer_monotone_min_phi1", mono, 0.0, mono > 0))
    rows.append(("layer_phi0", abs(float(layer.evaluate(0.0)) - 0.5), 1e-12,
                 abs(float(layer.evaluate(0.0)) - 0.5) <= 1e-12))
    if cfg.potential == "standard":
        band = np.abs(layer.xs) <= 20
        err = float(np.max(np.abs(layer.phi[band] - 0.5 - np.arctan(layer.xs[band]) / np.pi)))
        rows.append(("layer_arctan_oracle", err, 1e-3, err <= 1e-3))
        rel = abs(layer.c0 / (2 * np.pi) - 1)
        rows.append(("c0_equals_2pi", rel, 1e-2, rel <= 1e-2))

    cor0 = solve_corrector(layer, get_potential(cfg.potential), 0.0)
    m = float(np.max(np.abs(cor0.psi)))
    rows.append(("corrector_L0_zero", m, 1e-12, m <= 1e-12))

    lim = claim1_reference_sums(0.5, 10).S1_limit
    rows.append(("lattice_sum_telescoping", abs(lim + 2), 1e-10, abs(lim + 2) <= 1e-10))

    st = lattice_state(32, 1.0, 2 * np.pi, 1.0)
    dev = float(np.max(np.abs(particle_rhs(st) + 2 * np.pi)))
    rows.append(("wrapped_lattice_velocity", dev, 1e-6, dev <= 1e-6))

    text = _csv_text(["check", "value", "tolerance", "passed"], rows)
    summary = [f"{name}: {'pass' if ok else 'FAIL'}" for name, _, _, ok in rows]
    return {"verify.csv": text}, summary, not all(r[3] for r in rows)


RUNNERS = {"layer": run_layer, "corrector": run_corrector, "hull": run_hull, "cell": run_cell,
           "orowan": run_orowan, "particles": run_particles, "verify": verify_checks}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orowan", description="Layer, hull and cell-problem experiments.")
    ap.add_argument("--config", help="configuration file (sectioned key = value)")
    ap.add_argument("--out", help=f"output directory (overrides config and ${OUTPUT_ENV})")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override any config key, e.g. --set levy.r=0.2")
    ap.add_argument("--potential", dest="flag_potential", metavar="LABEL", help="sets potential")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, flags in FLAGS.items():
        sp = sub.add_parser(name)
        for flag, key in flags.items():
            sp.add_argument(f"--{flag}", dest=f"flag_{flag}", metavar="V", help=f"sets {key}")
    return ap


def _overrides(args) -> dict:
    over = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        over[k.strip()] = v.strip()
    for flag, key in FLAGS[args.command].items():
        v = getattr(args, f"flag_{flag}")
        if v is not None:
            over[key] = v
    if args.flag_potential is not None:
        over["potential"] = args.flag_potential
    return over


def run_experiment(cfg: RunConfig, command: str, out: Path, log=None) -> int:
    """Run one subcommand and write its artifacts; returns the exit status."""
    log = log or (lambda msg: print(msg, file=sys.stderr))
    try:
        result = RUNNERS[command](cfg, out, log)
    except ConfigError as exc:
        log(f"{command}: configuration error: {exc}")
        return 2
    except Exception as exc:  # any numerical failure maps to exit status 1
        log(f"{command}: failed in stage '{command}': {type(exc).__name__}: {exc}")
        return 1
    files, summary = result[0], result[1]
    failed = len(result) > 2 and result[2]
    files = dict(files)
    files["summary.txt"] = "\n".join([f"command = {command}"] + summary) + "\n"
    files["config.txt"] = cfg.canonical_text()
    manifest = {
        "command": command,
        "version": VERSION,
        "config_digest": cfg.digest(),
        "config": cfg.as_dict(),
        "files": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(files.items())},
    }
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True, default=repr) + "\n"
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    for line in summary:
        print(line)
    return 1 if failed else 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = parse_config(text, _overrides(args))
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or os.environ.get(OUTPUT_ENV) or cfg.output_dir)
    return run_experiment(cfg, args.command, out)


if __name__ == "__main__":
    sys.exit(main())
