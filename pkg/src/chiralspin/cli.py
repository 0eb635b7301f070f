"""Command-line driver: every command writes one CSV table.

    python -m chiralspin spectrum --geometry torus:3x4 --lambda-min 100 --lambda-max 100
    python -m chiralspin sweep --geometry ring:9 --lambda-min 0 --lambda-max 2 --lambda-step 0.05
    python -m chiralspin correlations --geometry torus:4x4 --lambda-min 100 --reference plaquette:5,6,10
    python -m chiralspin witness --geometry ladder-c:9 --lambda-min 10
    python -m chiralspin witness --state-file state.txt
    python -m chiralspin meanfield --geometry ladder-a:128 --lambda-min 0 --lambda-max 2

Options may also come from a ``key = value`` file given with ``--config``;
flags on the command line win.  Floats are written with 12 significant
digits.  A row whose computation failed carries the error in its
``status`` column and the exit code is 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from . import meanfield, observables, witness
from .eigensolver import ground_manifold
from .lattice import Geometry, LatticeError, parse_geometry

log = logging.getLogger("chiralspin")

JUMP_THRESHOLD = 0.05

SPECTRUM_COLUMNS = ["lambda", "e0", "energy_per_site", "degeneracy", "gap", "S", "Sz_list",
                    "momentum_list", "status"]
SWEEP_COLUMNS = ["lambda", "mean_chirality", "e0_per_site", "jump_lambda", "status"]
CORRELATION_COLUMNS = ["kind", "reference", "target", "distance", "value", "status"]
WITNESS_COLUMNS = ["source", "triple", "chi_raw", "chi_max", "e_x", "class", "status"]
MEANFIELD_COLUMNS = ["lambda", "alpha", "mf_energy_per_site", "lambda_c", "status"]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        s = format(x, ".12g")
        return "0" if s == "-0" else s
    return str(x)


def fmt_half(x: float) -> str:
    """Half-integers as ``1/2``, ``3/2``; integers plainly."""
    n = int(round(2 * x))
    return str(n // 2) if n % 2 == 0 else f"{n}/2"


def lambda_grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise ValueError("lambda-step must be positive")
    if lo > hi:
        raise ValueError("lambda-min must not exceed lambda-max")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 12) for i in range(n + 1)]


def parse_reference(text: str) -> tuple[str, tuple[int, ...]]:
    """``site:i``, ``bond:i-j`` or ``plaquette:i,j,k``."""
    try:
        kind, _, body = text.partition(":")
        kind = kind.strip().lower()
        if kind == "site":
            return kind, (int(body),)
        if kind == "bond":
            i, j = body.split("-")
            return kind, (int(i), int(j))
        if kind == "plaquette":
            i, j, k = body.split(",")
            return kind, (int(i), int(j), int(k))
    except ValueError:
        pass
    raise ValueError(f"bad reference {text!r}; use site:i, bond:i-j or plaquette:i,j,k")


def read_state_file(path: str) -> np.ndarray:
    """8 lines ``re im`` for a ket, or 64 for a row-major density matrix."""
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 're im', got {line!r}")
            vals.append(complex(float(parts[0]), float(parts[1])))
    if len(vals) == 8:
        return np.array(vals)
    if len(vals) == 64:
        return np.array(vals).reshape(8, 8)
    raise ValueError(f"{path}: expected 8 or 64 amplitudes, found {len(vals)}")


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _run_rows(fn: Callable, jobs: Sequence, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# row workers live at module level so a process pool can pickle them

def _spectrum_row(job) -> dict:
    tag, lam, k, tol, seed = job
    row = {"lambda": lam}
    try:
        spec = parse_geometry(tag)
        m = ground_manifold(spec, lam, k_per_sector=k, tol=tol, seed=seed)
        spins = observables.manifold_spins(m)
        row.update(e0=m.e0, energy_per_site=m.e0 / spec.n_sites, degeneracy=m.degeneracy,
                   gap=m.gap)
        row["S"] = ";".join(fmt_half(n / 2) for n in sorted({round(2 * s) for s, _ in spins}))
        row["Sz_list"] = ";".join(fmt_half(sz) for _, sz in spins)
        if spec.geometry is Geometry.TORUS:
            ks = observables.momentum_numbers(m)
            row["momentum_list"] = ";".join(f"{fmt(a)}/{fmt(b)}" for a, b in ks)
        row["status"] = "ok"
    except Exception as exc:  # recorded per row
        row["status"] = f"error: {exc}"
    return row


def _sweep_row(job) -> dict:
    tag, lam, k, tol, seed = job
    row = {"lambda": lam}
    try:
        spec = parse_geometry(tag)
        m = ground_manifold(spec, lam, k_per_sector=k, tol=tol, seed=seed)
        row.update(mean_chirality=observables.mean_chirality(m), e0_per_site=m.e0 / spec.n_sites,
                   status="ok")
    except Exception as exc:
        row["status"] = f"error: {exc}"
    return row


def jump_location(rows: list[dict], threshold: float = JUMP_THRESHOLD) -> Optional[float]:
    """First coupling whose mean chirality exceeds ``threshold``."""
    for r in rows:
        if r.get("status") == "ok" and r["mean_chirality"] > threshold:
            return r["lambda"]
    return None


def _ground_state(tag: str, lam: float, k: int, tol: float, seed: int):
    spec = parse_geometry(tag)
    m = ground_manifold(spec, lam, k_per_sector=k, tol=tol, seed=seed)
    return spec, observables.representative_state(m)


def cmd_spectrum(args) -> tuple[list[str], list[dict]]:
    parse_geometry(args.geometry)  # fail early on a bad tag
    jobs = [(args.geometry, lam, args.k, args.tol, args.seed)
            for lam in lambda_grid(args.lambda_min, args.lambda_max, args.lambda_step)]
    return SPECTRUM_COLUMNS, _run_rows(_spectrum_row, jobs, args.workers)


def cmd_sweep(args) -> tuple[list[str], list[dict]]:
    parse_geometry(args.geometry)  # fail early on a bad tag
    jobs = [(args.geometry, lam, args.k, args.tol, args.seed)
            for lam in lambda_grid(args.lambda_min, args.lambda_max, args.lambda_step)]
    rows = _run_rows(_sweep_row, jobs, args.workers)
    jump = jump_location(rows)
    for r in rows:
        r["jump_lambda"] = jump
    return SWEEP_COLUMNS, rows


def cmd_correlations(args) -> tuple[list[str], list[dict]]:
    if not args.reference:
        raise ValueError("correlations needs --reference")
    kind, ref = parse_reference(args.reference)
    spec, state = _ground_state(args.geometry, args.lambda_min, args.k, args.tol, args.seed)
    if any(not 0 <= s < spec.n_sites for s in ref):
        raise ValueError(f"reference {args.reference} outside the lattice")
    if kind == "site":
        cmap = observables.spin_correlation_map(state, spec, ref[0])
    elif kind == "bond":
        cmap = observables.dimer_correlation_map(state, spec, ref)
    else:
        cmap = observables.chiral_correlation_map(state, spec, ref)
    rows = []
    for target, dist, value in cmap.values:
        rows.append({"kind": cmap.kind.value, "reference": args.reference,
                     "target": "-".join(map(str, target)), "distance": dist, "value": value,
                     "status": "ok" if value is not None else "undefined"})
    return CORRELATION_COLUMNS, rows


def _witness_row(source: str, triple: str, rho, restarts: int, seed: int) -> dict:
    row = {"source": source, "triple": triple}
    try:
        res = witness.witness_ex(rho, restarts=restarts, seed=seed)
        row.update(chi_raw=res.chi_raw, chi_max=res.chi_max, e_x=res.e_x,
                   status="ok")
        row["class"] = res.entanglement_class.value
    except Exception as exc:
        row["status"] = f"error: {exc}"
    return row


def cmd_witness(args) -> tuple[list[str], list[dict]]:
    if args.state_file:
        rho = read_state_file(args.state_file)
        return WITNESS_COLUMNS, [_witness_row(args.state_file, "", rho, args.restarts, args.seed)]
    if not args.geometry:
        raise ValueError("witness needs --geometry or --state-file")
    spec, state = _ground_state(args.geometry, args.lambda_min, args.k, args.tol, args.seed)
    if args.reference:
        kind, ref = parse_reference(args.reference)
        if kind != "plaquette":
            raise ValueError("witness reference must be plaquette:i,j,k")
        triples = [ref]
    else:
        triples = [tuple(p[:3]) for p in spec.plaquettes]
    source = f"{args.geometry}@{fmt(args.lambda_min)}"
    rows = [_witness_row(source, ",".join(map(str, t)),
                         witness.reduced_density(state, t), args.restarts, args.seed)
            for t in triples]
    return WITNESS_COLUMNS, rows


def cmd_meanfield(args) -> tuple[list[str], list[dict]]:
    spec = parse_geometry(args.geometry or "ladder-a:128")
    if spec.geometry is not Geometry.LADDER_A:
        raise LatticeError("mean-field theory is implemented for the type-A ladder only")
    L = spec.n_sites // 2
    ed_sizes = [int(s) for s in str(args.ed_sizes).split(",") if s.strip()] if args.ed_sizes else []
    columns = list(MEANFIELD_COLUMNS[:-1]) + [f"ed_energy_per_site_{n}" for n in ed_sizes] + ["status"]
    lam_c = meanfield.transition_point()
    rows = []
    for lam in lambda_grid(args.lambda_min, args.lambda_max, args.lambda_step):
        row = {"lambda": lam, "lambda_c": lam_c}
        try:
            sol = meanfield.solve_self_consistent(lam, L)
            row.update(alpha=sol.alpha, mf_energy_per_site=sol.energy_per_site)
            for n in ed_sizes:
                m = ground_manifold(parse_geometry(f"ladder-a:{n}"), lam, k_per_sector=args.k,
                                    tol=args.tol, seed=args.seed)
                row[f"ed_energy_per_site_{n}"] = m.e0 / n
            row["status"] = "ok"
        except Exception as exc:
            row["status"] = f"error: {exc}"
        rows.append(row)
    return columns, rows


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "correlations": cmd_correlations,
    "witness": cmd_witness,
    "meanfield": cmd_meanfield,
}

DEFAULTS = dict(geometry=None, lambda_min=0.0, lambda_max=None, lambda_step=0.05, k=6,
                tol=1e-10, out=None, seed=0, workers=1, reference=None, state_file=None,
                restarts=50, ed_sizes=None, verbose=False)

_TYPES = dict(lambda_min=float, lambda_max=float, lambda_step=float, k=int, tol=float, seed=int,
              workers=int, restarts=int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--geometry", help="ladder-a:N, ladder-b:N, ladder-c:N, ring:N, torus:RxC "
                                           "(append :open to a ladder for open ends)")
    common.add_argument("--lambda-min", type=float, help="first coupling (default 0)")
    common.add_argument("--lambda-max", type=float, help="last coupling (default lambda-min)")
    common.add_argument("--lambda-step", type=float, help="grid step (default 0.05)")
    common.add_argument("--k", type=int, help="eigenpairs per sector (default 6)")
    common.add_argument("--tol", type=float, help="eigensolver residual tolerance (default 1e-10)")
    common.add_argument("--out", help="CSV path (default stdout)")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--workers", type=int, help="processes for the coupling grid (default 1)")
    common.add_argument("--reference", help="site:i, bond:i-j or plaquette:i,j,k")
    common.add_argument("-v", "--verbose", action="store_true", default=None)

    p = argparse.ArgumentParser(prog="chiralspin", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="ground energy, degeneracy, gap, quantum numbers")
    sub.add_parser("sweep", parents=[common], help="mean chirality across a coupling grid")
    sub.add_parser("correlations", parents=[common], help="spin, dimer or chiral correlation map")
    w = sub.add_parser("witness", parents=[common], help="chiral entanglement witness")
    w.add_argument("--state-file", help="8 lines (ket) or 64 lines (density) of 're im'")
    w.add_argument("--restarts", type=int, help="minimum optimizer starts (default 50)")
    mf = sub.add_parser("meanfield", parents=[common], help="type-A ladder mean-field energy")
    mf.add_argument("--ed-sizes", help="comma-separated even sizes for exact comparison columns")
    return p


def resolve(ns: argparse.Namespace) -> argparse.Namespace:
    """Merge defaults < config file < command-line flags."""
    merged = dict(DEFAULTS)
    if ns.config:
        for key, value in read_config(ns.config).items():
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            merged[key] = _TYPES.get(key, str)(value)
    for key, value in vars(ns).items():
        if value is not None and key in DEFAULTS:
            merged[key] = value
    if merged["lambda_max"] is None:
        merged["lambda_max"] = merged["lambda_min"]
    merged["command"] = ns.command
    if merged["lambda_step"] <= 0:
        raise ValueError("lambda-step must be positive")
    if merged["lambda_min"] > merged["lambda_max"]:
        raise ValueError("lambda-min must not exceed lambda-max")
    if merged["command"] != "meanfield" and merged["command"] != "witness" and not merged["geometry"]:
        raise ValueError(f"{ns.command} needs --geometry")
    return argparse.Namespace(**merged)


def write_csv(columns: list[str], rows: list[dict], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        args = resolve(ns)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        columns, rows = COMMANDS[args.command](args)
    except (ValueError, LatticeError, OSError) as exc:
        print(f"chiralspin {args.command}: {exc}", file=sys.stderr)
        return 2
    buf = io.StringIO()
    write_csv(columns, rows, buf)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    bad = [r for r in rows if r.get("status") not in ("ok", "undefined")]
    for r in bad:
        log.error("row %s: %s", r.get("lambda", r.get("triple", "")), r["status"])
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
