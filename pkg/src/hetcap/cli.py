"""Command-line interface: ``hetcap <command> [options]``.

Commands: ``capacity``, ``encoding``, ``entropy``, ``verify``, ``ba``, ``mc``
and ``sweep``.  Files always carry nats; bits appear only in the one-line
summaries written to stderr.  Exit status: 0 success, 1 failed check,
2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .capacity import capacity, central_threshold, classify, energy_threshold
from .measurement import (NoiseCovariance, build_model, min_wehrl_bound, outcome_grid,
                          wehrl_entropy)
from .oracle import (ba_rate, ba_refinement, gaussian_constellation, mc_rate,
                     quadrature_rate)
from .states import random_state, squeezed_coherent, squeezed_fock
from .verify import (PROFILES, get_profile, position_grid, prop2_sweep,
                     run_battery)

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
CURVE_COLUMNS = ["E", "case", "C_closed_form", "C_BA", "gap", "lattice"]


class InputError(ValueError):
    pass


# -- argument parsing --------------------------------------------------------------------

def _add_noise(p):
    p.add_argument("--bq", type=float, required=True, help="position noise power beta_q")
    p.add_argument("--bp", type=float, required=True, help="momentum noise power beta_p")


def _add_common(p, formats=("json",), default="json"):
    p.add_argument("--output", "-o", help="write here instead of stdout")
    p.add_argument("--format", choices=formats, default=default)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hetcap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="closed-form capacity and optimal encoding")
    _add_noise(p)
    p.add_argument("--E", type=float, required=True, help="mean energy (>= 1/2)")
    _add_common(p, ("json", "csv"))

    p = sub.add_parser("encoding", help="optimal encoding, regime and thresholds")
    _add_noise(p)
    p.add_argument("--E", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("entropy", help="generalized Wehrl entropy of a test state")
    _add_noise(p)
    p.add_argument("--state", choices=["coherent", "fock", "random"], default="coherent")
    p.add_argument("--delta", type=float, help="squeeze (default sqrt(bq/bp)/2)")
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--n", type=int, default=1, help="Fock index")
    p.add_argument("--dim", type=int, default=8, help="random-state dimension")
    p.add_argument("--profile", choices=sorted(PROFILES))
    _add_common(p)

    p = sub.add_parser("verify", help="run the check battery (JSON lines)")
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--family", choices=["prop2"],
                   help="run a single family at one point instead of the battery")
    p.add_argument("--bq", type=float)
    p.add_argument("--bp", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--states", type=int, default=20)
    _add_common(p)

    p = sub.add_parser("ba", help="Blahut-Arimoto rate on a quantile lattice")
    _add_noise(p)
    p.add_argument("--E", type=float, required=True)
    p.add_argument("--lattice", type=int, nargs="+", default=[31],
                   help="letters per axis; several values share one outcome partition")
    _add_common(p, ("csv", "json"), "csv")

    p = sub.add_parser("mc", help="Monte Carlo rate of the discretized optimal encoding")
    _add_noise(p)
    p.add_argument("--E", type=float, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--lattice", type=int, default=31)
    _add_common(p)

    p = sub.add_parser("sweep", help="capacity curve over an energy range")
    _add_noise(p)
    p.add_argument("--E-range", type=float, nargs=3, required=True,
                   metavar=("START", "STOP", "STEP"))
    p.add_argument("--lattice", type=int, default=15,
                   help="BA letters per axis; 0 skips the BA column")
    p.add_argument("--workers", type=int, default=1)
    _add_common(p, ("csv", "json"), "csv")
    return ap


# -- helpers -----------------------------------------------------------------------------

def _noise(args) -> NoiseCovariance:
    if args.bq is None or args.bp is None:
        raise InputError("--bq and --bp are required")
    return NoiseCovariance(args.bq, args.bp)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}


def _envelope(args, result) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": args.command,
            "config": _config(args), "result": result}


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _dump_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v))
                    for k, v in r.items()})
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _encoding_dict(enc) -> dict:
    return {"case": enc.case, "delta": enc.delta, "gamma_q": enc.gamma_q,
            "gamma_p": enc.gamma_p, "alpha_q": enc.alpha.alpha_q,
            "alpha_p": enc.alpha.alpha_p}


# -- commands ----------------------------------------------------------------------------

def cmd_capacity(args) -> int:
    noise = _noise(args)
    res = capacity(noise, args.E)
    out = {"case": res.case, "value": res.value, "unit": "nats", "E": res.E,
           "encoding": _encoding_dict(res.encoding)}
    if args.format == "csv":
        row = {"E": res.E, "case": res.case, "value": res.value,
               **{k: v for k, v in out["encoding"].items() if k != "case"}}
        _emit(args, _dump_csv([row], list(row)))
    else:
        _emit(args, _dump_json(_envelope(args, out)))
    _say(f"case {res.case}: C = {res.value:.6f} nats = {res.bits:.6f} bits")
    return EXIT_OK


def cmd_encoding(args) -> int:
    noise = _noise(args)
    res = capacity(noise, args.E)
    out = {"encoding": _encoding_dict(res.encoding),
           "classify": classify(res.encoding.alpha, noise),
           "threshold_central": central_threshold(noise),
           "threshold_L": energy_threshold(noise.beta_p, noise.beta_q),
           "threshold_R": energy_threshold(noise.beta_q, noise.beta_p),
           "mean_energy": res.encoding.energy}
    _emit(args, _dump_json(_envelope(args, out)))
    _say(f"case {res.case}: delta = {res.encoding.delta:.6g}")
    return EXIT_OK


def cmd_entropy(args) -> int:
    noise = _noise(args)
    prof = get_profile(args.profile)
    delta = noise.minimizer_delta if args.delta is None else args.delta
    if delta <= 0:
        raise InputError("--delta must be positive")
    n_max = {"coherent": 0, "fock": args.n, "random": args.dim - 1}[args.state]
    grid = position_grid(delta, n_max, max(abs(args.x), abs(args.y)), prof.state_points)
    if args.state == "coherent":
        psi = squeezed_coherent(delta, args.x, args.y, grid)
    elif args.state == "fock":
        psi = squeezed_fock(args.n, delta, grid)
    else:
        psi = random_state(args.seed, args.dim, delta, grid)
    h = wehrl_entropy(build_model(noise), psi, outcome_grid(noise, psi, prof.outcome_points))
    bound = min_wehrl_bound(noise)
    out = {"entropy": h, "bound": bound, "excess": h - bound, "unit": "nats"}
    _emit(args, _dump_json(_envelope(args, out)))
    _say(f"h = {h:.6f} nats, bound {bound:.6f}, excess {h - bound:.3e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    prof = get_profile(args.profile)
    if args.family == "prop2":
        noise = _noise(args)
        if args.delta is None:
            raise InputError("--family prop2 needs --delta")
        reports = [("prop2", r) for r in prop2_sweep([(noise, args.delta)], args.states,
                                                     args.seed, prof)]
    else:
        reports = list(run_battery(prof, args.seed))
    lines = []
    summary: dict = {}
    failed = []
    for fam, r in reports:
        d = {"family": fam, **r.to_dict()}
        lines.append(json.dumps(d, sort_keys=True))
        s = summary.setdefault(fam, {"checks": 0, "failed": 0, "min_slack": math.inf})
        s["checks"] += 1
        s["failed"] += not r.passed
        margin = r.slack if r.kind == "inequality" else -abs(r.slack)
        s["min_slack"] = min(s["min_slack"], margin)
        if not r.passed:
            failed.append(f"{fam}:{r.name} {json.dumps(r.params, sort_keys=True)}")
    _emit(args, "\n".join(lines) + "\n")
    for fam, s in summary.items():
        _say(f"{fam}: {s['checks']} checks, {s['failed']} failed, "
             f"min slack {s['min_slack']:.3e}")
    for f in failed:
        _say(f"FAILED {f}")
    _say(f"{len(reports)} checks, profile {prof.name}, "
         f"{'all passed' if not failed else f'{len(failed)} failed'}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_ba(args) -> int:
    noise = _noise(args)
    if any(k < 1 for k in args.lattice):
        raise InputError("--lattice values must be positive")
    cap = capacity(noise, args.E)
    lattices = sorted(args.lattice)
    results = ba_refinement(noise, args.E, lattices) if len(lattices) > 1 \
        else [ba_rate(noise, args.E, lattices[0])]
    rows = []
    for k, r in zip(lattices, results):
        rows.append({"E": float(args.E), "case": cap.case, "C_closed_form": cap.value,
                     "C_BA": r.mutual_information, "gap": cap.value - r.mutual_information,
                     "lattice": k, "mean_energy": r.mean_energy,
                     "lagrange_multiplier": r.lagrange_multiplier,
                     "iterations": r.iterations, "converged": r.converged,
                     "monotone": r.monotone})
    if args.format == "csv":
        _emit(args, _dump_csv(rows, list(rows[0])))
    else:
        _emit(args, _dump_json(_envelope(args, rows)))
    for r in rows:
        _say(f"lattice {r['lattice']}: BA {r['C_BA']:.6f}, closed form "
             f"{r['C_closed_form']:.6f}, gap {r['gap']:.2e}")
    ok = all(r["monotone"] and r["C_BA"] <= r["C_closed_form"] + 1e-6 for r in rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_mc(args) -> int:
    noise = _noise(args)
    if args.samples < 1000:
        raise InputError("--samples must be at least 1000")
    cap = capacity(noise, args.E)
    con = gaussian_constellation(cap.encoding, args.lattice)
    est, se = mc_rate(con, noise, args.samples, args.seed)
    quad = quadrature_rate(con, noise)
    out = {"estimate": est, "std_error": se, "quadrature": quad,
           "closed_form": cap.value, "z": (est - quad) / se if se > 0 else 0.0,
           "letters": len(con.prior), "unit": "nats"}
    _emit(args, _dump_json(_envelope(args, out)))
    _say(f"MC {est:.6f} +- {se:.2e} nats, quadrature {quad:.6f}")
    return EXIT_OK


def sweep_energies(start: float, stop: float, step: float, noise=None) -> list[float]:
    """Energy grid ``start..stop`` plus the regime-change energy when it falls inside."""
    if step <= 0 or stop < start:
        raise InputError("--E-range needs START <= STOP and STEP > 0")
    n = int(math.floor((stop - start) / step + 1e-9))
    es = [start + i * step for i in range(n + 1)]
    if noise is not None:
        thr = central_threshold(noise)
        if start < thr < stop and not any(abs(e - thr) < 1e-12 for e in es):
            es.append(thr)
    return sorted(es)


def _curve_row(noise, E, lattice):
    cap = capacity(noise, E)
    row = {"E": E, "case": cap.case, "C_closed_form": cap.value, "C_BA": None,
           "gap": None, "lattice": lattice}
    if lattice > 0:
        r = ba_rate(noise, E, lattice)
        row["C_BA"] = r.mutual_information
        row["gap"] = cap.value - r.mutual_information
    return row


def cmd_sweep(args) -> int:
    noise = _noise(args)
    es = sweep_energies(*args.E_range, noise=noise)
    if es[0] < 0.5:
        raise InputError("energies must be at least 1/2")
    if args.lattice < 0 or args.workers < 1:
        raise InputError("--lattice must be >= 0 and --workers >= 1")
    with ThreadPoolExecutor(max_workers=args.workers) as ex:
        rows = list(ex.map(lambda e: _curve_row(noise, e, args.lattice), es))
    rows.sort(key=lambda r: r["E"])
    if args.format == "csv":
        _emit(args, _dump_csv(rows, CURVE_COLUMNS))
    else:
        _emit(args, _dump_json(_envelope(args, rows)))
    cases = "".join(r["case"] for r in rows)
    _say(f"{len(rows)} energies, cases {cases}")
    return EXIT_OK


COMMANDS = {"capacity": cmd_capacity, "encoding": cmd_encoding, "entropy": cmd_entropy,
            "verify": cmd_verify, "ba": cmd_ba, "mc": cmd_mc, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        # InputError and module precondition failures alike
        print(f"hetcap {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
