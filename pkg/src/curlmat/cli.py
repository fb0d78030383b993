"""Command-line entry point.

Exit codes: 0 on success, 1 on identity failure / tolerance breach /
invalid input data, 2 on usage errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import builders, evolve, identities, spectral
from .angular import clebsch_gordan

_BUILD_OPS = ("div", "grad", "curl", "curl-h", "curl-c", "cartesian-curl")


def _op_matrix(name: str, l: int):
    if name == "div":
        return builders.build_div(l)
    if name == "grad":
        return builders.build_grad(l)
    if name == "curl":
        return builders.build_curl_cg(l)
    if name == "curl-h":
        return builders.build_curl_hermitian(l)
    if name == "curl-c":
        return builders.build_curl_complex(l)
    if name == "cartesian-curl":
        return builders.build_cartesian_curls().curl
    raise ValueError(f"unknown operator {name!r}")


def _cmd_build(args) -> int:
    op = _op_matrix(args.op, args.l)
    if args.format == "text":
        print(op.to_text())
    elif args.format == "latex":
        print(op.to_latex())
    else:
        payload = {"op": args.op, "l": args.l, **op.to_json_dict()}
        print(json.dumps(payload, indent=2))
    return 0


def _cmd_cg(args) -> int:
    value = clebsch_gordan(args.l1, args.m1, args.l2, args.m2, args.l, args.m)
    print(f"exact: {value}")
    print(f"float: {value.to_complex().real!r}")
    return 0


_SUITES = ("core", "powers", "exp", "hermitian", "complex", "all")


def _cmd_verify(args) -> int:
    ops = identities.OperatorSet()
    suites: dict[str, list] = {}
    if args.suite in ("core", "all"):
        suites["core"] = identities.verify_core_identities(args.max_l, ops)
    if args.suite in ("powers", "all"):
        suites["powers"] = identities.verify_power_laws(args.max_n, ops)
    if args.suite in ("exp", "all"):
        suites["exp"] = [identities.verify_exponential(args.max_n, ops)]
    if args.suite in ("hermitian", "all"):
        suites["hermitian"] = identities.verify_hermitian_suite(args.max_l, ops)
    if args.suite in ("complex", "all"):
        suites["complex"] = identities.verify_complex_suite(args.max_l, ops)

    reports = [r for batch in suites.values() for r in batch]
    ok = identities.all_pass(reports)
    if args.report == "json":
        payload = {
            "suite": args.suite,
            "max_l": args.max_l,
            "max_n": args.max_n,
            "seed": args.seed,
            "all_pass": ok,
            "reports": [r.as_dict() for r in reports],
        }
        print(json.dumps(payload, indent=2))
    else:
        for name, batch in suites.items():
            for r in batch:
                rng = ",".join(str(v) for v in r.l_range)
                print(f"[{name}] {r.identity_id} ({rng}): {r.status}")
        print(f"total: {len(reports)} checks, all_pass={ok}")
    return 0 if ok else 1


def _cmd_apply(args) -> int:
    f = spectral.read_ctf(args.infile)
    l = args.l if args.l is not None else f.l
    op = _op_matrix(args.op, l)
    spectral.write_ctf(spectral.apply_operator(op, f), args.outfile)
    return 0


def _cmd_helmholtz(args) -> int:
    f = spectral.read_ctf(args.infile)
    perp, par = spectral.helmholtz(f)
    spectral.write_ctf(perp, f"{args.out_prefix}_perp.ctf")
    spectral.write_ctf(par, f"{args.out_prefix}_par.ctf")
    recon = (f - (perp + par)).norm() / f.norm() if f.norm() > 0 else 0.0
    print(f"div(perp) residual: {spectral.relative_divergence(perp):.3e}")
    print(f"curl_c(par) residual: {spectral.relative_complex_curl(par):.3e}")
    print(f"reconstruction residual: {recon:.3e}")
    return 0


def _parse_grid(args) -> spectral.GridSpec:
    n = args.grid
    return spectral.GridSpec((n, n, n), (args.box, args.box, args.box))


def _cmd_gen(args) -> int:
    grid = _parse_grid(args)
    if args.preset == "planewave":
        f = spectral.plane_wave(grid, args.l, args.m, (args.jx, args.jy, args.jz),
                                basis=args.basis, amplitude=args.amplitude)
    elif args.preset == "random-bandlimited":
        print(f"seed: {args.seed}", file=sys.stderr)
        f = spectral.random_bandlimited(grid, args.l, args.basis,
                                        kcut=args.kcut, seed=args.seed)
    else:  # example1
        u, v = spectral.example_rotation_fields(grid)
        f = u + v * 1j
    spectral.write_ctf(f, args.out)
    return 0


def _cmd_evolve(args) -> int:
    grid = _parse_grid(args)
    if args.init.startswith("planewave:"):
        try:
            m, jx, jy, jz = (int(v) for v in args.init.split(":", 1)[1].split(","))
        except ValueError:
            print("planewave init needs m,jx,jy,jz", file=sys.stderr)
            return 2
        state = evolve.plane_wave_state(grid, args.l, m, (jx, jy, jz), c=args.c)
    elif args.init == "random":
        print(f"seed: {args.seed}", file=sys.stderr)
        state = evolve.random_state(grid, args.l, c=args.c, seed=args.seed)
    else:
        print(f"unknown init {args.init!r}", file=sys.stderr)
        return 2

    dump_fn = None
    if args.dump_every:
        def dump_fn(s, step):
            spectral.write_ctf(s.te, f"{args.out_prefix}_te_{step:06d}.ctf")
            spectral.write_ctf(s.tb, f"{args.out_prefix}_tb_{step:06d}.ctf")

    if args.stepper == "spectral":
        final, logs = evolve.run_spectral(state, args.dt, args.steps,
                                          dump_every=args.dump_every,
                                          dump_fn=dump_fn)
    else:
        logs = [evolve.diagnostics(state)]
        for step in range(1, args.steps + 1):
            state = evolve.step_rk4(state, args.dt)
            logs.append(evolve.diagnostics(state))
            if args.dump_every and dump_fn and step % args.dump_every == 0:
                dump_fn(state, step)
        final = state

    if args.log:
        l = final.l
        with open(args.log, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "energy", "divE_residual", "divB_residual"]
                            + [f"band_m{m}" for m in range(-l, l + 1)])
            for d in logs:
                writer.writerow([d.t, d.energy, d.div_te, d.div_tb, *d.band_te])
    spectral.write_ctf(final.te, f"{args.out_prefix}_te_final.ctf")
    spectral.write_ctf(final.tb, f"{args.out_prefix}_tb_final.ctf")
    drift = abs(logs[-1].energy - logs[0].energy) / logs[0].energy if logs[0].energy else 0.0
    print(f"steps: {args.steps}  t: {final.t:.6g}  energy drift: {drift:.3e}")
    return 0


def _cmd_ledger(args) -> int:
    ledger = builders.conventions()
    if args.format == "json":
        print(json.dumps(ledger.as_dict(), indent=2))
    else:
        print(ledger.describe())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curlmat",
        description="Exact spherical-tensor operator matrices, identity "
                    "verification and spectral field tools.")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("build", help="print an operator matrix")
    p.add_argument("--op", required=True, choices=_BUILD_OPS)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--format", choices=("text", "json", "latex"), default="text")

    p = sub.add_parser("cg", help="print one Clebsch-Gordan coefficient")
    for flag in ("--l1", "--m1", "--l2", "--m2", "--l", "--m"):
        p.add_argument(flag, type=int, required=True)

    p = sub.add_parser("verify", help="run identity suites")
    p.add_argument("--suite", choices=_SUITES, default="all")
    p.add_argument("--max-l", type=int, default=4)
    p.add_argument("--max-n", type=int, default=3)
    p.add_argument("--report", choices=("text", "json"), default="text")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("apply", help="apply an operator to a .ctf field")
    p.add_argument("--op", required=True, choices=_BUILD_OPS)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)

    p = sub.add_parser("helmholtz", help="transverse/longitudinal split")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-prefix", required=True)

    p = sub.add_parser("gen", help="generate input fields")
    p.add_argument("--preset", required=True,
                   choices=("planewave", "random-bandlimited", "example1"))
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--basis", choices=("spherical", "cartesian"), default="cartesian")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--jx", type=int, default=1)
    p.add_argument("--jy", type=int, default=0)
    p.add_argument("--jz", type=int, default=0)
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--box", type=float, default=2 * np.pi)
    p.add_argument("--kcut", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evolve", help="evolve the paired free-field equations")
    p.add_argument("--l", type=int, choices=(1, 2), default=1)
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--box", type=float, default=2 * np.pi)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--stepper", choices=("spectral", "rk4"), default="spectral")
    p.add_argument("--init", default="planewave:1,1,0,0",
                   help="planewave:m,jx,jy,jz or random")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", default=None)
    p.add_argument("--dump-every", type=int, default=None)
    p.add_argument("--out-prefix", default="run")

    p = sub.add_parser("ledger", help="print selected conventions and errata")
    p.add_argument("--format", choices=("text", "json"), default="text")

    return parser


_DISPATCH = {
    "build": _cmd_build,
    "cg": _cmd_cg,
    "verify": _cmd_verify,
    "apply": _cmd_apply,
    "helmholtz": _cmd_helmholtz,
    "gen": _cmd_gen,
    "evolve": _cmd_evolve,
    "ledger": _cmd_ledger,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return _DISPATCH[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
