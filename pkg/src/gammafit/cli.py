"""Command line: solve, verify, spectrum, decompose.

Exit codes: 0 ok, 1 usage, 2 invalid input, 3 numerical verification failure.
"""
import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import GammafitError, NumericalError, StateMissing, ValidationError
from .fibers import family_fibers
from .solver import orthogonal_decompose, range_function, solve_optimal
from .spectra import eig_hermitian, label_lex
from .verify import identity_suite, solution_suite

EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="gammafit", description="Optimal Gamma-invariant subspaces on (Z_N)^d.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", required=True, help="problem config (JSON)")
        sp.add_argument("--data", required=True, help="dataset (JSON or CSV)")
        sp.add_argument("--eps-rank", type=float, help="relative rank cutoff")
        sp.add_argument("--tau-tie", type=float, help="relative eigenvalue tie threshold")
        sp.add_argument("--verify-tol", type=float, help="tolerance for identity checks")
        sp.add_argument("--seed", type=int, help="root seed (overrides the config)")
        return sp

    s = common(sub.add_parser("solve", help="optimal subspace and Parseval generators"))
    s.add_argument("--kappa", type=int, help="number of generators (overrides the config)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--jobs", type=int, default=1, help="parallel orbit solves")

    v = common(sub.add_parser("verify", help="run the identity suite"))
    v.add_argument("--kappa", type=int, help="also check a solve with this kappa")
    v.add_argument("--solution", help="directory written by solve, to be checked")

    c = common(sub.add_parser("spectrum", help="per-orbit Gramian eigenvalues as CSV"))
    c.add_argument("--out", required=True, help="CSV file")

    d = common(sub.add_parser("decompose", help="orthogonal single-generator decomposition"))
    d.add_argument("--out", required=True, help="output directory")
    return p


def _tolerances(args, cfg):
    tol = dict(cfg.tolerances)
    if args.eps_rank is not None:
        tol["rank"] = args.eps_rank
    if args.tau_tie is not None:
        tol["tie"] = args.tau_tie
    if args.verify_tol is not None:
        tol["verify"] = args.verify_tol
    for key, value in tol.items():
        if not value > 0:
            raise ValidationError(f"must be positive, got {value}", f"--{key}")
    return tol


def _load(args):
    cfg = io.parse_config(args.config)
    crystal = cfg.crystal()
    data = io.load_dataset(args.data, cfg)
    return cfg, crystal, data, _tolerances(args, cfg)


def _kappa(args, cfg, required):
    kappa = args.kappa if args.kappa is not None else cfg.kappa
    if kappa is None and required:
        raise ValidationError("no kappa given in the config or on the command line", "kappa")
    return kappa


def cmd_solve(args):
    cfg, crystal, data, tol = _load(args)
    kappa = _kappa(args, cfg, True)
    seed = args.seed if args.seed is not None else cfg.seed
    gens, report = solve_optimal(crystal, data, kappa, tol["rank"], tol["tie"], jobs=args.jobs,
                                 seed=seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "generators.json", {
        "N": cfg.N, "d": cfg.d, "kappa": kappa,
        "generators": io.signals_to_json(gens.signals)})
    io.write_json(out / "report.json", report.as_dict())
    print(f"kappa={kappa} achieved_error={report.achieved_error:.12g} "
          f"spectral_bound={report.spectral_bound:.12g} fixed_fiber_events="
          f"{len(report.diagnostics)}")
    return 0


def _print_checks(checks):
    failed = [c for c in checks if not c.passed]
    for c in checks:
        flag = "ok  " if c.passed else "FAIL"
        extra = f" ({c.where})" if c.where else ""
        print(f"{flag} {c.name:24s} {c.worst:.3e} <= {c.tol:.1e}{extra}")
    if failed:
        worst = max(failed, key=lambda c: c.worst / c.tol)
        print(f"worst offender: {worst.name} = {worst.worst:.3e}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def cmd_verify(args):
    cfg, crystal, data, tol = _load(args)
    if args.solution:
        sol = Path(args.solution)
        psis, _raw = io.load_generators(sol / "generators.json", cfg)
        reported = None
        if (sol / "report.json").exists():
            rep = io.read_json(sol / "report.json")
            reported = rep.get("achieved_error") if isinstance(rep, dict) else None
        checks = solution_suite(crystal, data, psis, reported, tol["verify"], tol["rank"])
    else:
        checks = identity_suite(crystal, data, _kappa(args, cfg, False), tol["verify"],
                                tol["rank"])
    return _print_checks(checks)


def cmd_spectrum(args):
    cfg, crystal, data, tol = _load(args)
    fib = family_fibers(crystal, data)
    G = crystal.group.order
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["orbit", "rep", "stabilizer_order", "i", "g", "sigma2"])
        for o, rec in enumerate(crystal.orbits):
            A = fib[:, rec.rep, :].T
            sp = label_lex(eig_hermitian(A.conj().T @ A, require_psd=True), len(data), G)
            for (i, g), val in zip(sp.labels, sp.values):
                w.writerow([o, rec.rep, len(rec.stabilizer), i, g, repr(float(val))])
    print(f"wrote {len(crystal.orbits)} orbits to {args.out}")
    return 0


def cmd_decompose(args):
    cfg, crystal, data, tol = _load(args)
    psis = orthogonal_decompose(crystal, data, tol["rank"])
    tables = [range_function(crystal, [p], tol["rank"], rotated=True) for p in psis]
    pairs = []
    for a in range(len(psis)):
        for b in range(a + 1, len(psis)):
            gap = max(float(np.linalg.norm(tables[a].bases[w].conj().T @ tables[b].bases[w], 2))
                      if tables[a].bases[w].size and tables[b].bases[w].size else 0.0
                      for w in range(crystal.n_fibers))
            pairs.append({"a": a, "b": b, "overlap": gap})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "generators.json", {
        "N": cfg.N, "d": cfg.d, "generators": io.signals_to_json(psis)})
    io.write_json(out / "orthogonality.json", {"pairs": pairs})
    print(f"{len(psis)} orthogonal generators")
    return 0


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "spectrum": cmd_spectrum,
            "decompose": cmd_decompose}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, StateMissing) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GammafitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
