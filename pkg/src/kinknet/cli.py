"""Command line entry point: ``kinknet validate|simulate|kink``.

Exit codes: 0 ok, 1 validation failure, 2 integration blow-up, 3 usage error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analytic import KinkSpec, kink_energy, kink_u, kink_v, lorentz_factor
from .dynamics import CFLError
from .graph import (GraphFormatError, GraphValidationError, incidence_matrix,
                    load_graph, validate_graph)
from .io import ConfigError, SimulationBlowup, load_run, simulate

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def format_matrix(mat: np.ndarray) -> str:
    return "\n".join(" ".join(f"{x:2d}" for x in row) for row in mat)


def cmd_validate(args) -> int:
    g = load_graph(args.graph)
    problems = validate_graph(g)
    if problems:
        for p in problems:
            print(p)
        return EXIT_INVALID
    print("OK")
    if args.verbose:
        print(f"{len(g.vertices)} vertices, {len(g.edges)} edges")
        print("incidence matrix (rows: vertices " + " ".join(map(str, g.vertex_ids))
              + "; columns: edges " + " ".join(map(str, g.edge_ids)) + ")")
        print(format_matrix(incidence_matrix(g)))
        for vid, star in g.stars().items():
            # a = edge starts here, b = edge ends here; starts listed first
            labels = sorted((end != "start", eid) for eid, end in star.slots)
            ends = ", ".join(f"{'b' if is_end else 'a'}{eid}" for is_end, eid in labels)
            print(f"v{vid} = {{{ends}}}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    run = load_run(args.graph, args.config)
    try:
        result = simulate(run, out_dir=args.out)
    except SimulationBlowup as exc:
        print(f"error: {exc.cause}", file=sys.stderr)
        print(f"last good snapshot: {exc.last_snapshot}", file=sys.stderr)
        return EXIT_BLOWUP
    print(f"wrote {len(result.snapshots)} snapshots and {result.energy_file}")
    print(result.summary())
    return EXIT_OK


def cmd_kink(args) -> int:
    try:
        gamma = lorentz_factor(args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    k = KinkSpec(c=args.c, x0=args.x0, polarity=args.polarity)
    print(f"c = {args.c}")
    print(f"gamma = {gamma:.12g}")
    print(f"energy = {kink_energy(args.c):.12g}")
    print("x,u,v")
    for x in np.linspace(args.xmin, args.xmax, args.samples).tolist():
        print(f"{x!r},{kink_u(x, args.t, k)!r},{kink_v(x, args.t, k)!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kinknet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("validate", help="check a graph file")
    v.add_argument("graph")
    v.add_argument("-v", "--verbose", action="store_true",
                   help="also print the incidence matrix and vertex stars")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", help="run a simulation")
    s.add_argument("--graph", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None,
                   help="output directory (default: config output_dir, $KINKNET_OUT, ./kinknet_out)")
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("kink", help="print the analytic kink profile")
    k.add_argument("--c", type=float, required=True)
    k.add_argument("--samples", type=int, default=41)
    k.add_argument("--xmin", type=float, default=-10.0)
    k.add_argument("--xmax", type=float, default=10.0)
    k.add_argument("--x0", type=float, default=0.0)
    k.add_argument("--t", type=float, default=0.0)
    k.add_argument("--polarity", type=int, choices=(1, -1), default=1)
    k.set_defaults(func=cmd_kink)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphFormatError, GraphValidationError, ConfigError, CFLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
