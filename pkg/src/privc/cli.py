"""Command-line driver: secure runs, reference runs, erasure, property checks."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .erasure import erase_program
from .errors import ObliviousFault, PrivcError, RuntimeFault
from .field import FieldParams
from .interp import Simulator
from .lang import parse, pretty
from .vanilla import VanillaInterp
from .verify import (FAIL, PASS, SKIPPED, check_confluence, check_correctness,
                     check_noninterference, check_protocol_axioms)

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_FAULT = 2
EXIT_USAGE = 64

ROUND_KINDS = ("mult", "div", "cmp", "ar", "aw", "dv", "dw", "free", "resolve",
               "input", "output")


def _field_params(args) -> FieldParams:
    if args.parties < 3:
        raise RuntimeFault(f"at least 3 parties required, got {args.parties}")
    return FieldParams(p=args.prime, q=args.parties, t=args.threshold)


def _seed(args) -> int:
    env = os.environ.get("SMC2_SEED")
    return int(env) if env else args.seed


def _load_inputs(args, q):
    if args.inputs is None:
        return {}
    return corpus_mod.load_inputs(args.inputs, q)


def _read_program(path: str):
    return parse(Path(path).read_text())


def round_report(proto) -> dict:
    """Counts per protocol kind plus the total share-exchange rounds."""
    counts = {kind: proto.counts.get(kind, 0) for kind in ROUND_KINDS}
    counts["rounds"] = proto.rounds
    return counts


def _emit_report(counts: dict, report_dir):
    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    csv_path = report_dir / "rounds.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "count"])
        for kind, count in counts.items():
            writer.writerow([kind, count])
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    kinds = [k for k in counts if k != "rounds"]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.bar(kinds, [counts[k] for k in kinds], color="#4878a8")
    ax.set_ylabel("invocations")
    ax.set_title(f"protocol invocations (total rounds: {counts['rounds']})")
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    fig.savefig(report_dir / "rounds.png", dpi=120)
    plt.close(fig)
    return csv_path, report_dir / "rounds.png"


def _emit_traces(sim: Simulator, trace_dir):
    trace_dir = Path(trace_dir)
    trace_dir.mkdir(parents=True, exist_ok=True)
    with (trace_dir / "trace.d").open("w") as fh:
        for p in range(sim.q):
            for code, acc in sim.D[p]:
                fh.write(f"{p + 1} {code} {acc}\n")
    with (trace_dir / "trace.l").open("w") as fh:
        for p in range(sim.q):
            for loc in sim.L[p]:
                fh.write(f"{p + 1} ({loc.block},{loc.offset})\n")
    (trace_dir / "psi.json").write_text(
        json.dumps([{"freed": a, "target": b} for a, b in sim.psi], indent=2) + "\n")


def _print_outputs(outputs):
    for k, records in enumerate(outputs, 1):
        for name, value in records:
            if isinstance(value, list):
                print(f"party {k}: {name} = [{', '.join(str(v) for v in value)}]")
            else:
                print(f"party {k}: {name} = {value}")


def cmd_run(args) -> int:
    params = _field_params(args)
    sim = Simulator(_read_program(args.program), params=params, seed=_seed(args),
                    inputs=_load_inputs(args, params.q), backend=args.backend,
                    tracking=args.tracking,
                    legacy_per_statement=args.legacy_per_statement)
    sim.run()
    _print_outputs(sim.outputs)
    corpus_mod.write_outputs(sim.outputs, args.out_dir)
    if args.trace_dir:
        _emit_traces(sim, args.trace_dir)
    counts = round_report(sim.proto)
    if args.count_rounds:
        for kind, count in counts.items():
            print(f"rounds {kind} {count}")
    if args.report_dir:
        _emit_report(counts, args.report_dir)
    return EXIT_OK


def cmd_run_vanilla(args) -> int:
    source = Path(args.program).read_text()
    try:
        program = parse(source, vanilla=True)
    except PrivcError:
        # labeled source: run its erasure
        program = erase_program(parse(source))
    van = VanillaInterp(program, q=args.parties,
                        inputs=_load_inputs(args, args.parties))
    van.run()
    _print_outputs(van.outputs)
    corpus_mod.write_outputs(van.outputs, args.out_dir)
    return EXIT_OK


def cmd_erase(args) -> int:
    program = _read_program(args.program)
    text = pretty(erase_program(program))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check_correct(args) -> int:
    params = _field_params(args)
    report = check_correctness(_read_program(args.program),
                               inputs=_load_inputs(args, params.q),
                               seed=_seed(args), params=params,
                               tracking=args.tracking)
    print(report.line())
    return EXIT_OK if report.verdict in (PASS, SKIPPED) else EXIT_PROPERTY


def cmd_check_ni(args) -> int:
    params = _field_params(args)
    base = _load_inputs(args, params.q)
    priv_a = corpus_mod.load_inputs(args.alt_inputs[0], params.q)
    priv_b = corpus_mod.load_inputs(args.alt_inputs[1], params.q)
    worst = PASS
    for seed in args.seeds:
        report = check_noninterference(_read_program(args.program), base,
                                       priv_a, priv_b, seed=seed, params=params)
        print(f"CHECK noninterference seed={seed} {report.verdict} "
              f"{report.divergence or '-'}")
        if report.verdict != PASS:
            worst = FAIL
    return EXIT_OK if worst == PASS else EXIT_PROPERTY


def cmd_check_all(args) -> int:
    """The shipped corpus suite: correctness, noninterference, confluence,
    protocol axioms, and the branch-resolution round-count claim."""
    params = _field_params(args)
    failed = False

    for entry in corpus_mod.CORPUS:
        program = parse(entry.source())
        inputs = entry.input_records(params.q)
        report = check_correctness(program, inputs=inputs, seed=_seed(args),
                                   params=params)
        expected = SKIPPED if entry.expect_skip else PASS
        ok = report.verdict == expected
        failed |= not ok
        print(f"CHECK correctness[{entry.name}] {report.verdict} {report.detail or '-'}")
        sim = Simulator(program, params=params, seed=_seed(args), inputs=inputs).run()
        conf = check_confluence(sim)
        failed |= not conf
        print(f"CHECK confluence[{entry.name}] {PASS if conf else FAIL} -")
        for i, (priv_a, priv_b) in enumerate(entry.ni_pairs):
            for seed in (1, 2, 3):
                rep = check_noninterference(program, inputs, priv_a, priv_b,
                                            seed=seed, params=params)
                if rep.verdict != PASS:
                    failed = True
                    print(f"CHECK noninterference[{entry.name}:{i}:{seed}] "
                          f"{rep.verdict} {rep.divergence}")
        print(f"CHECK noninterference[{entry.name}] PASS "
              f"{len(entry.ni_pairs)} pairs x 3 seeds")

    axioms = check_protocol_axioms()
    failed |= not axioms.ok
    print(axioms.line())

    cost = corpus_mod.read_program("resolution_cost")
    block = Simulator(parse(cost), params=params, seed=_seed(args)).run()
    legacy = Simulator(parse(cost), params=params, seed=_seed(args),
                       legacy_per_statement=True).run()
    got = (block.proto.counts["resolve"], legacy.proto.counts["resolve"])
    ok = got == (2, 8)
    failed |= not ok
    print(f"CHECK round-claim {PASS if ok else FAIL} block={got[0]} legacy={got[1]}")
    return EXIT_PROPERTY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="privc",
        description="Simulated multiparty interpreter for labeled C programs, "
                    "with differential-correctness and noninterference checkers.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, program=True):
        if program:
            p.add_argument("program", help="path to a .sc source file")
        p.add_argument("--parties", "-q", type=int, default=3)
        p.add_argument("--threshold", "-t", type=int, default=1)
        p.add_argument("--prime", type=int, default=FieldParams().p)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--inputs", help="input file prefix (PREFIX.party<k>.txt)")

    p = sub.add_parser("run", help="run a labeled program over q simulated parties")
    common(p)
    p.add_argument("--backend", choices=("shamir", "dealer"), default="shamir")
    p.add_argument("--tracking", choices=("auto", "variable", "location"),
                   default="auto")
    p.add_argument("--legacy-per-statement", action="store_true",
                   help="resolve every tracked statement separately")
    p.add_argument("--count-rounds", action="store_true")
    p.add_argument("--trace-dir", help="write trace.d, trace.l, psi.json here")
    p.add_argument("--report-dir", help="write rounds.csv and rounds.png here")
    p.add_argument("--out-dir", default=".", help="where out.party<k>.txt go")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("run-vanilla", help="run an erased program (plaintext)")
    common(p)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(fn=cmd_run_vanilla)

    p = sub.add_parser("erase", help="emit the erased source of a labeled program")
    p.add_argument("program")
    p.add_argument("--output", "-o")
    p.set_defaults(fn=cmd_erase)

    p = sub.add_parser("check-correct",
                       help="secure run vs erased reference run for one program")
    common(p)
    p.add_argument("--tracking", choices=("auto", "variable", "location"),
                   default="auto")
    p.set_defaults(fn=cmd_check_correct)

    p = sub.add_parser("check-ni", help="trace noninterference for one program")
    common(p)
    p.add_argument("--alt-inputs", nargs=2, required=True,
                   metavar=("PRIVA", "PRIVB"),
                   help="two private-input file prefixes")
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    p.set_defaults(fn=cmd_check_ni)

    p = sub.add_parser("check-all", help="full corpus acceptance suite")
    common(p, program=False)
    p.set_defaults(fn=cmd_check_all)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except (ObliviousFault, RuntimeFault, PrivcError) as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
