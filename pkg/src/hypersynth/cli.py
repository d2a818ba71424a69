"""Command-line front end: classify, reduce, synthesize, verify, benchmark."""

from __future__ import annotations

import argparse
import json
import sys

from .bench import DEFAULT_SELECTION, TABLE_INSTANCES, run_suite
from .formula import SpecError, parse, print_formula
from .fragments import classify_formula
from .machines import ExistGenerator, MooreSystem
from .mc import mc_exists_forall
from .synth import (
    EncoderSoundnessError,
    SolverFailure,
    encode,
    prepare,
    search,
)

EXIT_OK = 0
EXIT_UNREALIZABLE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise SpecError(f"cannot read {path}: {e}") from e


def _load_spec(path: str):
    return parse(_read_text(path))


def cmd_classify(args) -> int:
    doc = _load_spec(args.spec)
    verdict = classify_formula(doc.formula)
    print(f"{verdict.kind}")
    print(f"decidable: {'yes' if verdict.decidable else 'no'}")
    print(f"reason: {verdict.justification}")
    return EXIT_OK


def cmd_reduce(args) -> int:
    doc = _load_spec(args.spec)
    inst = prepare(
        doc,
        designated_input=args.designated_input,
        do_collapse=args.collapse,
        force=args.force,
    )
    print(inst.trace.render())
    print(f"existential copies: {', '.join(inst.exist_vars) or 'none'}")
    print(f"universal copies:   {', '.join(inst.universal_vars)}")
    print(f"body: {print_formula(inst.body)}")
    return EXIT_OK


def cmd_synth(args) -> int:
    doc = _load_spec(args.spec)
    inst = prepare(
        doc,
        designated_input=args.designated_input,
        do_collapse=args.collapse,
        force=args.force,
    )
    if args.backend:
        problem = encode(inst, args.max_system, args.max_exists, args.lambda_max)
        text = problem.to_dimacs() if args.backend == "dimacs" else problem.to_smtlib()
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(f"{args.backend} constraints for bounds ({args.max_system},{args.max_exists}) written to {args.out}")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    result, attempts = search(
        inst,
        args.max_system,
        args.max_exists,
        lambda_max=args.lambda_max,
        solver_cmd=args.solver,
        timeout=args.timeout,
    )
    if result is None:
        print("unrealizable within the given bounds; attempted:")
        for a in attempts:
            print(f"  ({a.n},{a.m}) lambda={a.lambda_max}: {a.status}")
        return EXIT_UNREALIZABLE
    print(f"realizable at system bound {result.n}, generator bound {result.m}")
    payload = {"system": json.loads(result.system.to_json())}
    if result.generator is not None:
        payload["generator"] = json.loads(result.generator.to_json())
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"machines written to {args.out}")
    else:
        print(text)
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(result.system.to_dot())
        print(f"system rendered to {args.dot}")
    return EXIT_OK


def _load_machines(path: str):
    raw = json.loads(_read_text(path))
    if isinstance(raw, dict) and "system" in raw:
        system = MooreSystem.from_json(json.dumps(raw["system"]))
        generator = None
        if raw.get("generator") is not None:
            generator = ExistGenerator.from_json(json.dumps(raw["generator"]))
        return system, generator
    if isinstance(raw, dict) and raw.get("kind") == "moore":
        return MooreSystem.from_json(json.dumps(raw)), None
    raise SpecError(f"{path}: expected a system document or a moore machine")


def cmd_verify(args) -> int:
    system, generator = _load_machines(args.machine)
    doc = _load_spec(args.spec)
    inst = prepare(
        doc,
        designated_input=args.designated_input,
        do_collapse=args.collapse,
        force=args.force,
    )
    if tuple(system.inputs) != tuple(inst.inputs) or tuple(system.outputs) != tuple(inst.outputs):
        raise SpecError("machine signals do not match the specification header")
    ok, cex = mc_exists_forall(system, generator, inst.core)
    if ok:
        print("verified: the machine satisfies the specification")
        return EXIT_OK
    print("violation found; universal-copy input lassos:")
    for t in cex or []:
        print(f"  prefix={[sorted(v) for v in t.prefix]} loop={[sorted(v) for v in t.loop]}")
    return EXIT_UNREALIZABLE


def cmd_bench(args) -> int:
    known = {b.name for b in TABLE_INSTANCES}
    if args.instance:
        unknown = [n for n in args.instance if n not in known]
        if unknown:
            raise SpecError(f"unknown instances: {', '.join(unknown)}; known: {', '.join(sorted(known))}")
        selection = args.instance
    elif args.full_table:
        selection = sorted(known)
    else:
        selection = DEFAULT_SELECTION
    report = run_suite(
        selection,
        solver_cmd=args.solver,
        timeout=args.timeout,
        include_optional=args.full_table,
    )
    if args.json:
        print(report.to_json())
    else:
        print(report.render())
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hypersynth",
        description="Realizability checking and bounded synthesis for trace- and proposition-quantified temporal specifications.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_reduction_flags(sp):
        sp.add_argument("--designated-input", metavar="NAME", default=None,
                        help="input signal that carries quantified propositions (default: first input)")
        sp.add_argument("--collapse", action="store_true",
                        help="identify all leading universal trace variables")
        sp.add_argument("--force", action="store_true",
                        help="proceed on prefixes outside the decidable fragments (bound-relative verdicts)")

    sp = sub.add_parser("classify", help="place a specification in the decidability landscape")
    sp.add_argument("spec", help="specification file, or - for stdin")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("reduce", help="show the reduction to an exists*-forall* core")
    sp.add_argument("spec")
    add_reduction_flags(sp)
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("synth", help="bounded synthesis over increasing state bounds")
    sp.add_argument("spec")
    sp.add_argument("--max-system", type=int, required=True, metavar="N")
    sp.add_argument("--max-exists", type=int, required=True, metavar="M")
    sp.add_argument("--lambda-max", type=int, default=None, metavar="K",
                    help="annotation counter bound (default: a sufficient bound)")
    sp.add_argument("--backend", choices=("dimacs", "smtlib"), default=None,
                    help="emit constraints at the maximal bounds instead of solving")
    sp.add_argument("--solver", default=None, metavar="CMD",
                    help="external solver command (also via HYPERSYNTH_SOLVER)")
    sp.add_argument("--timeout", type=float, default=None, metavar="SEC")
    sp.add_argument("--out", default=None, metavar="FILE")
    sp.add_argument("--dot", default=None, metavar="FILE")
    add_reduction_flags(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("verify", help="model check a machine document against a specification")
    sp.add_argument("machine", help="machine JSON file (system plus optional generator)")
    sp.add_argument("spec")
    add_reduction_flags(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="run the arbiter regression suite")
    sp.add_argument("--instance", action="append", default=None, metavar="NAME")
    sp.add_argument("--full-table", action="store_true",
                    help="include the slow instance and its optional rows")
    sp.add_argument("--solver", default=None, metavar="CMD")
    sp.add_argument("--timeout", type=float, default=None, metavar="SEC")
    sp.add_argument("--json", action="store_true", help="machine-readable report")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except SolverFailure as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except EncoderSoundnessError as e:
        print(f"internal soundness failure: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
