"""Command-line front end: ``python -m app <subcommand> ...``.

Exit status 0 on success, 2 on usage errors (bad flags, unreadable files),
1 on domain errors, which are also reported as one JSON line on stderr.
"""
import argparse
import csv
import io
import json
import logging
import sys
from typing import Any, Iterable, List, Optional, Sequence, Type

import numpy as np
from pydantic import BaseModel, TypeAdapter, ValidationError

from .config import get_settings
from .core import approximation, fixed_point, fnorm, measure, modular, symmetric
from .core.sampling import random_orlicz, random_partition, random_step_functions
from .errors import MalformedInputError, ModularisError
from .models import (
    FNormSpecModel,
    MeasureSpaceModel,
    OperatorModel,
    PartitionModel,
    SemimodularModel,
    StepFunctionModel,
    SymmetricNormModel,
)
from .utils.log_config import setup_logging

logger = logging.getLogger(__name__)

SUITES = ("fnorm-axioms", "semimodular", "binder-monotone", "admissibility")


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedInputError(f"{path} is not valid JSON: {e}")


def _load(path: str, model: Type[BaseModel]):
    data = _read_json(path)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise MalformedInputError(f"{path}: {e.errors()[0]['msg']}")


def _load_list(path: str, model: Type[BaseModel]) -> list:
    data = _read_json(path)
    try:
        return TypeAdapter(List[model]).validate_python(data)
    except ValidationError as e:
        raise MalformedInputError(f"{path}: {e.errors()[0]['msg']}")


class _Output:
    """Writes to --output when given, stdout otherwise."""

    def __init__(self, path: Optional[str]):
        self.path = path
        self.buffer = io.StringIO()

    def csv_rows(self, header: Sequence[str], rows: Iterable[Sequence[Any]]):
        writer = csv.writer(self.buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])

    def json(self, payload: Any):
        self.buffer.write(json.dumps(payload, sort_keys=True) + "\n")

    def line(self, text: str):
        self.buffer.write(text + "\n")

    def flush(self):
        if self.path:
            try:
                with open(self.path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(self.buffer.getvalue())
            except OSError as e:
                raise UsageError(f"cannot write {self.path}: {e.strerror or e}")
        else:
            sys.stdout.write(self.buffer.getvalue())
            sys.stdout.flush()


# -- subcommands ------------------------------------------------------------

def cmd_norm(args, out: _Output):
    if args.kind != "binder" and len(args.modular) != 1:
        raise UsageError(f"--kind {args.kind} takes exactly one --modular, got {len(args.modular)}")
    rhos = [_load(path, SemimodularModel).to_domain() for path in args.modular]
    f = _load(args.fn, StepFunctionModel).to_domain()
    if args.kind == "luxemburg":
        value, k = fnorm.luxemburg_norm(rhos[0], f, args.tol), None
    elif args.kind == "luxemburg-fnorm":
        value, k = fnorm.luxemburg_fnorm(rhos[0], f, args.tol), None
    elif args.kind == "amemiya":
        value, k = fnorm.amemiya_norm(rhos[0], f, args.p, args.tol), None
    else:
        arity = len(rhos) + 1
        if args.binder == "wsum":
            binder = fnorm.Binder.wsum(args.weights or [1.0] * arity)
        elif args.binder == "lp":
            binder = fnorm.Binder.lp(args.p, arity)
        else:
            binder = fnorm.Binder.max(arity)
        spec = fnorm.FNormSpec(tuple(rhos), binder, mode=args.mode, s=args.s,
                               search=fnorm.SearchParams.from_settings(tol=args.tol))
        result = fnorm.minimize_objective(spec, f)
        value, k = result.value, result.k
    if args.json:
        out.json({"value": value, "k": k})
    else:
        out.line(fmt(value))


def cmd_approx(args, out: _Output):
    family = [m.to_domain() for m in _load_list(args.family, StepFunctionModel)]
    spec = _load(args.norm, FNormSpecModel).to_domain()
    space = _load(args.space, MeasureSpaceModel).to_domain()
    H = approximation.build_admissible_map(family, args.eps, spec, space,
                                           radius=args.radius, max_blocks=args.max_blocks)
    rows = [(s.stage, s.parameter, s.sup_error) for s in H.report.stages]
    rows.append(("total_error", H.report.eps, H.report.total_error))
    out.csv_rows(("stage", "parameter", "sup_error"), rows)


def _default_times(profile: symmetric.RearrangementProfile) -> List[float]:
    knots = profile.knots
    times = []
    for a, b in zip(knots[:-1], knots[1:]):
        times.extend((0.5 * (a + b), float(b)))
    return times


def cmd_rearrange(args, out: _Output):
    f = _load(args.fn, StepFunctionModel).to_domain()
    profile = symmetric.rearrangement_profile(f)
    times = args.t or _default_times(profile)
    for t in times:
        if not t > 0:
            raise MalformedInputError(f"sample times must be positive, got {t}")
    out.csv_rows(("t", "xstar", "xstarstar"),
                 ((float(t), profile.xstar(t), profile.maximal(t)) for t in times))


def cmd_map(args, out: _Output):
    E = _load(args.norm, SymmetricNormModel).to_domain()
    f = _load(args.fn, StepFunctionModel).to_domain()
    if args.chain:
        chain = [m.to_domain() for m in _load_list(args.chain, PartitionModel)]
    else:
        chain = measure.dyadic_chain(args.start, args.end, args.dyadic)
    rows = symmetric.map_convergence_experiment(E, f, chain)
    out.csv_rows(("level", "error"), ((r.level, r.error) for r in rows))


def cmd_fixpoint(args, out: _Output):
    T = _load(args.operator, OperatorModel).to_domain()
    spec = _load(args.norm, FNormSpecModel).to_domain()
    space = _load(args.space, MeasureSpaceModel).to_domain()
    P = _load(args.retract, OperatorModel).to_domain() if args.retract else None
    try:
        if P is not None:
            result = fixed_point.retract_fixed_point(T, P, args.eps, spec, space)
        else:
            result = fixed_point.approximate_fixed_point(T, args.eps, spec, space)
    finally:
        T.close()
        if P is not None:
            P.close()
    out.json({
        "method": result.method,
        "iterations": result.iterations,
        "residual": result.residual,
        "point": StepFunctionModel.from_domain(result.point).model_dump(),
    })


def cmd_verify(args, out: _Output):
    rng = np.random.default_rng(args.seed)
    rho = _load(args.modular, SemimodularModel).to_domain() if args.modular else random_orlicz(rng)
    if args.suite == "semimodular":
        samples = random_step_functions(rng, args.samples)
        report = modular.verify_semimodular(rho, samples, trials=args.trials, seed=args.seed)
    elif args.suite == "binder-monotone":
        binder = fnorm.Binder.lp(args.p, 2) if args.binder == "lp" else fnorm.Binder.max(2)
        report = fnorm.verify_binder_monotone(binder, trials=args.trials, seed=args.seed)
    elif args.suite == "fnorm-axioms":
        spec = fnorm.FNormSpec.luxemburg(rho)
        samples = random_step_functions(rng, args.samples)
        report = fnorm.verify_fnorm_axioms(spec, samples, trials=args.trials,
                                           sequences=args.samples, seed=args.seed)
    else:
        spec = fnorm.FNormSpec.luxemburg(rho)
        blocks = random_partition(rng)
        report = approximation.verify_f_admissible(spec, [1.0], blocks,
                                                   trials=args.trials, seed=args.seed)
    out.json(report.model_dump())


# -- parser -----------------------------------------------------------------

def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modularis", description="Modular-space norms and approximation")
    parser.add_argument("--log-level", default=None, help="overrides MODULARIS_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_output(p):
        p.add_argument("--output", "-o", default=None, help="write results here instead of stdout")
        return p

    p = with_output(sub.add_parser("norm", help="F-norm, s-norm, Luxemburg or Amemiya norm of a step function"))
    p.add_argument("--modular", action="append", required=True, help="semimodular JSON (repeat for n > 2)")
    p.add_argument("--fn", required=True, help="step function JSON")
    p.add_argument("--kind", choices=("binder", "luxemburg-fnorm", "luxemburg", "amemiya"), default="binder")
    p.add_argument("--binder", choices=("max", "lp", "wsum"), default="max")
    p.add_argument("--p", type=float, default=1.0, help="lp binder exponent or Amemiya p (inf allowed)")
    p.add_argument("--weights", type=float, nargs="+", default=None)
    p.add_argument("--mode", choices=fnorm.NORM_MODES, default="fnorm")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--tol", type=_positive_float, default=None)
    p.add_argument("--json", action="store_true", help="print value and achieving k as JSON")
    p.set_defaults(handler=cmd_norm)

    p = with_output(sub.add_parser("approx", help="build a certified finite-rank map for a family"))
    p.add_argument("--family", required=True, help="JSON list of step functions")
    p.add_argument("--norm", required=True, help="FNormSpec JSON")
    p.add_argument("--space", required=True, help="measure space JSON")
    p.add_argument("--eps", type=_positive_float, required=True)
    p.add_argument("--radius", type=_positive_float, default=None)
    p.add_argument("--max-blocks", type=int, default=None)
    p.set_defaults(handler=cmd_approx)

    p = with_output(sub.add_parser("rearrange", help="sample x* and x** as CSV"))
    p.add_argument("--fn", required=True)
    p.add_argument("--t", type=float, action="append", default=None, help="sample time (repeatable)")
    p.set_defaults(handler=cmd_rearrange)

    p = with_output(sub.add_parser("map", help="averaging-operator errors along a refinement chain"))
    p.add_argument("--norm", required=True, help="symmetric norm JSON")
    p.add_argument("--fn", required=True)
    chain = p.add_mutually_exclusive_group(required=True)
    chain.add_argument("--chain", help="JSON list of partitions")
    chain.add_argument("--dyadic", type=int, help="use the dyadic chain with this many levels")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--end", type=float, default=1.0)
    p.set_defaults(handler=cmd_map)

    p = with_output(sub.add_parser("fixpoint", help="approximate fixed point of an operator"))
    p.add_argument("--operator", required=True)
    p.add_argument("--retract", default=None)
    p.add_argument("--norm", required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--eps", type=_positive_float, required=True)
    p.set_defaults(handler=cmd_fixpoint)

    p = with_output(sub.add_parser("verify", help="run a sampled axiom suite and print its report"))
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--modular", default=None, help="semimodular JSON; random Orlicz when omitted")
    p.add_argument("--binder", choices=("max", "lp"), default="max")
    p.add_argument("--p", type=float, default=2.0)
    p.set_defaults(handler=cmd_verify)

    return parser


def parse_and_dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    settings = get_settings()
    setup_logging(args.log_level or settings.LOG_LEVEL, settings.LOG_FILE)

    out = _Output(args.output)
    try:
        args.handler(args, out)
        out.flush()
    except UsageError as e:
        sys.stderr.write(f"{parser.prog} {args.command}: error: {e}\n")
        return 2
    except ModularisError as e:
        logger.info(f"{args.command} failed: {e.code}: {e.message}")
        sys.stderr.write(json.dumps(e.to_dict()) + "\n")
        return 1
    return 0


def main():
    sys.exit(parse_and_dispatch(sys.argv[1:]))
