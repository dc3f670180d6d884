"""
Command-line front end.

Exit codes: 0 success, 1 malformed input, 2 no click probability to
condition on, 3 oracle verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import figures
from .analysis import SweepRow, SweepSpec, metrics, run_sweep, sweep_csv
from .cavity import TWO_PI, CavityParams, resonant_numbers
from .errors import FockSynthError, NoClickProbability
from .fockspace import (
    DensityMatrix,
    FockTruncation,
    PureStateVector,
    coherent_density_matrix,
    default_truncation,
)
from .oracle import compare_with_oracle, random_instances
from .synthesizer import (
    SynthesizerParams,
    conditional_state,
    design_phase,
    equal_weight_amplitude,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CLICK = 2
EXIT_VERIFY = 3

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_ANGLE = re.compile(rf"(?P<sign>[+-]?)(?:(?P<coef>{_NUMBER})\*?)?pi(?:/(?P<den>{_NUMBER}))?")


def load_schema(name: str) -> dict:
    """JSON schema shipped with the package: density_matrix, simulate, design or figure."""
    return json.loads(resources.files("focksynth").joinpath(f"schemas/{name}.schema.json").read_text())


class UsageError(Exception):
    """Malformed command-line input."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_angle(text: str) -> float:
    """Radians from a float literal or a multiple of pi such as ``pi/5`` or ``2*pi/11``."""
    s = str(text).strip().replace(" ", "").lower()
    try:
        value = float(s)
    except ValueError:
        m = _ANGLE.fullmatch(s)
        if m is None:
            raise argparse.ArgumentTypeError(f"not an angle in radians: {text!r}") from None
        value = math.pi * float(m["coef"] or 1.0) / float(m["den"] or 1.0)
        if m["sign"] == "-":
            value = -value
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"angle must be finite: {text!r}")
    return value


def parse_target(text: str) -> tuple[str, list[int]]:
    """``fock:n`` or ``super:n1,n2,...``."""
    kind, _, rest = str(text).partition(":")
    try:
        numbers = [int(x) for x in rest.split(",")]
    except ValueError:
        raise UsageError(f"bad target {text!r}; expected fock:n or super:n1,n2") from None
    if kind == "fock" and len(numbers) == 1 and numbers[0] >= 0:
        return kind, numbers
    if kind == "super" and len(numbers) >= 2 and min(numbers) >= 0 and len(set(numbers)) == len(numbers):
        return kind, numbers
    raise UsageError(f"bad target {text!r}; expected fock:n or super:n1,n2")


def _target_vector(target, trunc: FockTruncation) -> PureStateVector | None:
    if target is None:
        return None
    _, numbers = target
    if max(numbers) > trunc.n_max:
        raise UsageError(f"target number {max(numbers)} exceeds n_max={trunc.n_max}")
    return PureStateVector.superposition(numbers, trunc)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _load_density_matrix(path: str) -> DensityMatrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return DensityMatrix.from_json(text).check_invariants()


def _input_state(args, target_numbers=()) -> DensityMatrix:
    if args.nu_in is not None:
        nu = _load_density_matrix(args.nu_in)
        if args.n_max is not None and args.n_max != nu.n_max:
            raise UsageError(f"--n-max {args.n_max} differs from the n_max={nu.n_max} of {args.nu_in}")
        return nu
    beta = complex(args.beta)
    trunc = FockTruncation(args.n_max) if args.n_max is not None else \
        default_truncation(abs(beta) ** 2, target_numbers)
    return coherent_density_matrix(beta, trunc)


def _add_device_flags(p, tau_required=True):
    p.add_argument("--alpha", type=float, default=8.0, help="coherent amplitude feeding the cavity")
    p.add_argument("--psi", type=parse_angle, default=0.0, help="tunable cavity phase (radians)")
    p.add_argument("--chi-t", type=parse_angle, default=0.0, help="Kerr phase per signal photon (radians)")
    p.add_argument("--tau", type=float, required=tau_required, default=None if tau_required else 1e-4,
                   help="beam-splitter transmissivity in (0, 1]")
    p.add_argument("--eta", type=float, default=1.0, help="detector quantum efficiency in (0, 1]")
    p.add_argument("--n-max", type=int, default=None, help="Fock cutoff of the signal mode")
    p.add_argument("--out", default=None, help="write output to this file instead of stdout")


def _params(args) -> SynthesizerParams:
    return SynthesizerParams(CavityParams(args.tau, args.psi, args.chi_t), args.alpha, args.eta)


def cmd_simulate(args) -> int:
    target = parse_target(args.target) if args.target else None
    nu_in = _input_state(args, target[1] if target else ())
    params = _params(args)
    target_vec = _target_vector(target, nu_in.truncation)
    rho, report = conditional_state(nu_in, params)
    m = metrics(rho, target_vec)
    if args.format == "csv":
        _emit(sweep_csv("tau", [SweepRow(params.cavity.tau, report.p_click, m)]), args.out)
        return EXIT_OK
    out = {
        "command": "simulate",
        "params": params.to_dict() | {"n_max": nu_in.n_max},
        "target": args.target,
        "click": {"p_click": report.p_click, "p_no_click": report.p_no_click},
        "metrics": m.to_dict(),
        "state": rho.to_dict(),
    }
    _emit(json.dumps(out), args.out)
    return EXIT_OK


def cmd_figure(args) -> int:
    bundle = figures.figure(args.which)
    if args.format == "csv":
        lines = ["figure,panel,tau,eta,alpha,published_p_click,p_click,fidelity,purity"]
        for p in bundle["panels"]:
            cells = [str(args.which), p["panel"]] + [
                "" if p.get(k) is None else f"{p[k]:.12g}"
                for k in ("tau", "eta", "alpha", "published_p_click", "p_click", "fidelity", "purity")]
            lines.append(",".join(cells))
        _emit("\n".join(lines), args.out)
    else:
        _emit(json.dumps(bundle), args.out)
    failed = [p for p in bundle["panels"] if "error" in p]
    for p in failed:
        print(f"panel {p['panel']}: {p['error']}", file=sys.stderr)
    return EXIT_INPUT if failed else EXIT_OK


def cmd_design(args) -> int:
    kind, numbers = parse_target(args.target)
    chi_t = args.chi_t
    if kind == "fock":
        n_star = numbers[0]
        beta = math.sqrt(n_star)
    else:
        if len(numbers) != 2:
            raise UsageError("design supports superpositions of exactly two Fock states")
        n1, n2 = sorted(numbers)
        ratio = chi_t * (n2 - n1) / TWO_PI
        j = round(ratio)
        if j < 1 or abs(ratio - j) > 1e-9:
            j = max(1, j)
            label = f"2*pi/{n2 - n1}" if j == 1 else f"2*pi*{j}/{n2 - n1}"
            raise UsageError(
                f"chi_t={chi_t!r} does not put |{n1}> and |{n2}> on the same resonance comb; "
                f"nearest valid chi_t = {label} = {TWO_PI * j / (n2 - n1)!r}")
        n_star = n1
        beta = equal_weight_amplitude(n1, n2)
    psi = design_phase(n_star, chi_t)
    trunc = FockTruncation(args.n_max) if args.n_max is not None else \
        default_truncation(beta ** 2, numbers)
    cavity = CavityParams(args.tau, psi, chi_t)
    params = SynthesizerParams(cavity, args.alpha, args.eta)
    nu_in = coherent_density_matrix(beta, trunc)
    target = PureStateVector.superposition(numbers, trunc)
    out = {
        "command": "design",
        "target": args.target,
        "chi_t": chi_t,
        "psi": psi,
        "beta": beta,
        "tau": args.tau,
        "eta": args.eta,
        "alpha": args.alpha,
        "n_max": trunc.n_max,
        "resonant_numbers": resonant_numbers(cavity, trunc),
    }
    try:
        rho, report = conditional_state(nu_in, params)
        out["p_click"] = report.p_click
        out["fidelity"] = metrics(rho, target).fidelity
    except NoClickProbability:
        out["p_click"] = 0.0
        out["fidelity"] = None
    _emit(json.dumps(out), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.tau is not None and not 0 < args.tau <= 1:
        raise UsageError(f"--tau must lie in (0, 1], got {args.tau}")
    if args.eta is not None and not 0 < args.eta <= 1:
        raise UsageError(f"--eta must lie in (0, 1], got {args.eta}")
    if args.max_alpha <= 0 or args.max_beta < 0 or args.n_max < 1 or args.instances < 1:
        raise UsageError("--max-alpha must be > 0, --max-beta >= 0, --n-max >= 1, --instances >= 1")
    rng = np.random.default_rng(args.seed)
    start = time.perf_counter()
    header = f"{'#':>3} {'alpha':>7} {'|beta|':>7} {'tau':>10} {'eta':>5} {'n_max':>5} " \
             f"{'max|d_rho|':>11} {'|d_P1|':>11}  ok"
    print(header)
    worst = None
    failures = 0
    cases = random_instances(rng, args.instances, max_alpha=args.max_alpha, max_beta=args.max_beta,
                             max_n=args.n_max, tau=args.tau, eta=args.eta)
    for i, case in enumerate(cases):
        d_rho, d_p = compare_with_oracle(case.nu_in, case.params)
        ok = d_rho <= args.state_tol and d_p <= args.prob_tol
        failures += not ok
        params = case.params
        print(f"{i:>3} {abs(params.alpha):7.3f} {abs(case.beta):7.3f} {params.cavity.tau:10.3e} "
              f"{params.eta:5.2f} {case.nu_in.n_max:>5} {d_rho:11.3e} {d_p:11.3e}  {'yes' if ok else 'NO'}")
        score = max(d_rho / args.state_tol, d_p / args.prob_tol)
        if worst is None or score > worst[0]:
            worst = (score, i, d_rho, d_p)
    elapsed = time.perf_counter() - start
    print(f"{args.instances - failures}/{args.instances} instances within tolerance "
          f"(state {args.state_tol:g}, probability {args.prob_tol:g}) in {elapsed:.2f} s")
    _, i, d_rho, d_p = worst
    print(f"worst instance #{i}: max|d_rho|={d_rho:.3e} |d_P1|={d_p:.3e}")
    return EXIT_VERIFY if failures else EXIT_OK


def _grid_from_json(grid) -> list[float]:
    if isinstance(grid, list):
        return [float(x) for x in grid]
    if isinstance(grid, dict) and len(grid) == 1:
        (kind, args), = grid.items()
        if kind in ("linspace", "logspace") and len(args) == 3:
            lo, hi, n = float(args[0]), float(args[1]), int(args[2])
            if kind == "linspace":
                return list(np.linspace(lo, hi, n))
            return list(np.geomspace(lo, hi, n))
    raise UsageError("grid must be a list or {\"linspace\"|\"logspace\": [lo, hi, count]}")


def sweep_spec_from_json(data: dict, base_dir: Path = Path(".")) -> SweepSpec:
    """Build a `SweepSpec` from the sweep-file JSON object."""
    try:
        param = data["param"]
        grid = _grid_from_json(data["grid"])
        fixed = dict(data.get("fixed", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed sweep spec: {exc}") from None
    unknown = set(fixed) - {"alpha", "beta", "nu_in", "psi", "chi_t", "tau", "eta", "n_max"}
    if unknown:
        raise UsageError(f"unknown fixed fields: {sorted(unknown)}")
    if ("beta" in fixed) == ("nu_in" in fixed) and param != "beta":
        raise UsageError("fixed must contain exactly one of beta or nu_in")
    if param != "tau" and "tau" not in fixed:
        raise UsageError("fixed must contain tau unless tau is swept")
    try:
        # a swept tau overwrites this placeholder per grid point
        tau = 1.0 if param == "tau" else float(fixed["tau"])
        cavity = CavityParams(tau, parse_angle(fixed.get("psi", 0.0)), parse_angle(fixed.get("chi_t", 0.0)))
        n_max = fixed.get("n_max")
        params = SynthesizerParams(cavity, float(fixed.get("alpha", 8.0)), float(fixed.get("eta", 1.0)),
                                   None if n_max is None else FockTruncation(int(n_max)))
    except (argparse.ArgumentTypeError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed fixed parameters: {exc}") from None
    if "nu_in" in fixed:
        source = _load_density_matrix(str(base_dir / fixed["nu_in"]))
    else:
        source = float(fixed.get("beta", 0.0))
    spec = SweepSpec(param=param, grid=tuple(grid), fixed=params, nu_source=source)
    if data.get("target"):
        spec = SweepSpec(param=param, grid=spec.grid, fixed=params, nu_source=source,
                         target=_target_vector(parse_target(data["target"]), spec.truncation()))
    return spec


def cmd_sweep(args) -> int:
    if args.spec == "-":
        text, base = sys.stdin.read(), Path(".")
    else:
        try:
            text, base = Path(args.spec).read_text(), Path(args.spec).parent
        except OSError as exc:
            raise UsageError(f"cannot read {args.spec}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"sweep spec is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("sweep spec must be a JSON object")
    spec = sweep_spec_from_json(data, base)
    rows = run_sweep(spec, workers=args.threads)
    for row in rows:
        if row.error:
            print(f"{spec.param}={row.value:.12g}: {row.error}", file=sys.stderr)
    _emit(sweep_csv(spec.param, rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="focksynth", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="detection probability and conditional state")
    _add_device_flags(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--beta", type=complex, help="coherent amplitude of the signal input")
    src.add_argument("--nu-in", help="JSON density matrix of the signal input")
    p.add_argument("--target", help="fock:n or super:n1,n2 for the fidelity metric")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("figure", help="reproduce a published figure")
    p.add_argument("which", type=int, choices=(2, 3, 4))
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("design", help="phase and input amplitude for a target state")
    p.add_argument("target", help="fock:n or super:n1,n2")
    _add_device_flags(p, tau_required=False)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("sweep", help="one-parameter sweep from a JSON spec file")
    p.add_argument("spec", help="path to the sweep spec JSON, or - for stdin")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default FOCKSYNTH_THREADS)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="compare closed forms with the brute-force oracle")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--max-alpha", type=float, default=3.0)
    p.add_argument("--max-beta", type=float, default=2.0)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--tau", type=float, default=None, help="fix tau instead of sampling it")
    p.add_argument("--eta", type=float, default=None, help="fix eta instead of sampling it")
    p.add_argument("--state-tol", type=float, default=1e-9)
    p.add_argument("--prob-tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help and on usage errors; hand the code back instead
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except NoClickProbability as exc:
        print(f"focksynth: {exc}", file=sys.stderr)
        return EXIT_NO_CLICK
    except (UsageError, FockSynthError) as exc:
        print(f"focksynth: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
