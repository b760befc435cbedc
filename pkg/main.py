import argparse
import dataclasses
import sys
import time
from pathlib import Path

import numpy as np
from dependency_injector import providers

from isolab import Container
from isolab.caustic import CausticModel, MetricModel, caustic_v11_limit
from isolab.check import Check
from isolab.errors import IsolabError, SpecError
from isolab.flow import FlowResult, integrate_flow
from isolab.monodromy import frozen_flow
from isolab.report import Report, build_report, dumps_report, write_report, write_trajectory_csv
from isolab.system_spec import SystemSpec, load_system_spec, parse_path, read_document
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLogImpl

EXIT_INPUT_ERROR = 2


def _default_caustic(m: int) -> CausticModel:
    try:
        return CausticModel(m, MetricModel.constant(0.3, 1.0), np.array([[0.2], [0.1]]))
    except ValueError as exc:
        raise SpecError(str(exc), "--m") from exc


def load_spec(container: Container, target: str) -> SystemSpec:
    """A preset name or the path of a TOML/JSON system document."""
    presets = container.presets()
    if target in presets:
        return presets[target]()
    path = Path(target)
    if not path.exists():
        raise SpecError(f"'{target}' is neither a preset ({', '.join(presets)}) nor a file")
    return load_system_spec(path, presets, container.t_evaluators())


def parse_tol_overrides(text: str | None, K: int | None) -> dict:
    """``--tol name=value,...`` and ``--K``, validated against Tolerances."""
    raw: dict = {}
    for item in filter(None, (text or "").split(",")):
        name, sep, value = item.partition("=")
        if not sep:
            raise SpecError(f"expected name=value, got '{item}'", "--tol")
        try:
            raw[name.strip()] = float(value)
        except ValueError as exc:
            raise SpecError(f"'{value}' is not a number", f"--tol.{name.strip()}") from exc
    if K is not None:
        raw["levelt_K"] = raw["infinity_K"] = K
    Tolerances.from_mapping(raw, "--tol")
    return {key: int(v) if key.endswith(("_K", "_points")) else v for key, v in raw.items()}


def configure(container: Container, spec: SystemSpec, overrides: dict, path_file: str | None) -> SystemSpec:
    """Apply command-line overrides and install the tolerances in the container."""
    spec = spec.with_tolerances(spec.tolerances.replace(**overrides))
    if path_file is not None:
        doc = read_document(Path(path_file))
        section = doc.get("path", doc)
        spec = spec.with_path(parse_path(section, spec.system.lam.array, spec.system.partition))
    container.tolerances.override(providers.Object(spec.tolerances))
    return spec


def _inputs(spec: SystemSpec, **options) -> dict:
    document = spec.document or {"preset": spec.name}
    return {"document": document, "tolerances": dataclasses.asdict(spec.tolerances), "options": options}


def _run(
    container: Container, command: str, inputs: dict, checks: list[Check], results: dict, verbose: bool, started: float
) -> Report:
    engine = container.check_engine()
    for check in checks:
        engine.add_check(check)
    outcomes = engine.run_checks(verbose)
    return build_report(command, inputs, outcomes, results, time.perf_counter() - started)


def _flow(spec: SystemSpec) -> FlowResult:
    if spec.path is None:
        raise SpecError("this command needs a path (document 'path' table or --path)", "path")
    if spec.frozen:
        return frozen_flow(spec.system.A, spec.path)
    return integrate_flow(spec.system.A, spec.path, spec.dspec, spec.tolerances, T0=spec.T)


def cmd_list(container: Container) -> None:
    """List the shipped presets."""
    print("Available presets:")
    for name, factory in container.presets().items():
        summary = (factory.__doc__ or "").strip().splitlines()[0]
        print(f"  {name:<15} - {summary}")


def cmd_check(container: Container, spec: SystemSpec, verbose: bool) -> Report:
    """Linear constraints and the curl identities of one system."""
    started = time.perf_counter()
    checks: list[Check] = [
        container.linear_constraints(spec.system),
        container.curl(spec.system, dspec=spec.dspec),
    ]
    if spec.caustic is not None:
        t1, u = spec.caustic_point
        checks.append(container.caustic_certificates(spec.caustic, t1=t1, u=u))
    results = {"system": spec.name, "partition": list(spec.system.partition.sizes)}
    return _run(container, "check", _inputs(spec), checks, results, verbose, started)


def cmd_flow(container: Container, spec: SystemSpec, verbose: bool) -> tuple[Report, FlowResult]:
    """Integrate the deformation along the path and grade the monitors."""
    started = time.perf_counter()
    flow = _flow(spec)
    checks: list[Check] = [container.flow_invariants(flow)]
    if spec.path is not None and spec.path.closed:
        checks.append(container.loop_closure(flow))
    if spec.expected_A is not None:
        checks.append(container.reference_match("final A", flow.final.A, spec.expected_A))
    results = {
        "system": spec.name,
        "dspec": flow.dspec_name,
        "steps": flow.steps,
        "final_lambda": flow.final.lam,
        "final_A": flow.final.A,
        "max_spectrum_drift": flow.monitors.max_spectrum_drift,
        "max_diag_block_drift": flow.monitors.max_diag_block_drift,
        "warnings": list(flow.warnings),
    }
    return _run(container, "flow", _inputs(spec), checks, results, verbose, started), flow


def cmd_monodromy(container: Container, spec: SystemSpec, samples: int, verbose: bool) -> Report:
    """Monodromy relations at the start and the strong-isomonodromy audit along the path."""
    started = time.perf_counter()
    flow = _flow(spec)
    checks: list[Check] = [
        container.series_certificates(spec.system),
        container.monodromy_relations(spec.system),
        container.strong_isomonodromy(flow, samples=samples, template=spec.system),
    ]
    results = {"system": spec.name, "samples": samples, "frozen": spec.frozen}
    return _run(container, "monodromy", _inputs(spec, samples=samples), checks, results, verbose, started)


def cmd_caustic(container: Container, spec: SystemSpec | None, m: int | None, scan: bool, verbose: bool) -> Report:
    """Caustic certificates and, with ``scan``, the V̊₁₂ boundedness scan."""
    started = time.perf_counter()
    if spec is not None:
        if spec.caustic is None:
            raise SpecError("the document has no caustic table", "caustic")
        model = spec.caustic if m is None else dataclasses.replace(spec.caustic, m=m, v12=None)
        t1, u = spec.caustic_point
        inputs = _inputs(spec, m=m, scan=scan)
    else:
        model = _default_caustic(3 if m is None else m)
        t1, u = 0.0, (1.0,)
        inputs = {"options": {"m": model.m, "scan": scan}}
    model.require_nondegenerate(t1)
    checks: list[Check] = [container.caustic_certificates(model, t1=t1, u=u)]
    if scan:
        checks.append(container.vring_scan(model, t1=t1))
    results = {
        "m": model.m,
        "n": model.n,
        "v12": model.v12,
        "v11_eigenvalues": np.sort_complex(np.linalg.eigvals(caustic_v11_limit(model, t1))),
    }
    return _run(container, "caustic", inputs, checks, results, verbose, started)


def cmd_example(container: Container, spec: SystemSpec, verbose: bool) -> Report:
    """Run the natural pipeline of a preset: checks, then its flow or caustic scan."""
    started = time.perf_counter()
    if spec.caustic is not None:
        return cmd_caustic(container, spec, None, True, verbose)
    checks: list[Check] = [
        container.linear_constraints(spec.system),
        container.curl(spec.system, dspec=spec.dspec),
    ]
    flow = _flow(spec)
    checks.append(container.flow_invariants(flow))
    if spec.expected_A is not None:
        checks.append(container.reference_match("final A", flow.final.A, spec.expected_A))
    results = {"system": spec.name, "final_A": flow.final.A}
    return _run(container, "example", _inputs(spec), checks, results, verbose, started)


def _emit(report: Report, out: str | None) -> None:
    if out is None:
        sys.stdout.write(dumps_report(report))
    else:
        write_report(report, Path(out))


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", help="Tolerance overrides, e.g. ode_rtol=1e-12,audit_tol=1e-7")
    parser.add_argument("--K", type=int, help="Truncation order of both formal series")
    parser.add_argument("--out", help="Write the output to this file instead of stdout")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log every residual")
    parser.add_argument("-q", "--quiet", action="store_true", help="Only log warnings and errors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isolab",
        description="isolab - Isomonodromic deformations at a coalescence locus",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # check command
    check_parser = subparsers.add_parser("check", help="Check the Pfaffian identities of a system")
    check_parser.add_argument("spec", help="Preset name or system document (.toml or .json)")
    _add_common(check_parser)

    # flow command
    flow_parser = subparsers.add_parser("flow", help="Integrate the deformation along a path")
    flow_parser.add_argument("spec", help="Preset name or system document (.toml or .json)")
    flow_parser.add_argument("--path", help="Document holding a path table that replaces the system's path")
    flow_parser.add_argument("--format", choices=["report", "csv"], default="report", help="Report or CSV trajectory")
    _add_common(flow_parser)

    # monodromy command
    monodromy_parser = subparsers.add_parser("monodromy", help="Audit the monodromy data along a path")
    monodromy_parser.add_argument("spec", help="Preset name or system document (.toml or .json)")
    monodromy_parser.add_argument("--samples", type=int, default=3, help="Number of λ-samples compared")
    monodromy_parser.add_argument("--path", help="Document holding a path table that replaces the system's path")
    _add_common(monodromy_parser)

    # caustic command
    caustic_parser = subparsers.add_parser("caustic", help="Certify the caustic model")
    caustic_parser.add_argument("spec", nargs="?", help="Optional system document with a caustic table")
    caustic_parser.add_argument("--m", type=int, help="Order of the I₂(m) germ (default 3)")
    caustic_parser.add_argument("--scan", action="store_true", help="Scan V̊₁₂ candidates for boundedness")
    _add_common(caustic_parser)

    # example command
    example_parser = subparsers.add_parser("example", help="List or run the shipped presets")
    example_parser.add_argument("name", nargs="?", help="Preset to run; lists them when omitted")
    _add_common(example_parser)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    container = Container()
    if args.quiet:
        container.log.override(providers.Singleton(LabLogImpl, quiet=True))
    log = container.log()

    try:
        overrides = parse_tol_overrides(args.tol, args.K)
        if args.command == "example":
            if args.name is None:
                cmd_list(container)
                return 0
            spec = configure(container, load_spec(container, args.name), overrides, None)
            report = cmd_example(container, spec, args.verbose)
        elif args.command == "caustic":
            spec = None if args.spec is None else configure(container, load_spec(container, args.spec), overrides, None)
            if spec is None:
                container.tolerances.override(providers.Object(Tolerances().replace(**overrides)))
            report = cmd_caustic(container, spec, args.m, args.scan, args.verbose)
        else:
            spec = configure(container, load_spec(container, args.spec), overrides, getattr(args, "path", None))
            if args.command == "check":
                report = cmd_check(container, spec, args.verbose)
            elif args.command == "flow":
                report, flow = cmd_flow(container, spec, args.verbose)
                if args.format == "csv":
                    write_trajectory_csv(flow, sys.stdout if args.out is None else Path(args.out))
                    return report.exit_code
            else:
                report = cmd_monodromy(container, spec, args.samples, args.verbose)
    except SpecError as exc:
        log.error(f"Invalid input: {exc}")
        return EXIT_INPUT_ERROR
    except IsolabError as exc:
        log.error(f"{type(exc).__name__}: {exc}")
        return 1

    _emit(report, args.out)
    log.info(f"Verdict: {report.verdict.value}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
