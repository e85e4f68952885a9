# polyvocab/cli.py
"""
Command-line interface for polyvocab.

Exit codes: 0 success, 1 verification failure or infeasible system,
2 usage or parse error, 3 solver time budget exhausted.
"""

import logging
from pathlib import Path
from typing import Callable, List, Optional

import typer

from .config import RunConfig, load_config
from .dependence import ALL_KINDS, compute_dependences
from .exceptions import ConfigError, PolyvocabError, error_payload
from .recipes import analyze as run_analysis
from .recipes import assemble, parse_recipe, schedule as run_schedule, schedule_prefix
from .rcou import report_rcou
from .scop import Scop, parse_schedules, parse_scop, serialize_schedules
from .templates import render_report, to_json
from .verifier import verify as run_verify

logger = logging.getLogger(__name__)

cli = typer.Typer(help="Affine scheduling with a performance vocabulary.", no_args_is_help=True)

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

FormatOption = typer.Option(None, "--format", "-f", help="Output format: text or json [default: from config]")


@cli.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")):
    """
    Analyze, schedule and verify static-control programs.
    """
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format=LOG_FORMAT)


def _fail(exc: PolyvocabError, fmt: str) -> None:
    if fmt == "json":
        typer.echo(to_json(error_payload(exc)), nl=False)
    else:
        typer.echo(f"error: {exc}", err=True)
    raise typer.Exit(exc.exit_code)


def _guard(fmt: str, body: Callable[[], None]) -> None:
    if fmt not in ("text", "json"):
        _fail(ConfigError(f"output format must be text or json, got {fmt!r}"), "text")
    try:
        body()
    except PolyvocabError as exc:
        _fail(exc, fmt)


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", path=str(path))


def _load_scop(path: Path, config: RunConfig) -> Scop:
    return parse_scop(_read(path), param_min=config.param_min)


def _config(config_file: Optional[Path] = None, **overrides) -> RunConfig:
    return load_config(config_file, **overrides)


def _format(fmt: Optional[str], config_file: Optional[Path] = None) -> str:
    """The ``--format`` value, else the configured ``output_format``."""
    if fmt is not None:
        return fmt
    try:
        return _config(config_file).output_format
    except PolyvocabError:
        # the command body reports the broken config
        return "text"


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        typer.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")


@cli.command()
def analyze(
    scop_file: Path = typer.Argument(..., help="SCoP document"),
    rar: bool = typer.Option(False, "--rar", help="Also report read-after-read dependences"),
    fmt: Optional[str] = FormatOption,
):
    """
    Dependences, SCCs, metrics and class of a SCoP.
    """
    fmt = _format(fmt)

    def body():
        config = _config()
        scop = _load_scop(scop_file, config)
        analysis = run_analysis(scop, config)
        deps = list(analysis.deps)
        if rar:
            deps = compute_dependences(scop, ALL_KINDS, config.param_min, config.param_span)
        components = [analysis.sccs.members(c) for c in range(analysis.sccs.n_components)]
        if fmt == "json":
            typer.echo(to_json({
                "scop": scop.name,
                "class": analysis.program_class.value,
                "metrics": analysis.metrics.as_dict(),
                "sccs": components,
                "dependences": [
                    {"name": d.name, "source": d.source, "target": d.target, "kind": d.kind,
                     "array": d.array, "depth": d.depth}
                    for d in deps
                ],
            }), nl=False)
        else:
            typer.echo(render_report("analyze", scop=scop, program_class=analysis.program_class.value,
                                     metrics=analysis.metrics.as_dict(), components=components,
                                     deps=deps), nl=False)

    _guard(fmt, body)


@cli.command()
def classify(scop_file: Path = typer.Argument(..., help="SCoP document"), fmt: Optional[str] = FormatOption):
    """
    Print the program class (STEN, LDLC, HPFP or OTHER).
    """
    fmt = _format(fmt)

    def body():
        config = _config()
        analysis = run_analysis(_load_scop(scop_file, config), config)
        if fmt == "json":
            typer.echo(to_json({"scop": analysis.scop.name, "class": analysis.program_class.value,
                                "metrics": analysis.metrics.as_dict()}), nl=False)
        else:
            typer.echo(analysis.program_class.value)

    _guard(fmt, body)


def _schedule_config(config_file, machine, recipe, coeff_window, k, seedcheck_params, time_budget) -> RunConfig:
    return _config(config_file, machine=machine, recipe=recipe, coeff_window=coeff_window, k=k,
                   verify_params=seedcheck_params or None, time_budget=time_budget)


@cli.command()
def schedule(
    scop_file: Path = typer.Argument(..., help="SCoP document"),
    machine: Optional[str] = typer.Option(None, "--machine", "-m", help="Machine file or preset (skx, knl, p9)"),
    recipe: Optional[str] = typer.Option(None, "--recipe", "-r",
                                         help="auto | sten | ldlc | hpfp | other | custom:<IDIOM,...>"),
    coeff_window: Optional[str] = typer.Option(None, "--coeff-window", help="Coefficient bounds lo:hi"),
    k: Optional[int] = typer.Option(None, "--k", help="Satisfaction big constant"),
    seedcheck_params: Optional[List[int]] = typer.Option(None, "--seedcheck-params",
                                                          help="Parameter value for the oracle (repeatable)"),
    time_budget: Optional[float] = typer.Option(None, "--time-budget", help="Seconds per objective level"),
    config_file: Optional[Path] = typer.Option(None, "--config", help="JSON run configuration"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the schedule document here"),
    report: Optional[Path] = typer.Option(None, "--report", help="Write the JSON report here"),
    dump_lp: Optional[Path] = typer.Option(None, "--dump-lp", help="Write the solved system in LP form"),
    fmt: Optional[str] = FormatOption,
):
    """
    Schedule a SCoP and verify the result.
    """
    fmt = _format(fmt, config_file)

    def body():
        config = _schedule_config(config_file, machine, recipe, coeff_window, k, seedcheck_params, time_budget)
        scop = _load_scop(scop_file, config)
        result = run_schedule(scop, config=config)
        if dump_lp is not None:
            dump_lp.write_text(result.space.sys.dump_lp(), encoding="utf-8")
        doc = serialize_schedules(scop, result.schedules)
        if output is not None:
            output.write_text(doc, encoding="utf-8")
        if report is not None:
            report.write_text(to_json(result.as_dict()), encoding="utf-8")
        if fmt == "json":
            data = result.as_dict()
            data["document"] = doc
            typer.echo(to_json(data), nl=False)
        else:
            typer.echo(render_report("schedule", result=result, params=config.verify_params), nl=False)
            if output is None:
                typer.echo("")
                typer.echo(doc, nl=False)

    _guard(fmt, body)


@cli.command()
def verify(
    scop_file: Path = typer.Argument(..., help="SCoP document"),
    schedule_file: Path = typer.Argument(..., help="Schedule document"),
    params: Optional[List[int]] = typer.Option(None, "--params", "-p", help="Parameter value (repeatable)"),
    rar: bool = typer.Option(False, "--rar", help="Also keep read-after-read order"),
    fmt: Optional[str] = FormatOption,
):
    """
    Check a schedule against the instance-level oracle.
    """
    fmt = _format(fmt)

    def body():
        config = _config(verify_params=params or None)
        scop = _load_scop(scop_file, config)
        schedules = parse_schedules(_read(schedule_file), scop)
        result = run_verify(scop, schedules, config.verify_params, include_rar=rar, cap=config.enum_cap)
        if fmt == "json":
            data = result.as_dict()
            data["scop"] = scop.name
            typer.echo(to_json(data), nl=False)
        else:
            typer.echo(render_report("verify", scop=scop, report=result), nl=False)
        if not result.ok:
            raise typer.Exit(1)

    _guard(fmt, body)


@cli.command()
def rcou(
    scop_file: Path = typer.Argument(..., help="SCoP document"),
    schedule_file: Path = typer.Argument(..., help="Schedule document"),
    machine: Optional[str] = typer.Option(None, "--machine", "-m", help="Machine file or preset"),
    unroll_params: Optional[int] = typer.Option(None, "--unroll-params",
                                                help="Parameter value for loop-bound decisions"),
    fmt: Optional[str] = FormatOption,
):
    """
    Unroll-and-jam factors for every loop nest of a schedule.
    """
    fmt = _format(fmt)

    def body():
        config = _config(machine=machine, unroll_params=unroll_params)
        scop = _load_scop(scop_file, config)
        schedules = parse_schedules(_read(schedule_file), scop)
        result = report_rcou(scop, schedules, config.resolve_machine(), config.unroll_params)
        if fmt == "json":
            typer.echo(to_json(result.as_dict()), nl=False)
        else:
            typer.echo(render_report("rcou", report=result), nl=False)

    _guard(fmt, body)


@cli.command()
def explain(
    scop_file: Path = typer.Argument(..., help="SCoP document"),
    machine: Optional[str] = typer.Option(None, "--machine", "-m", help="Machine file or preset"),
    recipe: Optional[str] = typer.Option(None, "--recipe", "-r", help="Recipe selector"),
    levels: bool = typer.Option(False, "--levels", help="Also solve every recipe prefix"),
    fmt: Optional[str] = FormatOption,
):
    """
    Show what each idiom of the recipe adds to the system.
    """
    fmt = _format(fmt)

    def body():
        config = _config(machine=machine, recipe=recipe)
        scop = _load_scop(scop_file, config)
        analysis = run_analysis(scop, config)
        chosen = parse_recipe(config.recipe, analysis.metrics, config.resolve_machine())
        space, reports = assemble(analysis, chosen.idioms, chosen.machine, config)
        objectives = [o.label for o in space.sys.objectives]
        stages = []
        if levels:
            for n in range(1, len(chosen.idioms) + 1):
                res = schedule_prefix(scop, chosen, n, config, analysis)
                stages.append({"k": n, "schedules": res.schedules})
        if fmt == "json":
            typer.echo(to_json({
                "scop": scop.name,
                "recipe": chosen.as_dict(),
                "idioms": [r.as_dict() for r in reports],
                "objectives": objectives,
                "levels": [{"k": s["k"], "schedules": [x.matrix() for x in s["schedules"]]} for s in stages],
            }), nl=False)
        else:
            typer.echo(render_report("explain", scop=scop, recipe=chosen, reports=reports,
                                     objectives=objectives, levels=stages), nl=False)

    _guard(fmt, body)


def _pipeline_one(path: Path, out_dir: Path, config: RunConfig) -> int:
    """Write one bundle; returns the exit code for this SCoP."""
    bundle = out_dir / path.stem
    bundle.mkdir(parents=True, exist_ok=True)
    try:
        scop = _load_scop(path, config)
        analysis = run_analysis(scop, config)
        (bundle / "analysis.json").write_text(to_json({
            "scop": scop.name,
            "class": analysis.program_class.value,
            "metrics": analysis.metrics.as_dict(),
            "dependences": [d.describe() for d in analysis.deps],
        }), encoding="utf-8")
        result = run_schedule(scop, config=config, analysis=analysis)
        (bundle / "schedule.txt").write_text(serialize_schedules(scop, result.schedules), encoding="utf-8")
        (bundle / "report.json").write_text(to_json(result.as_dict()), encoding="utf-8")
        annotations = report_rcou(scop, result.schedules, result.recipe.machine, config.unroll_params)
        (bundle / "rcou.json").write_text(to_json(annotations.as_dict()), encoding="utf-8")
    except PolyvocabError as exc:
        (bundle / "error.json").write_text(to_json(error_payload(exc)), encoding="utf-8")
        logger.error("%s: %s", path.name, exc)
        return exc.exit_code
    return 0


@cli.command()
def pipeline(
    target: Optional[Path] = typer.Argument(
        None, help="SCoP document or a directory of .scop files [default: corpus_dir from config]"),
    out_dir: Path = typer.Option(Path("bundles"), "--out", "-o", help="Bundle directory"),
    machine: Optional[str] = typer.Option(None, "--machine", "-m", help="Machine file or preset"),
    recipe: Optional[str] = typer.Option(None, "--recipe", "-r", help="Recipe selector"),
    config_file: Optional[Path] = typer.Option(None, "--config", help="JSON run configuration"),
    fmt: Optional[str] = FormatOption,
):
    """
    Analysis, schedule, verification and unroll annotations for one SCoP or a corpus.
    """
    fmt = _format(fmt, config_file)

    def body():
        config = _config(config_file, machine=machine, recipe=recipe)
        root = target
        if root is None:
            if config.corpus_dir is None:
                raise ConfigError("no SCoP given and no corpus_dir configured")
            root = Path(config.corpus_dir)
        files = sorted(root.glob("*.scop")) if root.is_dir() else [root]
        if not files:
            raise ConfigError(f"no .scop files under {root}")
        codes = {}
        for path in files:
            codes[path.stem] = _pipeline_one(path, out_dir, config)
        worst = max(codes.values())
        if fmt == "json":
            typer.echo(to_json({"bundles": str(out_dir), "results": codes}), nl=False)
        else:
            for name, code in codes.items():
                typer.echo(f"{name}: {'ok' if code == 0 else f'failed (exit {code})'}")
        if worst:
            raise typer.Exit(worst)

    _guard(fmt, body)


if __name__ == "__main__":
    cli()
