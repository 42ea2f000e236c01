import csv
import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

import numpy as np
import typer  # type: ignore

from .actions import equivalent_actions, summarize_action
from .circlefield import TWO_PI, CHECK_GRID, ExactField, IntervalField, find_interval_zeros, find_zeros
from .codec import (
    ACTION_SCHEMA,
    FIELD_SCHEMA,
    GRAPH_SCHEMA,
    artifact_kind,
    dumps_canonical,
    interval_invariants_to_json,
    invariants_to_json,
    key_to_json,
    load_file,
    parse_action,
    parse_field,
    parse_graph,
)
from .config import DEFAULT_CONFIG_FILE, Tolerances, load_tolerances
from .invariants import (
    AmbiguousMatch,
    canonical_key,
    equivalent_interval,
    equivalent_invariants,
    interval_invariants,
    invariants,
)
from .lattice import (
    GluingGraph,
    equivalent_graphs,
    is_volume_preserving,
    level,
    summarize_topology,
    validate_graph,
)
from .logging import setup_logging

logger = logging.getLogger("sln_atlas")

EXIT_OK = 0
EXIT_NOT_EQUIVALENT = 1
EXIT_INVALID = 2
EXIT_AMBIGUOUS = 3

app = typer.Typer(help="Invariants and classification of SL(n,R)-actions and lattice gluing graphs")
lattice_app = typer.Typer(help="Gluing graphs of actions of finite-index subgroups of SL(n,Z)")
app.add_typer(lattice_app, name="lattice")


@dataclass
class Settings:
    config: Path = DEFAULT_CONFIG_FILE


def _tolerances(ctx: typer.Context, tol_zero: Optional[float], tol_match: Optional[float]) -> Tolerances:
    settings = ctx.obj if isinstance(ctx.obj, Settings) else Settings()
    return load_tolerances(settings.config, tol_zero, tol_match)


def _emit(obj: Any) -> None:
    typer.echo(dumps_canonical(obj), nl=False)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """ Invalid input exits with 2, an ambiguous comparison with 3 """
    try:
        yield
    except AmbiguousMatch as exc:
        logger.critical(f"ambiguous comparison: {exc}")
        raise typer.Exit(code=EXIT_AMBIGUOUS)
    except ValueError as exc:
        logger.critical(f"{type(exc).__name__}: {exc}")
        raise typer.Exit(code=EXIT_INVALID)


def _write_samples(path: Path, field) -> None:
    if isinstance(field, IntervalField):
        points, header = np.linspace(*field.domain, CHECK_GRID), ("t", "X")
    else:
        points, header = np.linspace(0.0, TWO_PI, CHECK_GRID, endpoint=False), ("theta", "f")
    values = field(points)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows((format(x, ".17g"), format(y, ".17g")) for x, y in zip(points, values))
    logger.debug(f"wrote {len(points)} samples to {path}")


def _field_report(field, tolerances: Tolerances) -> Dict[str, Any]:
    if isinstance(field, ExactField):
        inv = invariants(field, tolerances.tol_zero)
        thetas = [z.theta for z in find_zeros(field, tolerances.tol_zero)] if inv.k else []
        return {
            "schema": FIELD_SCHEMA,
            **invariants_to_json(inv, thetas),
            "canonical_key": key_to_json(canonical_key(inv, tolerances.tol_match)),
        }
    inv = interval_invariants(field, tolerances.tol_zero)
    positions = [z.theta for z in find_interval_zeros(field, tolerances.tol_zero)]
    return {"schema": FIELD_SCHEMA, "kind": "interval", **interval_invariants_to_json(inv, positions)}


@app.callback()
def callback(
    ctx: typer.Context,
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Also print the debug logs"),
    config: Path = typer.Option(DEFAULT_CONFIG_FILE, "--config", help="Path to the yaml tolerance file"),
) -> None:
    setup_logging(verbose)
    ctx.obj = Settings(config)


@app.command("invariants")
def invariants_command(
    ctx: typer.Context,
    path: Path = typer.Argument(..., help="field/v1 file"),
    tol_zero: Optional[float] = typer.Option(None, "--tol-zero", help="Threshold below which Taylor data is zero"),
    tol_match: Optional[float] = typer.Option(None, "--tol-match", help="Relative tolerance of the canonical key"),
    csv_path: Optional[Path] = typer.Option(None, "--csv", help="Also write 1024 plot samples to this CSV file"),
) -> None:
    """
    Print the conjugacy invariants of a circle field (trig) or an interval field (poly)
    """
    with _exit_codes():
        tolerances = _tolerances(ctx, tol_zero, tol_match)
        obj = load_file(path)
        if artifact_kind(obj) != FIELD_SCHEMA:
            raise ValueError(f"{path} is not a field/v1 file")
        field = parse_field(obj)
        report = _field_report(field, tolerances)
        if csv_path is not None:
            _write_samples(csv_path, field)
    _emit(report)


def _compare_fields(a, b, tolerances: Tolerances, allow_flip: bool) -> Dict[str, Any]:
    if isinstance(a, ExactField) and isinstance(b, ExactField):
        ia, ib = invariants(a, tolerances.tol_zero), invariants(b, tolerances.tol_zero)
        keys = [key_to_json(canonical_key(i, tolerances.tol_match)) for i in (ia, ib)]
        return {"keys": keys, "equivalent": equivalent_invariants(ia, ib, tolerances.tol_match)}
    if isinstance(a, IntervalField) and isinstance(b, IntervalField):
        return {"equivalent": equivalent_interval(a, b, allow_flip, tolerances.tol_match)}
    raise ValueError("cannot compare a circle field with an interval field")


def _valid_graph(path: Path) -> GluingGraph:
    obj = load_file(path)
    if artifact_kind(obj) != GRAPH_SCHEMA:
        raise ValueError(f"{path} is not a graph/v1 file")
    graph = parse_graph(obj)
    if diagnostics := validate_graph(graph):
        raise ValueError(f"{path}: invalid graph\n" + "\n".join(str(d) for d in diagnostics))
    return graph


def _verdict(result: Dict[str, Any]) -> None:
    _emit(result)
    if not result["equivalent"]:
        raise typer.Exit(code=EXIT_NOT_EQUIVALENT)


@app.command()
def equiv(
    ctx: typer.Context,
    a_path: Path = typer.Argument(..., help="First field, action or graph file"),
    b_path: Path = typer.Argument(..., help="Second file, of the same schema"),
    tol_zero: Optional[float] = typer.Option(None, "--tol-zero", help="Threshold below which Taylor data is zero"),
    tol_match: Optional[float] = typer.Option(None, "--tol-match", help="Relative matching tolerance"),
    allow_flip: bool = typer.Option(False, "--allow-flip", help="Interval fields may be compared after t -> -t"),
) -> None:
    """
    Decide whether two artifacts are equivalent: exit 0 if so, 1 if not, 3 if ambiguous
    """
    with _exit_codes():
        tolerances = _tolerances(ctx, tol_zero, tol_match)
        a, b = load_file(a_path), load_file(b_path)
        if (kind := artifact_kind(a)) != artifact_kind(b):
            raise ValueError(f"{a_path} and {b_path} have different schemas")
        if kind == FIELD_SCHEMA:
            result = _compare_fields(parse_field(a), parse_field(b), tolerances, allow_flip)
        elif kind == ACTION_SCHEMA:
            action_a, action_b = parse_action(a), parse_action(b)
            result = {
                "summaries": [asdict(summarize_action(x)) for x in (action_a, action_b)],
                "equivalent": equivalent_actions(action_a, action_b, tolerances.tol_match),
            }
        else:
            graph_a, graph_b = _valid_graph(a_path), _valid_graph(b_path)
            result = {
                "levels": [level(graph_a), level(graph_b)],
                "equivalent": equivalent_graphs(graph_a, graph_b, tolerances.tol_match),
            }
    _verdict({"schema": kind, **result})


@app.command()
def classify(path: Path = typer.Argument(..., help="action/v1 file")) -> None:
    """
    Classify an action: manifold, fixed points, Hopf and projective structure
    """
    with _exit_codes():
        obj = load_file(path)
        if artifact_kind(obj) != ACTION_SCHEMA:
            raise ValueError(f"{path} is not an action/v1 file")
        action = parse_action(obj)
        summary = summarize_action(action)
    _emit({"schema": ACTION_SCHEMA, "n": action.n, **asdict(summary)})


@lattice_app.command()
def check(path: Path = typer.Argument(..., help="graph/v1 file")) -> None:
    """
    Validate a gluing graph and list every violated constraint
    """
    with _exit_codes():
        graph = parse_graph(load_file(path))
        diagnostics = validate_graph(graph)
    _emit({"valid": not diagnostics, "diagnostics": [{"where": d.where, "message": d.message} for d in diagnostics]})
    if diagnostics:
        raise typer.Exit(code=EXIT_INVALID)


@lattice_app.command("level")
def level_command(path: Path = typer.Argument(..., help="graph/v1 file")) -> None:
    """
    Congruence level of the marked points
    """
    with _exit_codes():
        graph = _valid_graph(path)
    _emit({"level": level(graph)})


@lattice_app.command()
def volume(
    ctx: typer.Context,
    path: Path = typer.Argument(..., help="graph/v1 file"),
    tol_zero: Optional[float] = typer.Option(None, "--tol-zero", help="Tolerance on the blow-up weight"),
) -> None:
    """
    Whether the glued action preserves volume
    """
    with _exit_codes():
        tolerances = _tolerances(ctx, tol_zero, None)
        graph = _valid_graph(path)
    _emit({"volume_preserving": is_volume_preserving(graph, tolerances.tol_zero)})


@lattice_app.command()
def topology(path: Path = typer.Argument(..., help="graph/v1 file")) -> None:
    """
    Connected components of the glued manifold and their labels
    """
    with _exit_codes():
        graph = _valid_graph(path)
    summary = summarize_topology(graph)
    _emit({"components": [asdict(component) for component in summary.components]})


@lattice_app.command("equiv")
def lattice_equiv(
    ctx: typer.Context,
    a_path: Path = typer.Argument(..., help="First graph/v1 file"),
    b_path: Path = typer.Argument(..., help="Second graph/v1 file"),
    tol_match: Optional[float] = typer.Option(None, "--tol-match", help="Relative matching tolerance"),
) -> None:
    """
    Decide whether two gluing graphs give equivalent actions
    """
    with _exit_codes():
        tolerances = _tolerances(ctx, None, tol_match)
        graph_a, graph_b = _valid_graph(a_path), _valid_graph(b_path)
        equivalent = equivalent_graphs(graph_a, graph_b, tolerances.tol_match)
    _verdict({"schema": GRAPH_SCHEMA, "levels": [level(graph_a), level(graph_b)], "equivalent": equivalent})


def main() -> None:
    app()


if __name__ == "__main__":
    app()
