"""
Command-line interface for turnstilesampler.

Builds sketches from stream files, merges and differences them, extracts
samples and answers inverse-distribution and Jaccard queries. Errors map
to exit codes: 2 for input, configuration, container and merge problems,
3 for counter capacity, 4 for failed extraction or estimation.
"""

import functools
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional

import click
from click import echo, secho
from rich.console import Console
from rich.table import Table

from .core import container
from .core.config import SamplerSettings, build_config, load_settings
from .core.errors import TurnstileSamplerError
from .core.sampler import Sample, SamplerSketch
from .core.streamfile import iter_updates
from .stats import (
    QueryResult,
    inverse_heavy_hitters,
    inverse_point,
    inverse_quantile,
    inverse_range,
    jaccard as jaccard_estimate,
)
from .utils.logging import get_logger, setup_logging
from .utils.metrics import metrics_collector

logger = get_logger(__name__)

SKETCH_PATH = click.Path(exists=True, dir_okay=False, path_type=Path)


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Report library errors on stderr and exit with their code."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except TurnstileSamplerError as e:
            logger.error("command_failed", error=str(e), error_type=type(e).__name__)
            secho(f"Error: {e}", fg="red", err=True)
            sys.exit(e.exit_code)

    return wrapper


def _settings(ctx: click.Context) -> SamplerSettings:
    return ctx.obj["settings"]


def _write_metrics(path: Optional[Path]) -> None:
    if path is not None:
        path.write_text(metrics_collector.export_metrics(), encoding="utf-8")


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, frozenset):
        return " ".join(str(i) for i in sorted(value))
    return str(value)


def _echo_result(result: QueryResult) -> None:
    echo(_format_value(result.value))
    echo(f"# error_bound\t{result.error_bound!r}")


def _sample_lines(sample: Sample) -> List[str]:
    level = "none" if sample.level is None else str(sample.level)
    lines = [
        f"# level\t{level}",
        f"# whole_stream\t{str(sample.whole_stream).lower()}",
        f"# l0_estimate\t{sample.l0_estimate!r}",
        f"# size\t{len(sample)}",
        f"# band\t{sample.band[0]}\t{sample.band[1]}",
    ]
    lines.extend(f"# warning\t{w}" for w in sample.warnings)
    lines.extend(f"{k}\t{c}" for k, c in sample.items())
    return lines


@click.group()
@click.version_option(prog_name="turnstilesampler")
@click.option(
    "--config",
    "-c",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="YAML file with default settings",
)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]),
    default=None,
    help="Logging level",
)
@click.option(
    "--log-format",
    type=click.Choice(["json", "console"]),
    default=None,
    help="Log output format",
)
@click.option(
    "--metrics-out",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Write Prometheus metrics here when the command finishes",
)
@click.pass_context
@handle_errors
def cli(
    ctx: click.Context,
    config: Optional[Path],
    log_level: Optional[str],
    log_format: Optional[str],
    metrics_out: Optional[Path],
) -> None:
    """
    turnstilesampler - exact samples from turnstile streams.

    Sketch streams of (value, count) updates, merge sketches, and extract
    samples of distinct values with their exact total counts.
    """
    settings = load_settings(config)
    setup_logging(
        level=log_level or settings.log_level,
        format_type=log_format or settings.log_format,
    )
    ctx.obj = {"settings": settings}
    ctx.call_on_close(lambda: _write_metrics(metrics_out))


@cli.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Stream file, one '<k> <c>' update per line")
@click.option("--model", type=click.Choice(["strict", "nonstrict"]), default="strict",
              help="Turnstile model")
@click.option("--recovery", type=click.Choice(["frs", "efrs"]), default="frs",
              help="Per-level recovery structure")
@click.option("--k", "k", type=int, required=True, help="Sample size K")
@click.option("--delta", type=float, default=0.1, show_default=True, help="Failure probability")
@click.option("--eps", type=float, default=None, help="Partial-sample loss (efrs only)")
@click.option("--seed", type=int, default=None, help="Master seed")
@click.option("--m", "universe", type=int, default=None, help="Values lie in [1, m)")
@click.option("--r", "max_count", type=int, default=None, help="Largest |count| per update")
@click.option("--nmax", "max_length", type=int, default=None, help="Stream length bound")
@click.option("--l0", "l0_kind", type=click.Choice(["amplified", "exact"]), default=None,
              help="L0 estimator")
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path),
              help="Container to write")
@click.pass_context
@handle_errors
def build(
    ctx: click.Context,
    input_path: Path,
    model: str,
    recovery: str,
    k: int,
    delta: float,
    eps: Optional[float],
    seed: Optional[int],
    universe: Optional[int],
    max_count: Optional[int],
    max_length: Optional[int],
    l0_kind: Optional[str],
    out: Path,
) -> None:
    """Sketch a stream file into a container."""
    settings = _settings(ctx)
    config = build_config(
        model=model,
        recovery=recovery,
        k=k,
        delta=delta,
        eps=eps,
        seed=settings.seed if seed is None else seed,
        universe=settings.universe if universe is None else universe,
        max_count=settings.max_count if max_count is None else max_count,
        max_length=settings.max_length if max_length is None else max_length,
        decay=settings.decay,
        alpha=settings.alpha,
        l0_kind=settings.l0_kind if l0_kind is None else l0_kind,
    )
    sketch = SamplerSketch(config)
    updates = sketch.update_many(iter_updates(input_path, config.universe, config.max_count))
    size = container.save(sketch, out)
    logger.info("sketch_built", input=str(input_path), updates=updates, out=str(out), size=size)
    secho(f"Wrote {size} bytes to {out}", fg="green", err=True)


@cli.command()
@click.option("--sketch", "sketch_path", required=True, type=SKETCH_PATH, help="Container")
@click.option("--out", default="-", show_default=True, help="TSV output path or - for stdout")
@click.option("--size", "k_prime", type=int, default=None, help="Sample size K' <= K")
@handle_errors
def sample(sketch_path: Path, out: str, k_prime: Optional[int]) -> None:
    """Extract a sample as 'k<TAB>C_k' lines sorted by k."""
    result = container.load(sketch_path).extract(k_prime)
    with click.open_file(out, "w", encoding="utf-8") as fh:
        for line in _sample_lines(result):
            fh.write(line + "\n")


@cli.command()
@click.option("--a", "a_path", required=True, type=SKETCH_PATH, help="First container")
@click.option("--b", "b_path", required=True, type=SKETCH_PATH, help="Second container")
@click.option("--op", type=click.Choice(["union", "diff"]), default="union", show_default=True,
              help="union adds the streams, diff subtracts b from a (nonstrict only)")
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path),
              help="Container to write")
@handle_errors
def merge(a_path: Path, b_path: Path, op: str, out: Path) -> None:
    """Union or difference of two compatible sketches."""
    a, b = container.load(a_path), container.load(b_path)
    merged = a.merge(b, 1 if op == "union" else -1)
    size = container.save(merged, out)
    logger.info("sketches_merged", op=op, out=str(out), size=size)
    secho(f"Wrote {size} bytes to {out}", fg="green", err=True)


@cli.group()
@click.option("--sketch", "sketch_path", required=True, type=SKETCH_PATH, help="Container")
@click.option("--size", "k_prime", type=int, default=None, help="Sample size K' <= K")
@click.pass_context
def query(ctx: click.Context, sketch_path: Path, k_prime: Optional[int]) -> None:
    """Inverse-distribution queries on a sketch's sample."""
    ctx.obj["sketch_path"] = sketch_path
    ctx.obj["k_prime"] = k_prime


def _query_sample(ctx: click.Context) -> Sample:
    return container.load(ctx.obj["sketch_path"]).extract(ctx.obj["k_prime"])


@query.command("inverse-point")
@click.option("--freq", type=int, required=True, help="Frequency i")
@click.pass_context
@handle_errors
def query_inverse_point(ctx: click.Context, freq: int) -> None:
    """Fraction of values whose total equals --freq."""
    _echo_result(inverse_point(_query_sample(ctx), freq))


@query.command("inverse-range")
@click.option("--lo", type=int, required=True)
@click.option("--hi", type=int, required=True)
@click.pass_context
@handle_errors
def query_inverse_range(ctx: click.Context, lo: int, hi: int) -> None:
    """Fraction of values whose total lies in [--lo, --hi]."""
    _echo_result(inverse_range(_query_sample(ctx), lo, hi))


@query.command("heavy")
@click.option("--phi", type=float, required=True)
@click.pass_context
@handle_errors
def query_heavy(ctx: click.Context, phi: float) -> None:
    """Frequencies shared by at least a --phi fraction of the values."""
    _echo_result(inverse_heavy_hitters(_query_sample(ctx), phi))


@query.command("quantile")
@click.option("--phi", type=float, required=True)
@click.pass_context
@handle_errors
def query_quantile(ctx: click.Context, phi: float) -> None:
    """Smallest frequency whose cumulative share reaches --phi."""
    _echo_result(inverse_quantile(_query_sample(ctx), phi))


@cli.command()
@click.option("--a", "a_path", required=True, type=SKETCH_PATH, help="First container")
@click.option("--b", "b_path", required=True, type=SKETCH_PATH, help="Second container")
@handle_errors
def jaccard(a_path: Path, b_path: Path) -> None:
    """Jaccard similarity of the supports of two sketched streams."""
    _echo_result(jaccard_estimate(container.load(a_path), container.load(b_path)))


@cli.command()
@click.option("--sketch", "sketch_path", required=True, type=SKETCH_PATH, help="Container")
@handle_errors
def inspect(sketch_path: Path) -> None:
    """Show a container's configuration and geometry."""
    sketch = container.load(sketch_path)
    table = Table(title=str(sketch_path))
    table.add_column("Setting", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in sketch.config.describe().items():
        table.add_row(key, str(value))
    table.add_section()
    for key, value in sketch.get_stats().items():
        table.add_row(key, str(value))
    Console().print(table)


def main() -> None:
    """Main entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
