"""Command-line interface.

One executable, ``edacsc``, with subcommands for corpus validation,
augmentation (split / reduce), merging, statistics, training schedules,
running an external corrector, serving the mock corrector, and scoring
predictions.

Options resolve as flag > config file > built-in default.  The config file
is TOML with one table per subcommand path (``[augment.split]``,
``[correct]``, ...) plus ``[global]`` for ``threads``; keys are the CLI
option names with underscores.  Every command that writes an output file
also writes ``<out>.runconfig.json`` holding the fully resolved options,
so a run is reproducible from its artifacts alone.  Failures print one
machine-readable JSON line to stderr and exit 2 (usage), 3 (validation),
4 (corrector protocol), or 5 (I/O).  Set ``EDACSC_LOG`` to adjust log
verbosity (debug, info, warning, error).
"""

import io as _io
import json
import logging
import os
import sys
from typing import Iterable, Iterator, Optional

import click
from click.core import ParameterSource

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .bridge import MockCorrector, SubprocessCorrector, cic_apply, serve_stdio
from .bridge import ON_NONCONVERGENCE
from .corpus import ValidationReport, validate_corpus
from .datasets import (
    PROCEDURES,
    DatasetStats,
    compute_stats,
    find_collisions,
    make_custom_schedule,
    make_schedule,
    merge_corpora,
    write_manifest,
)
from .errors import EdacscError, ValidationError
from .io import (
    FORMATS,
    detect_format,
    read_augmented,
    read_corpus,
    read_predictions,
    read_texts,
    write_corpus,
    write_predictions,
)
from .metrics import auxiliary_filter, format_report, join_predictions, score
from .reduction import ReduceReport, reduce_corpus
from .splitting import ON_DELIMITER_TYPO, SplitReport, split_corpus

log = logging.getLogger("edacsc")


def _setup_logging() -> None:
    level = os.environ.get("EDACSC_LOG", "warning").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING))


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{path}: invalid config file: {exc}") from None


def _section(ctx: click.Context) -> str:
    return ".".join(ctx.command_path.split()[1:])


def _resolved(ctx: click.Context, exclude: tuple = ()) -> dict:
    """Apply config-file values beneath command-line flags."""
    section = ctx.obj.get("config", {})
    for part in _section(ctx).split("."):
        section = section.get(part, {}) if isinstance(section, dict) else {}
    if not isinstance(section, dict):
        section = {}
    params = {}
    for name, value in ctx.params.items():
        if name in exclude:
            continue
        if name in section:
            if ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE:
                if section[name] != value:
                    log.warning(
                        "config value %s.%s=%r overridden by command line %r",
                        _section(ctx), name, section[name], value,
                    )
                params[name] = value
            else:
                params[name] = section[name]
        else:
            params[name] = value
    return params


def _write_snapshot(out_path: str, command: str, params: dict) -> None:
    snapshot = {"tool": "edacsc", "version": __version__, "command": command, "params": params}
    with open(f"{out_path}.runconfig.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(snapshot, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(obj: dict) -> None:
    click.echo(json.dumps(obj, ensure_ascii=False))


def _threads(ctx: click.Context) -> int:
    return ctx.obj["threads"]


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="TOML config file; flags still win.")
@click.option("--threads", type=int, default=None,
              help="Worker threads for augmentation (default: CPU count).")
@click.version_option(version=__version__, prog_name="edacsc")
@click.pass_context
def cli(ctx, config_path, threads):
    """Corpus augmentation and evaluation tools for spelling correction."""
    _setup_logging()
    config = _load_config(config_path)
    if threads is None:
        global_section = config.get("global", {})
        threads = global_section.get("threads") if isinstance(global_section, dict) else None
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ValidationError("threads must be >= 1")
    ctx.obj = {"config": config, "threads": threads}


@cli.command()
@click.option("--in", "input", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None,
              help="Input format (default: by file extension).")
@click.option("--max-violations", type=int, default=20, show_default=True,
              help="How many violations to list in the report.")
@click.pass_context
def validate(ctx, input, fmt, max_violations):
    """Check corpus invariants and print a JSON report.

    Exits 0 on a clean corpus and 3 when any record is malformed,
    misaligned, empty, or duplicated.
    """
    p = _resolved(ctx)
    report = ValidationReport(max_violations=p["max_violations"])

    def on_skip(lineno: int, reason: str) -> None:
        report.record(f"line {lineno}", "malformed-line", reason)

    samples = read_corpus(p["input"], fmt=p["fmt"], strict=False, on_skip=on_skip)
    validate_corpus(samples, report=report)
    _emit(report.to_json())
    return 0 if report.ok else 3


@cli.group()
def augment():
    """Corpus expansion commands."""


@augment.command(name="split")
@click.option("--in", "input", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "output", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None,
              help="Input format (default: by file extension).")
@click.option("--delims", type=click.Path(exists=True, dir_okay=False), default=None,
              help="File with one delimiter per line (default: built-in set).")
@click.option("--attach/--no-attach", "attach", default=True, show_default=True,
              help="Keep each delimiter at the end of its segment.")
@click.option("--min-seg", type=int, default=2, show_default=True,
              help="Merge segments shorter than this into a neighbor.")
@click.option("--keep-error-free", type=bool, default=True, show_default=True,
              help="Emit segments that contain no typo.")
@click.option("--on-delim-typo", type=click.Choice(ON_DELIMITER_TYPO), default="skip",
              show_default=True, help="What to do when a typo overlaps a delimiter.")
@click.pass_context
def augment_split(ctx, input, output, fmt, delims, attach, min_seg, keep_error_free, on_delim_typo):
    """Split long samples at aligned punctuation into short samples."""
    p = _resolved(ctx)
    delimiters = _read_delimiters(p["delims"]) if p["delims"] else None
    report = SplitReport()
    records = split_corpus(
        read_corpus(p["input"], fmt=p["fmt"]),
        delimiters=delimiters,
        attach_delimiter=p["attach"],
        min_segment_chars=p["min_seg"],
        emit_error_free_segments=p["keep_error_free"],
        on_delimiter_typo=p["on_delim_typo"],
        report=report,
        threads=_threads(ctx),
    )
    write_corpus(records, p["output"])
    _write_snapshot(p["output"], "augment split", p)
    _emit(report.to_json())
    return 0


def _read_delimiters(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        delims = [line.rstrip("\n") for line in fh]
    delims = [d for d in delims if d]
    if not delims:
        raise ValidationError(f"{path}: no delimiters found")
    return delims


@augment.command(name="reduce")
@click.option("--in", "input", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "output", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None,
              help="Input format (default: by file extension).")
@click.option("--max-typos", type=int, default=2, show_default=True,
              help="Largest retained-typo count for proper variants.")
@click.option("--keep-original", type=bool, default=True, show_default=True,
              help="Append the unreduced sample after its variants.")
@click.option("--max-origin-typos", type=int, default=None,
              help="Pass samples with more typos than this through unexpanded.")
@click.pass_context
def augment_reduce(ctx, input, output, fmt, max_typos, keep_original, max_origin_typos):
    """Expand multi-typo samples into lower-typo variants."""
    p = _resolved(ctx)
    report = ReduceReport()
    records = reduce_corpus(
        read_corpus(p["input"], fmt=p["fmt"]),
        max_variant_typos=p["max_typos"],
        keep_original=p["keep_original"],
        max_origin_typos=p["max_origin_typos"],
        report=report,
        threads=_threads(ctx),
    )
    write_corpus(records, p["output"])
    _write_snapshot(p["output"], "augment reduce", p)
    _emit(report.to_json())
    return 0


@cli.command()
@click.option("--a", "input_a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "input_b", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "output", required=True, type=click.Path(dir_okay=False))
@click.option("--format-a", type=click.Choice(FORMATS), default=None)
@click.option("--format-b", type=click.Choice(FORMATS), default=None)
@click.pass_context
def merge(ctx, input_a, input_b, output, format_a, format_b):
    """Concatenate two corpora without deduplication.

    Ids occurring in both inputs are prefixed ``A:`` / ``B:`` by side; all
    other ids pass through unchanged.
    """
    p = _resolved(ctx)
    # Cheap id-only prepass so colliding ids can be rewritten on both sides
    # even though each corpus is streamed exactly once afterwards.
    ids_a = (s.id for s in read_corpus(p["input_a"], fmt=p["format_a"]))
    ids_b = (s.id for s in read_corpus(p["input_b"], fmt=p["format_b"]))
    collisions = find_collisions(ids_a, ids_b)
    merged = merge_corpora(
        read_augmented(p["input_a"], fmt=p["format_a"]),
        read_augmented(p["input_b"], fmt=p["format_b"]),
        collision_ids=collisions,
    )
    merged_stats = DatasetStats()

    def counted():
        for record in merged:
            merged_stats.add(record.sample)
            yield record

    write_corpus(counted(), p["output"])
    _write_snapshot(p["output"], "merge", p)
    _emit({"collisions": len(collisions), "stats": merged_stats.to_json()})
    return 0


@cli.command()
@click.option("--in", "input", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None)
@click.pass_context
def stats(ctx, input, fmt):
    """Print sentence count, average source length, and typo count."""
    p = _resolved(ctx)
    _emit(compute_stats(read_corpus(p["input"], fmt=p["fmt"])).to_json())
    return 0


@cli.command()
@click.option("--procedure", required=True,
              type=click.Choice(sorted(PROCEDURES) + ["custom"]),
              help="Named training procedure, or 'custom' with --stage1/--stage2.")
@click.option("--base", type=str, default=None, help="Unaugmented dataset path.")
@click.option("--short", type=str, default=None, help="Split dataset path.")
@click.option("--reduce", "reduce_", type=str, default=None, help="Reduced dataset path.")
@click.option("--merge", "merge_", type=str, default=None, help="Merged dataset path.")
@click.option("--stage1", type=str, default=None, help="First dataset of a custom schedule.")
@click.option("--stage2", type=str, default=None, help="Second dataset of a custom schedule.")
@click.option("--out", "output", type=click.Path(dir_okay=False), default=None,
              help="Manifest path (default: schedule_<procedure>.json).")
@click.pass_context
def schedule(ctx, procedure, base, short, reduce_, merge_, stage1, stage2, output):
    """Write a training-schedule manifest.

    Single-dataset procedures train from scratch; two-stage procedures
    start the second stage from the best checkpoint of the first.
    """
    p = _resolved(ctx)
    if p["procedure"] == "custom":
        manifest = make_custom_schedule(p["stage1"] or "", p["stage2"] or "")
    else:
        manifest = make_schedule(
            p["procedure"],
            {"base": p["base"], "short": p["short"], "reduce": p["reduce_"], "merge": p["merge_"]},
        )
    out_path = p["output"] or f"schedule_{p['procedure']}.json"
    write_manifest(manifest, out_path)
    _write_snapshot(out_path, "schedule", p)
    _emit({"manifest": out_path, "name": manifest["name"], "stages": len(manifest["stages"])})
    return 0


@cli.command()
@click.option("--cmd", required=True, type=str, help="Corrector command line to spawn.")
@click.option("--in", "input", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "output", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None)
@click.option("--timeout", type=float, default=60.0, show_default=True,
              help="Seconds to wait for each batch of responses.")
@click.option("--batch-size", type=int, default=128, show_default=True)
@click.option("--cic", is_flag=True, default=False,
              help="Apply constrained iterative correction per sentence.")
@click.option("--max-iters", type=int, default=3, show_default=True)
@click.option("--window", type=int, default=1, show_default=True,
              help="Adjacency window for deferring neighboring edits.")
@click.option("--on-nonconvergence", type=click.Choice(ON_NONCONVERGENCE),
              default="accept_last", show_default=True)
@click.pass_context
def correct(ctx, input, output, fmt, cmd, timeout, batch_size, cic, max_iters, window,
            on_nonconvergence):
    """Run an external corrector over a corpus and save its predictions.

    Input records need an ``id`` and either a ``text`` or a ``source``
    field; predictions are written as ``{"id", "prediction"}`` lines.
    """
    p = _resolved(ctx)
    if p["batch_size"] < 1:
        raise ValidationError("batch_size must be >= 1")
    tally = {"sentences": 0, "changed": 0, "converged": 0, "cycles": 0}

    def run() -> Iterator[tuple[str, str]]:
        with SubprocessCorrector(p["cmd"], timeout=p["timeout"]) as corrector:
            if p["cic"]:
                for id_, text in read_texts(p["input"], fmt=p["fmt"]):
                    result = cic_apply(
                        corrector,
                        text,
                        max_iters=p["max_iters"],
                        adjacency_window=p["window"],
                        on_nonconvergence=p["on_nonconvergence"],
                    )
                    tally["sentences"] += 1
                    tally["changed"] += result.text != text
                    tally["converged"] += result.converged
                    tally["cycles"] += result.cycle_detected
                    yield id_, result.text
            else:
                batch: list[tuple[str, str]] = []
                for item in read_texts(p["input"], fmt=p["fmt"]):
                    batch.append(item)
                    if len(batch) == p["batch_size"]:
                        yield from _flush(corrector, batch)
                        batch = []
                if batch:
                    yield from _flush(corrector, batch)

    def _flush(corrector, batch):
        outputs = corrector.correct_batch([text for _, text in batch])
        for (id_, text), out in zip(batch, outputs):
            tally["sentences"] += 1
            tally["changed"] += out != text
            yield id_, out

    write_predictions(run(), p["output"])
    _write_snapshot(p["output"], "correct", p)
    if not p["cic"]:
        tally.pop("converged")
        tally.pop("cycles")
    _emit(tally)
    return 0


@cli.command(name="mock-corrector")
@click.option("--spec", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON mock spec; without it the mock echoes its input.")
def mock_corrector(spec):
    """Serve the deterministic mock corrector over stdin/stdout."""
    corrector = MockCorrector.load_spec(spec) if spec else MockCorrector()
    stdin = _io.TextIOWrapper(sys.stdin.buffer, encoding="utf-8", newline="\n")
    stdout = _io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", newline="\n")
    return serve_stdio(corrector, stdin=stdin, stdout=stdout)


@cli.command(name="eval")
@click.option("--gold", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Gold corpus (id/source/target).")
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Predictions (id/prediction jsonl).")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None,
              help="Gold format (default: by file extension).")
@click.option("--aux-chars", type=click.Path(exists=True, dir_okay=False), default=None,
              help="File of auxiliary characters whose edits are ignored.")
@click.option("--report", "report_fmt", type=click.Choice(("json", "table", "both")),
              default="both", show_default=True)
@click.pass_context
def eval_cmd(ctx, gold, pred, fmt, aux_chars, report_fmt):
    """Score predictions against a gold corpus, sentence level."""
    p = _resolved(ctx)
    sentences = join_predictions(
        read_corpus(p["gold"], fmt=p["fmt"]),
        read_predictions(p["pred"]),
    )
    if p["aux_chars"]:
        with open(p["aux_chars"], "r", encoding="utf-8") as fh:
            aux = frozenset(ch for ch in fh.read() if not ch.isspace())
        sentences = list(auxiliary_filter(sentences, aux))
    report = score(sentences)
    if p["report_fmt"] in ("json", "both"):
        _emit(report.to_json())
    if p["report_fmt"] in ("table", "both"):
        click.echo(format_report(report))
    return 0


def _error_line(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}, ensure_ascii=False), file=sys.stderr)


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="edacsc", standalone_mode=False)
        return rv if isinstance(rv, int) else 0
    except click.exceptions.Abort:
        return 130
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return 2
    except EdacscError as exc:
        _error_line(exc.kind, str(exc))
        return exc.exit_code
    except BrokenPipeError:
        return 5
    except OSError as exc:
        _error_line("io", str(exc))
        return 5


if __name__ == "__main__":
    sys.exit(main())
