"""Command line: construct, verify, expand and export.

Exit codes: 0 success, 1 verification or pipeline failure, 2 usage or
configuration error.  Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click

from .config import RunConfig
from .errors import ConfigError, FrameForgeError, InvalidArgument

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
RESULT_FILE = "result.json"
VERIFY_FILE = "verify.json"


def _error(exc: BaseException, code: int, out: Path | None = None):
    from .serialize import dumps, write_json

    payload = exc.to_dict() if isinstance(exc, FrameForgeError) else {
        "error": type(exc).__name__, "message": str(exc)}
    payload["exit_code"] = code
    click.echo(dumps(payload), err=True, nl=False)
    if out is not None:
        try:
            write_json(out / "error.json", payload)
        except OSError:
            pass
    sys.exit(code)


def _threads():
    raw = os.environ.get("FRAMEFORGE_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        _error(ConfigError(f"FRAMEFORGE_THREADS must be a positive integer, got {raw!r}"), EXIT_USAGE)
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _load_result(path: str):
    from .serialize import FormatError, load_result

    if not path or not path.strip():
        _error(InvalidArgument("result path is empty"), EXIT_USAGE)
    p = Path(path)
    if p.is_dir():
        p = p / RESULT_FILE
    if not p.is_file():
        _error(InvalidArgument(f"result file not found: {p}"), EXIT_USAGE)
    try:
        return load_result(p), p
    except (FormatError, ConfigError, KeyError, TypeError, ValueError) as exc:
        _error(exc, EXIT_USAGE)


@click.group()
@click.option("--quiet", is_flag=True, help="Only print errors and the final verdict.")
@click.pass_context
def main(ctx, quiet):
    """Build and check frames of exponentials and of translates."""
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet
    ctx.obj["threads"] = _threads()
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@main.command()
@click.option("--config", "config_path", required=True, help="Flat key = value configuration file.")
@click.option("--out", default=None, help="Output directory (overrides the config).")
@click.option("--seed", type=int, default=None, help="Random seed (overrides the config).")
@click.option("--quiet", is_flag=True, help="Suppress the summary table.")
@click.pass_context
def construct(ctx, config_path, out, seed, quiet):
    """Run the construction and write result.json plus CSV tables."""
    from .pipeline import construct as run
    from .pipeline import summary_table
    from .serialize import export_result, result_to_json, write_json

    quiet = quiet or ctx.obj["quiet"]
    try:
        cfg = RunConfig.load(config_path)
        over = {k: v for k, v in (("out", out), ("seed", seed)) if v is not None}
        if over:
            cfg = cfg.replace(**over)
    except ConfigError as exc:
        _error(exc, EXIT_USAGE)
    outdir = Path(cfg.out)
    try:
        result = run(cfg)
    except Exception as exc:  # every pipeline error becomes structured output
        _error(exc, EXIT_FAIL, outdir)
    write_json(outdir / RESULT_FILE, result_to_json(result))
    export_result(result, outdir)
    if not quiet:
        click.echo(summary_table(result))
        if result.relaxed:
            click.echo(f"{len(result.relaxed)} rules relaxed ({cfg.regime} regime)")
    failed = result.report.failures
    click.echo(f"wrote {outdir / RESULT_FILE}; construction checks "
               f"{'passed' if not failed else 'failed: ' + ', '.join(c.name for c in failed)}")
    sys.exit(EXIT_OK if not failed else EXIT_FAIL)


@main.command()
@click.argument("result_path")
@click.option("--out", default=None, help="Directory for verify.json (default: next to the result).")
@click.option("--seed", type=int, default=None, help="Seed for the random test functions.")
@click.option("--quiet", is_flag=True, help="Only print failures and the verdict.")
@click.option("--no-translate", is_flag=True, help="Skip the translate-side suite.")
@click.pass_context
def verify(ctx, result_path, out, seed, quiet, no_translate):
    """Recompute every check from a result file."""
    from .pipeline import verify as run
    from .serialize import write_json

    quiet = quiet or ctx.obj["quiet"]
    result, path = _load_result(result_path)
    outdir = Path(out) if out else path.parent
    try:
        v = run(result, seed, translate=not no_translate)
    except Exception as exc:
        _error(exc, EXIT_FAIL, outdir)
    rep = v.report
    write_json(outdir / VERIFY_FILE, rep.to_json())
    for c in rep.checks:
        if quiet and c.status != "fail":
            continue
        click.echo(f"{c.status.upper():6s} {c.name}: {c.value:.6g} {c.relation} {c.bound:.6g}")
    if rep.passed:
        click.echo(f"verification passed ({len(rep.checks)} checks)")
        sys.exit(EXIT_OK)
    click.echo("verification failed: " + ", ".join(c.name for c in rep.failures))
    sys.exit(EXIT_FAIL)


@main.command()
@click.argument("result_path")
@click.option("--f", "fspec", default="x:1", show_default=True,
              help="Test function: zero, phi:k, x:k or span:seed.")
@click.option("--J", "J", type=int, default=None, help="Number of partial sums (default all).")
@click.option("--out", default=None, help="CSV file (default stdout).")
@click.option("--seed", type=int, default=0)
@click.option("--no-translate", is_flag=True, help="Weighted side only.")
@click.pass_context
def expand(ctx, result_path, fspec, J, out, seed, no_translate):
    """Print (j, lam, |c|, error) rows for the weighted and translate sides."""
    from .pipeline import expand_both
    from .serialize import _csv_text, export_profile

    result, _ = _load_result(result_path)
    if J is not None and J < 0:
        _error(InvalidArgument("J must be nonnegative"), EXIT_USAGE)
    try:
        weighted, translated, clamped = expand_both(result, fspec, J, seed, translate=not no_translate)
    except InvalidArgument as exc:
        _error(exc, EXIT_USAGE)
    except FrameForgeError as exc:
        _error(exc, EXIT_FAIL)
    if clamped:
        click.echo(f"warning: J={J} exceeds |Lambda|={len(result.points)}; clamped", err=True)
    if out:
        export_profile(out, weighted, translated)
        return
    header = ["j", "lam", "abs_c", "error"]
    rows = [list(r) for r in weighted.rows()]
    if translated is not None:
        header += ["abs_c_translate", "error_translate"]
        for r, t in zip(rows, translated.rows()):
            r += [t[2], t[3]]
    click.echo(_csv_text(header, rows), nl=False)
    if translated is not None and not ctx.obj["quiet"]:
        click.echo(f"translate window tolerance {translated.tolerance:.4g}; "
                   f"max profile mismatch {translated.mismatch:.4g}", err=True)


@main.command()
@click.argument("result_path")
@click.option("--out", default=None, help="Output directory (default: next to the result).")
@click.option("--no-translate", is_flag=True, help="Skip g and the dual images.")
def export(result_path, out, no_translate):
    """Write the CSV tables and translate-side samples for plotting."""
    from .frame import FrameSystem
    from .pipeline import translate_frame
    from .serialize import export_result, export_translate

    result, path = _load_result(result_path)
    outdir = Path(out) if out else path.parent
    files = export_result(result, outdir)
    if not no_translate:
        try:
            tf = translate_frame(FrameSystem(result), result.config)
        except FrameForgeError as exc:
            _error(exc, EXIT_FAIL, outdir)
        files += export_translate(tf, outdir)
    for f in files:
        click.echo(str(f))


if __name__ == "__main__":
    main()
