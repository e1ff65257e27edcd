"""Headless pipeline runner: validate, plot, simulate, export examples, serve.

Exit codes: 0 ok, 1 domain violation, 2 input error, 3 internal error.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from mrseq import engine, model, recon, timeline
from mrseq import phantom as ph
from mrseq.examples import EXAMPLES
from mrseq.pipeline import run_pipeline

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _load_doc(path: str) -> model.SequenceDoc:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        _fail(EXIT_INPUT, f"cannot read {path}: {e}")
    try:
        return model.load(data)
    except model.SchemaError as e:
        _fail(EXIT_INPUT, f"schema error at {e.path}: {e.message}")


def _load_phantom_arg(spec: str) -> ph.Phantom:
    builtins = ph.builtin_phantoms()
    if spec in builtins:
        return builtins[spec]()
    path = Path(spec)
    if not path.exists():
        _fail(EXIT_INPUT,
              f"phantom {spec!r} is neither a built-in ({', '.join(sorted(builtins))}) nor a file")
    try:
        return ph.load_phantom(path.read_bytes())
    except (OSError, ph.PhantomFormatError) as e:
        _fail(EXIT_INPUT, f"cannot load phantom {spec}: {e}")


@click.group()
def main():
    """Design, validate, simulate and reconstruct MRI pulse sequences."""


@main.command()
@click.argument("seq_file", type=click.Path())
def validate(seq_file):
    """Check a sequence file against its scanner limits."""
    doc = _load_doc(seq_file)
    try:
        violations = timeline.validate(doc)
    except model.SchemaError as e:
        _fail(EXIT_INPUT, f"schema error at {e.path}: {e.message}")
    if violations:
        for v in violations:
            click.echo(f"{v.path}: [{v.kind}] {v.message}" + (f" (axis {v.axis})" if v.axis else ""),
                       err=True)
        sys.exit(EXIT_VIOLATION)
    click.echo("ok")


@main.command()
@click.argument("seq_file", type=click.Path())
@click.option("-o", "--output", required=True, type=click.Path(), help="Output series JSON.")
@click.option("--dt", default=None, type=float,
              help="Plot sampling step [s]; defaults to an automatic step that "
                   "keeps long sequences near 200k points.")
def plot(seq_file, output, dt):
    """Write the sequence diagram channels as JSON."""
    doc = _load_doc(seq_file)
    try:
        tl = timeline.flatten(doc)
        series = timeline.diagram_series(tl, dt if dt else timeline.auto_plot_dt(tl))
    except timeline.FlattenError as e:
        _fail(EXIT_VIOLATION, str(e))
    except ValueError as e:
        _fail(EXIT_INPUT, str(e))
    Path(output).write_text(json.dumps(series.to_dict()) + "\n")
    click.echo(f"wrote {output} ({len(series.t)} points)")


@main.command()
@click.argument("seq_file", type=click.Path())
@click.option("--phantom", "phantom_spec", required=True,
              help="Built-in phantom id or phantom file path.")
@click.option("-o", "--output", required=True, type=click.Path(), help="Output result file.")
@click.option("--dt-rf", default=1e-6, show_default=True, help="Max step during RF [s].")
@click.option("--dt-grad", default=1e-5, show_default=True, help="Max step elsewhere [s].")
@click.option("--threads", default=0, show_default=True, help="Worker threads (0 = auto).")
@click.option("--seed-check", is_flag=True,
              help="Run twice and fail unless the outputs are byte-identical.")
def sim(seq_file, phantom_spec, output, dt_rf, dt_grad, threads, seed_check):
    """Simulate a sequence over a phantom and write the result file."""
    doc = _load_doc(seq_file)
    phantom = _load_phantom_arg(phantom_spec)
    try:
        cfg = engine.SimConfig(dt_rf=dt_rf, dt_grad=dt_grad, threads=threads)
    except ValueError as e:
        _fail(EXIT_INPUT, str(e))
    violations = timeline.validate(doc)
    if violations:
        for v in violations:
            click.echo(f"{v.path}: [{v.kind}] {v.message}", err=True)
        sys.exit(EXIT_VIOLATION)
    try:
        t0 = time.perf_counter()
        data = run_pipeline(doc, phantom, cfg, phantom_name=phantom_spec)
        elapsed = time.perf_counter() - t0
        if seed_check:
            again = run_pipeline(doc, phantom, cfg, phantom_name=phantom_spec)
            if again != data:
                _fail(EXIT_INTERNAL, "determinism check failed: outputs differ between runs")
    except timeline.FlattenError as e:
        _fail(EXIT_VIOLATION, str(e))
    except (engine.NonFiniteStateError, recon.IncompleteKSpaceError) as e:
        _fail(EXIT_VIOLATION, str(e))
    Path(output).write_bytes(data)
    click.echo(f"simulated {phantom.n_spins} spins in {elapsed:.2f} s", err=True)
    click.echo(f"wrote {output} ({len(data)} bytes)")


@main.group()
def examples():
    """Bundled example sequences."""


@examples.command("list")
def examples_list():
    for name in EXAMPLES:
        click.echo(name)


@examples.command("export")
@click.argument("directory", type=click.Path())
def examples_export(directory):
    """Write the bundled example sequence files into DIRECTORY."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for name, builder in EXAMPLES.items():
        path = out / f"{name}.json"
        path.write_bytes(model.save(builder()))
        click.echo(f"wrote {path}")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="./mrseq-data", show_default=True,
              help="Database and blob storage directory.")
@click.option("--max-jobs", default=2, show_default=True,
              help="Simulations allowed to run concurrently.")
@click.option("--queue-cap", default=16, show_default=True,
              help="Queued jobs before submissions get 429.")
@click.option("--static-dir", default="frontend/dist", show_default=True,
              help="Front-end assets served under / when present.")
def serve(port, host, data_dir, max_jobs, queue_cap, static_dir):
    """Run the REST service."""
    import uvicorn

    from mrseq.service.app import create_app

    app = create_app(data_dir=data_dir, max_jobs=max_jobs, queue_cap=queue_cap,
                     static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("-o", "--output", default="docs/api.yaml", show_default=True)
def openapi(output):
    """Write the OpenAPI description of the REST service."""
    import yaml

    from mrseq.service.app import create_app

    app = create_app(data_dir=None)
    Path(output).parent.mkdir(parents=True, exist_ok=True)
    Path(output).write_text(yaml.safe_dump(app.openapi(), sort_keys=True))
    click.echo(f"wrote {output}")


if __name__ == "__main__":
    main()
