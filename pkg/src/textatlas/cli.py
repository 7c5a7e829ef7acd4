"""Project lifecycle commands: init, ingest, fit, serve, export.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .corpus import TokenizerConfig
from .errors import TextAtlasError
from .inference import InferenceConfig
from .network import NetworkConfig
from .project import Project


@click.group()
def cli() -> None:
    """Corpus coding and constrained clustering workbench."""


@cli.command()
@click.argument("directory", type=click.Path(path_type=Path))
def init(directory: Path) -> None:
    """Create an empty project at DIRECTORY."""
    Project.init(directory)
    click.echo(f"initialized project at {directory}")


@cli.command()
@click.option("--project", "-C", "project_dir", default=".",
              type=click.Path(path_type=Path), show_default=True)
@click.option("--input", "input_file", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="line-delimited JSON records (id, title, body[, tokens])")
@click.option("--stopwords", type=click.Path(exists=True, path_type=Path),
              default=None, help="override the bundled stopword list")
@click.option("--min-len", default=2, show_default=True,
              help="minimum token length")
def ingest(project_dir: Path, input_file: Path, stopwords: Path | None,
           min_len: int) -> None:
    """Ingest a corpus file into the project."""
    config = TokenizerConfig(
        stopwords_path=str(stopwords) if stopwords else None,
        min_token_len=min_len,
    )
    import json

    meta_path = project_dir / "project.json"
    if not meta_path.exists():
        raise TextAtlasError(f"no project at {project_dir} (run init first)")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    meta["tokenizer"] = config.digest()
    meta_path.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n",
                         encoding="utf-8")
    project = Project(project_dir)
    corpus = project.ingest(str(input_file))
    s = corpus.stats
    click.echo(
        f"ingested {s.n_documents} documents, {s.n_words} words, "
        f"{s.n_text_edges} text edges, mean length {s.mean_doc_length:.2f}"
    )


@cli.command()
@click.option("--project", "-C", "project_dir", default=".",
              type=click.Path(path_type=Path), show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--restarts", default=5, show_default=True)
@click.option("--sweeps", default=100, show_default=True)
@click.option("--levels", default=5, show_default=True, help="hierarchy cap")
@click.option("--omega", default=1.0, show_default=True,
              help="metadata edge weight")
def fit(project_dir: Path, seed: int, restarts: int, sweeps: int, levels: int,
        omega: float) -> None:
    """Fit a model snapshot from the current annotations."""
    project = Project(project_dir)
    config = InferenceConfig(
        seed=seed, restarts=restarts, sweeps_per_level=sweeps,
        max_levels=levels, omega=omega,
    )
    snap = project.fit(config, NetworkConfig(omega=omega))
    click.echo(f"snapshot {snap.snapshot_id}")
    click.echo(f"dl_total {snap.objective.total:.6f}")
    type_names = ("words", "docs", "codes", "categories")
    for level in range(snap.partition.height):
        counts = snap.partition.block_counts(level)
        parts = " ".join(
            f"{name}={counts[t]}" for t, name in enumerate(type_names) if counts[t]
        )
        click.echo(f"level {level}: {parts}")
    click.echo(f"duration_s {snap.duration_s}")


@cli.command()
@click.option("--project", "-C", "project_dir", default=".",
              type=click.Path(path_type=Path), show_default=True)
@click.option("--port", "-p", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(project_dir: Path, port: int, host: str) -> None:
    """Serve the HTTP API (and the web UI when present)."""
    from .service import serve as run_service

    run_service(str(project_dir), port=port, host=host)


@cli.command()
@click.option("--project", "-C", "project_dir", default=".",
              type=click.Path(path_type=Path), show_default=True)
@click.option("--format", "fmt", default="csv", show_default=True,
              type=click.Choice(["csv"]))
@click.option("--out", required=True, type=click.Path(path_type=Path))
def export(project_dir: Path, fmt: str, out: Path) -> None:
    """Export all highlights."""
    project = Project(project_dir)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(project.store.export_csv())
    click.echo(f"wrote {out}")


def main() -> int:
    try:
        cli.main(standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except TextAtlasError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception as exc:  # noqa: BLE001 - final CLI boundary
        click.echo(f"internal error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
