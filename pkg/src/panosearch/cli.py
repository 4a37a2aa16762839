"""Command-line entry points: serve, run, validate, synth, report, export-sft."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from panosearch.projection import ViewSpec, active_backend


@click.group()
def main() -> None:
    """Panorama-as-simulator benchmark tooling."""


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--records", "records_dir", required=True, type=click.Path(path_type=Path))
@click.option("--runs-root", type=click.Path(path_type=Path), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8800, show_default=True)
@click.option("--view-width", default=1920, show_default=True)
@click.option("--view-height", default=1080, show_default=True)
@click.option("--hfov", default=90.0, show_default=True)
@click.option("--render-workers", default=4, show_default=True)
def serve(dataset_path, records_dir, runs_root, host, port, view_width, view_height, hfov, render_workers):
    """Run the episode/render/annotation service."""
    from panosearch.service import ServiceConfig, serve as run_service

    config = ServiceConfig(
        dataset_path=dataset_path,
        records_dir=records_dir,
        runs_root=runs_root,
        view=ViewSpec(view_width, view_height, hfov),
        max_render_workers=render_workers,
    )
    click.echo(f"render backend: {active_backend()}")
    run_service(config, host=host, port=port)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--agent", required=True, type=click.Choice(["oracle", "random", "sweep", "remote"]))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--seed", default=0, show_default=True)
@click.option("--max-turns", default=10, show_default=True)
@click.option("--history-window", default=5, show_default=True)
@click.option("--view-width", default=1920, show_default=True)
@click.option("--view-height", default=1080, show_default=True)
@click.option("--hfov", default=90.0, show_default=True)
@click.option("--no-images", is_flag=True, help="Skip writing observation PNGs.")
@click.option("--few-shot", is_flag=True, help="Include the few-shot block (zero-shot models).")
@click.option("--endpoint-url", default=None, help="Chat-completions base URL for --agent remote.")
@click.option("--model", default=None, help="Model name for --agent remote.")
@click.option("--temperature", default=0.0, show_default=True)
@click.option("--token-env", default="PANOSEARCH_API_TOKEN", show_default=True)
def run(dataset_path, agent, out_dir, seed, max_turns, history_window, view_width,
        view_height, hfov, no_images, few_shot, endpoint_url, model, temperature, token_env):
    """Run a benchmark: every instance at all four start orientations."""
    from panosearch.harness import RunConfig, run_benchmark
    from panosearch.scoring import format_table
    from panosearch.tasks import parse_dataset

    dataset = parse_dataset(dataset_path)
    endpoint = None
    if agent == "remote":
        if not endpoint_url or not model:
            raise click.UsageError("--agent remote needs --endpoint-url and --model")
        from panosearch.agent.remote import EndpointConfig

        endpoint = EndpointConfig(
            base_url=endpoint_url,
            model_name=model,
            temperature=temperature,
            auth_token_env_var=token_env,
        )
    config = RunConfig(
        out_dir=out_dir,
        seed=seed,
        max_turns=max_turns,
        history_window=history_window,
        view=ViewSpec(view_width, view_height, hfov),
        save_images=not no_images,
        include_few_shot=few_shot,
    )
    click.echo(f"render backend: {active_backend()}")
    report, results = run_benchmark(dataset, agent, config, endpoint=endpoint)
    click.echo(format_table(report))
    click.echo(f"{len(results)} episodes -> {out_dir}")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(path_type=Path))
def validate(dataset_path):
    """Validate a dataset manifest; exit nonzero on the first violation."""
    from panosearch.tasks import ManifestError, parse_dataset

    try:
        dataset = parse_dataset(dataset_path)
    except (ManifestError, FileNotFoundError) as exc:
        click.echo(f"INVALID: {exc}", err=True)
        sys.exit(1)
    n_hos = sum(1 for i in dataset.instances if i.task_type == "HOS")
    n_hps = len(dataset.instances) - n_hos
    click.echo(
        f"OK: {len(dataset.instances)} instances ({n_hos} HOS, {n_hps} HPS), "
        f"split={dataset.split}, manifest_version={dataset.manifest_version}"
    )


@main.command()
@click.option("--seed", required=True, type=int)
@click.option("--n-hos", required=True, type=int)
@click.option("--n-hps", required=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--pano-width", default=1024, show_default=True)
@click.option("--split", default="bench", show_default=True)
def synth(seed, n_hos, n_hps, out_dir, pano_width, split):
    """Generate a deterministic synthetic ground-truth dataset."""
    from panosearch.tasks import generate_synthetic

    dataset, manifest = generate_synthetic(
        seed, n_hos, n_hps, out_dir, pano_size=(pano_width, pano_width // 2), split=split
    )
    if dataset.instances:
        click.echo(f"wrote {len(dataset.instances)} instances to {manifest}")
    else:
        click.echo("nothing to generate (0 instances requested)")


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, path_type=Path))
def report(run_dir):
    """Re-aggregate a run's records and print the table."""
    from panosearch.harness import reaggregate
    from panosearch.scoring import format_table

    rep = reaggregate(run_dir)
    click.echo(format_table(rep))


@main.command("export-sft")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--filter", "filter_", default="success", show_default=True,
              type=click.Choice(["success", "all"]))
@click.option("--few-shot", is_flag=True)
def export_sft_cmd(run_dir, dataset_path, out_path, filter_, few_shot):
    """Export finished episodes as SFT conversation trajectories."""
    from panosearch.harness import export_sft
    from panosearch.tasks import parse_dataset

    dataset = parse_dataset(dataset_path)
    count = export_sft(
        run_dir,
        dataset,
        out_path,
        only_success=(filter_ == "success"),
        include_few_shot=few_shot,
    )
    click.echo(f"exported {count} trajectories to {out_path}")


if __name__ == "__main__":
    main()
