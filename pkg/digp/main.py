#!/usr/bin/env python3
"""
DiGP command line - runs distributed greedy pursuit sweeps

    python -m digp run --preset fig3 --trials 10,10 --out results/fig3
    python -m digp run --config sweep.json --alpha 0.15 --topology ring:2
    python -m digp list-experiments
"""

import json
import logging
import math
import time
from pathlib import Path
from typing import Any, Dict, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from digp import __version__
from digp.config import DEFAULT_LOG_LEVEL, TIMING_BASELINE
from digp.distributed import write_traces
from digp.experiment import ExperimentConfig, emit_csv, emit_plotdata, run_experiment, timing_ratios
from digp.preset_manager import PresetManager
from digp.solvers import SolverRegistry

console = Console()
logger = logging.getLogger("digp")


# ============================================================================
# HELPERS
# ============================================================================

def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True, show_path=False)],
        force=True,
    )


def _parse_trials(value: str):
    try:
        q_text, p_text = value.split(",")
        return int(q_text), int(p_text)
    except ValueError as e:
        raise click.BadParameter(f"expected Q,P (e.g. 10,10), got {value!r}") from e


def _load_config_file(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise click.ClickException(f"Config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise click.ClickException(f"Config file {path} must hold a JSON object")
    return data


def _results_table(rows) -> Table:
    table = Table(title="Results")
    for column, justify in (
        ("alpha", "right"), ("algorithm", "left"), ("topology", "left"),
        ("SRER [dB]", "right"), ("ASCE", "right"), ("outer", "right"), ("inner", "right"),
    ):
        table.add_column(column, justify=justify)
    for row in rows:
        srer_text = "inf" if math.isinf(row.srer_db) else f"{row.srer_db:.2f}"
        table.add_row(
            f"{row.alpha:g}", row.algorithm, row.topology, srer_text, f"{row.asce:.4f}",
            f"{row.outer_mean:.2f} ± {row.outer_std:.2f}", f"{row.inner_mean:.2f} ± {row.inner_std:.2f}",
        )
    return table


def _timing_table(ratios: Dict[str, float], baseline: str) -> Table:
    table = Table(title=f"Running time normalized to {baseline}")
    table.add_column("algorithm")
    table.add_column("ratio", justify="right")
    for algorithm, ratio in ratios.items():
        table.add_row(algorithm, f"{ratio:.2f}")
    return table


def _solvers_table() -> Table:
    table = Table(title="Local solvers")
    table.add_column("name", style="bold")
    table.add_column("label")
    table.add_column("construction")
    table.add_column("reversible")
    for name in sorted(SolverRegistry.get_all()):
        info = SolverRegistry.create(name).get_solver_info()
        table.add_row(name, info["label"], info["construction"], "yes" if info["reversible"] else "no")
    return table


# ============================================================================
# CLI
# ============================================================================

@click.group()
@click.version_option(__version__, prog_name="digp")
@click.option("--log-level", default=DEFAULT_LOG_LEVEL, show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level: str):
    """Distributed greedy pursuit: DiOMP, DiSP, DiFROGS and their local solvers."""
    setup_logging(log_level)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="JSON experiment configuration")
@click.option("--preset", help="Built-in or custom preset name (see list-experiments)")
@click.option("--alpha", help="Comma-separated fractions of measurements, e.g. 0.15,0.2")
@click.option("--algorithms", help="Comma-separated subset of omp,sp,frogs,diomp,disp,difrogs")
@click.option("--topology", multiple=True, help="ring:d | rand:d | watts:q,p | ring:0-9 | ring:all")
@click.option("--signal", type=click.Choice(["gaussian", "binary"]))
@click.option("--smnr", help="SMNR in dB, or 'clean'")
@click.option("--trials", help="Q,P matrix and signal trials")
@click.option("--seed", type=int)
@click.option("--n", "n", type=int, help="Signal dimension N")
@click.option("--nodes", type=int, help="Number of nodes L")
@click.option("--k-common", type=int)
@click.option("--k-private", type=int)
@click.option("--round-cap", type=int)
@click.option("--workers", type=int, help="Worker processes")
@click.option("--filter-alpha/--strict-alpha", default=None,
              help="Drop alpha values with non-integral M instead of failing")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=Path("results"),
              show_default=True)
@click.option("--trace", is_flag=True, help="Also write per-round traces of every simulated run")
@click.option("--no-plotdata", is_flag=True, help="Skip the per-curve plot data files")
@click.option("--save-preset", help="Store the resolved configuration as a custom preset")
def run(
    config_path: Optional[Path],
    preset: Optional[str],
    alpha: Optional[str],
    algorithms: Optional[str],
    topology,
    signal: Optional[str],
    smnr: Optional[str],
    trials: Optional[str],
    seed: Optional[int],
    n: Optional[int],
    nodes: Optional[int],
    k_common: Optional[int],
    k_private: Optional[int],
    round_cap: Optional[int],
    workers: Optional[int],
    filter_alpha: Optional[bool],
    out_dir: Path,
    trace: bool,
    no_plotdata: bool,
    save_preset: Optional[str],
):
    """Run an experiment sweep and write CSV results."""
    try:
        manager = PresetManager()
        fields: Dict[str, Any] = {}
        if config_path:
            fields.update(_load_config_file(config_path))

        overrides = {
            "alpha": alpha, "algorithms": algorithms, "topology": list(topology) or None,
            "signal": signal, "smnr": smnr, "seed": seed, "n": n, "nodes": nodes,
            "k_common": k_common, "k_private": k_private, "round_cap": round_cap,
            "workers": workers, "filter_alpha": filter_alpha,
        }
        if trials:
            overrides["q_trials"], overrides["p_trials"] = _parse_trials(trials)
        fields.update({k: v for k, v in overrides.items() if v is not None})

        # Precedence: preset, then --config file, then flags
        config = manager.load_config(preset, fields) if preset else ExperimentConfig(**fields)
        if save_preset:
            manager.save_custom_preset(save_preset, config)
            console.print(f"✅ Preset saved: [bold]{save_preset}[/bold]")

        console.print(
            f"⏳ Running [bold]{config.name}[/bold]: alpha={config.alpha}, algorithms={config.algorithms}, "
            f"topology={config.topology}, Q={config.q_trials}, P={config.p_trials}, seed={config.seed}"
        )
        traces = [] if trace else None
        started = time.perf_counter()
        rows = run_experiment(config, traces=traces)
        elapsed = time.perf_counter() - started

        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.json").write_text(json.dumps(config.model_dump(), indent=2), encoding="utf-8")
        csv_path = emit_csv(rows, out_dir / "results.csv")
        console.print(_results_table(rows))
        console.print(f"✅ Results: {csv_path}")
        if not no_plotdata:
            written = emit_plotdata(rows, out_dir / "plotdata")
            console.print(f"📊 Plot data: {len(written)} file(s) in {out_dir / 'plotdata'}")
        if traces is not None:
            trace_path = write_traces(traces, out_dir / "traces.csv")
            console.print(f"📝 Round traces: {trace_path}")

        try:
            console.print(_timing_table(timing_ratios(rows, TIMING_BASELINE), TIMING_BASELINE))
        except ValueError as e:
            logger.info(f"Timing table skipped: {e}")
        console.print(f"🏁 Done in {elapsed:.1f}s")
    except (ValueError, OSError) as e:
        raise click.ClickException(str(e))


@cli.command("list-experiments")
def list_experiments():
    """List built-in and custom experiment presets and the local solvers."""
    manager = PresetManager()
    table = Table(title="Experiment presets")
    table.add_column("name", style="bold")
    table.add_column("type")
    table.add_column("algorithms")
    table.add_column("topology")
    table.add_column("description")
    for preset in manager.list_presets():
        config = preset.get("config", {})
        table.add_row(
            preset["id"],
            preset.get("type", ""),
            ",".join(config.get("algorithms", [])),
            ",".join(config.get("topology", [])),
            preset.get("description", ""),
        )
    console.print(table)
    console.print(_solvers_table())


@cli.command("delete-preset")
@click.argument("name")
def delete_preset(name: str):
    """Delete a custom preset."""
    try:
        deleted = PresetManager().delete_preset(name)
    except (ValueError, OSError) as e:
        raise click.ClickException(str(e))
    if not deleted:
        raise click.ClickException(f"Preset {name!r} not found")
    console.print(f"✅ Preset deleted: {name}")


def main():
    cli()


if __name__ == "__main__":
    main()
