"""
Command-line surface: dataset generation, predictor training, policy runs
and the comparison report.

    PYTHONPATH=./src python cli.py run --config configs/blobs_mlp.json --policy linear
"""
import sys
from pathlib import Path
from typing import List, Optional

sys.path.insert(0, str(Path(__file__).parent / 'src'))

import typer
from dotenv import load_dotenv

from helpers.cli_helper_functions import debug_requested, setup_forensics_logging
from helpers.config_helper import ConfigHelper, load_config, load_gen_config, load_predictor_job
from helpers.cost_ledger import format_ledger_summary
from helpers.errors import FreezeHelperError, exit_code_for

load_dotenv()

app = typer.Typer(help="Attention-guided layer freezing at desk scale", no_args_is_help=True,
                  pretty_exceptions_enable=False)


def _prepare(vv: bool) -> None:
    if debug_requested(vv):
        setup_forensics_logging(ConfigHelper().config.logs_dir)


def _fail(error: BaseException) -> None:
    typer.echo(f"Error: {error}", err=True)
    raise typer.Exit(code=exit_code_for(error))


@app.command('gen-dataset')
def gen_dataset(
        config: Path = typer.Option(..., '--config', help="Generation config (JSON)"),
        out_dir: Optional[str] = typer.Option(None, '--out-dir', help="Overrides out_dir"),
        seed: Optional[int] = typer.Option(None, '--seed', help="Overrides generation_seed"),
        reference: Optional[Path] = typer.Option(None, '--reference', help="Existing reference checkpoint"),
        label_only: bool = typer.Option(False, '--label-only', help="Record labels without freezing"),
        quiet: bool = typer.Option(False, '--quiet'),
        vv: bool = typer.Option(False, '--vv', help="Verbose debug logging to logs/forensics.log"),
):
    """Train a reference model, retrain it with CKA labelling and write the predictor dataset."""
    from freezing.workflows import generate
    _prepare(vv)
    try:
        overrides = {'out_dir': out_dir, 'generation_seed': seed, 'oracle_freeze': False if label_only else None}
        cfg = load_gen_config(config, overrides)
        result = generate(cfg, reference=reference, quiet=quiet)
    except (FreezeHelperError, OSError) as e:
        _fail(e)
    zeros, ones = result.dataset.label_counts()
    if not quiet:
        typer.echo(f"{result.dataset.count} records ({zeros} continue, {ones} freeze) -> {result.paths.get('dataset')}")
        typer.echo(f"test accuracy {result.summary.final_test_accuracy:.4f}, "
                   f"{len(result.summary.freeze_events)} units frozen")


@app.command('train-predictor')
def train_predictor_cmd(
        config: Path = typer.Option(..., '--config', help="Predictor job config (JSON)"),
        out: Optional[str] = typer.Option(None, '--out', help="Overrides the predictor output path"),
        seed: Optional[int] = typer.Option(None, '--seed', help="Overrides train.seed"),
        quiet: bool = typer.Option(False, '--quiet'),
        vv: bool = typer.Option(False, '--vv', help="Verbose debug logging to logs/forensics.log"),
):
    """Train the attention predictor on one or more dataset files."""
    from freezing.workflows import concatenate_datasets, read_dataset
    from predictor import save_predictor, train_predictor
    _prepare(vv)
    try:
        job = load_predictor_job(config, {'out': out})
        if seed is not None:
            job = job.model_copy(update={'train': job.train.model_copy(update={'seed': seed})})
        dataset = concatenate_datasets([read_dataset(p) for p in job.datasets])
        predictor = train_predictor(dataset.records, job.train)
        path = save_predictor(predictor, job.out)
    except (FreezeHelperError, OSError) as e:
        _fail(e)
    if not quiet:
        typer.echo(f"trained on {dataset.count} records; holdout balanced accuracy "
                   f"{predictor.best_balanced_accuracy:.4f} -> {path}")


@app.command('run')
def run(
        config: Path = typer.Option(..., '--config', help="Experiment config (JSON)"),
        policy: Optional[str] = typer.Option(None, '--policy', help="full, linear, gradnorm or smart"),
        predictor: Optional[str] = typer.Option(None, '--predictor', help="Predictor file for smart"),
        out_dir: Optional[str] = typer.Option(None, '--out-dir', help="Overrides out_dir"),
        seed: Optional[int] = typer.Option(None, '--seed', help="Overrides seed"),
        jobs: Optional[int] = typer.Option(None, '--jobs', min=1, help="Seeds run concurrently"),
        quiet: bool = typer.Option(False, '--quiet'),
        vv: bool = typer.Option(False, '--vv', help="Verbose debug logging to logs/forensics.log"),
):
    """Train under a freezing policy and write trace, events and summary per seed."""
    from freezing.workflows import ExperimentWorkflow, run_repeats
    from helpers.report_generator import ReportGenerator
    from helpers.config_helper import read_json
    _prepare(vv)
    try:
        overrides = {'predictor': predictor, 'out_dir': out_dir, 'seed': seed}
        if policy is not None:
            current = read_json(config).get('policy')
            keep = isinstance(current, dict) and current.get('kind') == policy
            overrides['policy'] = current if keep else {'kind': policy}
        cfg = load_config(config, overrides)
        if cfg.repeats == 1:
            workflow = ExperimentWorkflow(cfg, quiet=quiet)
            summaries = [workflow.execute()]
            if not quiet:
                typer.echo(format_ledger_summary(workflow.fit.ledger, f"{cfg.policy.kind.upper()} RUN COST SUMMARY"))
        else:
            summaries = run_repeats(cfg, quiet=quiet, jobs=jobs or ConfigHelper().config.default_jobs)
            if not quiet:
                typer.echo(ReportGenerator(summaries).render())
    except (FreezeHelperError, OSError) as e:
        _fail(e)
    if not quiet:
        for summary in summaries:
            typer.echo(f"{summary.method} seed {summary.seed}: accuracy {summary.final_test_accuracy:.4f}, "
                       f"{summary.total_flops:,} FLOPs, {len(summary.freeze_events)} units frozen")


@app.command('report')
def report_cmd(
        summaries: List[Path] = typer.Argument(..., help="summary.json files"),
        reference: Optional[str] = typer.Option(None, '--reference', help="Method the savings are measured against"),
        out: Optional[Path] = typer.Option(None, '--out', help="Also write the table here"),
        vv: bool = typer.Option(False, '--vv', help="Verbose debug logging to logs/forensics.log"),
):
    """Compare policies: accuracy mean ± std over seeds, TFLOPs and FLOPs saved."""
    from helpers.report_generator import ReportGenerator
    _prepare(vv)
    try:
        generator = ReportGenerator.from_paths(summaries, reference)
        table = generator.render()
        if out is not None:
            generator.save(out)
    except (FreezeHelperError, OSError) as e:
        _fail(e)
    typer.echo(table)


if __name__ == '__main__':
    app()
