"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data or format
error, 3 numeric failure.
"""
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click

from .core.config import (
    EvalMode,
    MetricFlags,
    NetworkConfig,
    TrainConfig,
    load_run_config,
    parse_config,
)
from .core.errors import ConfigError, FormatError, NumericError, WfanetError
from .core.log import get_logger
from .data.dataset import build_dataset, load_dataset, save_dataset, split_dataset
from .data.raster import Raster, SamplePair, load_raster, residual_raster, save_raster
from .diagnostics import DEFAULT_TOLERANCE, run_battery
from .engine.tensor import Tensor, no_grad
from .metrics.quality import evaluate_pair
from .model.network import fuse_rasters
from .model.params import load_params, save_params
from .model.wavelet import wavedec
from .training.ablation import ABLATIONS, run_ablation_sweep
from .training.trainer import train as train_network

logger = get_logger('cli')


def _write_json(path: Path, payload: Any):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n', encoding='utf-8')


def _registry_session(url: str):
    from .db.database import session_factory
    return session_factory(url)()


def _configs(config_file: Optional[Path], dataset: Sequence[SamplePair], net_overrides: Dict[str, Any],
             train_overrides: Dict[str, Any]):
    """File values first, then flags; band count and ratio default to what the data holds."""
    net, training = load_run_config(config_file) if config_file else ({}, {})
    sample = dataset[0]
    net.setdefault("ms_bands", sample.lrms.bands)
    net.setdefault("ratio", sample.ratio)
    net.setdefault("scales", int(round(math.log2(net["ratio"]))))
    if "seed" in train_overrides and train_overrides["seed"] is not None:
        net_overrides = dict(net_overrides, seed=train_overrides["seed"])
    return (
        parse_config(NetworkConfig, net, **net_overrides),
        parse_config(TrainConfig, training, **train_overrides),
    )


@click.group()
def cli():
    """Wavelet-domain pansharpening toolkit."""


@cli.command()
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--count', type=int, default=64, show_default=True)
@click.option('--bands', type=int, default=4, show_default=True)
@click.option('--size', type=int, default=64, show_default=True, help="GT/PAN extent.")
@click.option('--ratio', type=int, default=4, show_default=True)
@click.option('--blur-sigma', type=float, default=None)
@click.option('--split', default="train", show_default=True)
@click.option('--out', 'out_dir', type=click.Path(path_type=Path), required=True)
def synth(seed, count, bands, size, ratio, blur_sigma, split, out_dir):
    """Generate Wald-protocol sample pairs from synthetic scenes."""
    pairs = build_dataset(count, bands, size, ratio, seed, blur_sigma=blur_sigma)
    folder = save_dataset(pairs, out_dir, split)
    click.echo(f"wrote {len(pairs)} samples to {folder}")


@cli.command()
@click.option('--data', 'data_dir', type=click.Path(path_type=Path), required=True)
@click.option('--split', default="train", show_default=True)
@click.option('--epochs', type=int, default=None)
@click.option('--lr', type=float, default=None)
@click.option('--batch', type=int, default=None)
@click.option('--seed', type=int, default=None)
@click.option('--channels', type=int, default=None)
@click.option('--config', 'config_file', type=click.Path(path_type=Path), default=None)
@click.option('--out', 'out_path', type=click.Path(path_type=Path), required=True)
@click.option('--report', 'report_path', type=click.Path(path_type=Path), default=None)
@click.option('--registry', default=None, help="Database URL to record the run in.")
@click.option('--name', default="train", show_default=True)
def train(data_dir, split, epochs, lr, batch, seed, channels, config_file, out_path, report_path, registry, name):
    """Train on a dataset split and write the WFPM parameter file."""
    dataset = load_dataset(data_dir, split)
    net_config, train_config = _configs(
        config_file, dataset,
        {"channels": channels},
        {"epochs": epochs, "lr": lr, "batch_size": batch, "seed": seed},
    )
    params, report = train_network(net_config, train_config, dataset, run=name)
    save_params(params, out_path)
    if report_path:
        _write_json(report_path, report.model_dump(mode='json'))
    if registry:
        from .db.registry import record_training
        with _registry_session(registry) as db:
            run_id = record_training(db, name, net_config, train_config, report)
        click.echo(f"recorded run {run_id}")
    logger.info(f"Trained {name}: final loss {report.final_loss:.6f}, checksum {report.checksum}")
    click.echo(f"final loss {report.final_loss:.6f}; params {report.checksum}")


@cli.command()
@click.option('--pan', 'pan_path', type=click.Path(path_type=Path), required=True)
@click.option('--ms', 'ms_path', type=click.Path(path_type=Path), required=True)
@click.option('--params', 'params_path', type=click.Path(path_type=Path), required=True)
@click.option('--out', 'out_path', type=click.Path(path_type=Path), required=True)
@click.option('--diff', nargs=2, type=click.Path(path_type=Path), default=None,
              help="REF.wfrs OUT_DIFF.wfrs: also write |REF - fused|.")
def fuse(pan_path, ms_path, params_path, out_path, diff):
    """Fuse one PAN/MS pair with trained parameters."""
    params = load_params(params_path)
    fused = fuse_rasters(load_raster(pan_path), load_raster(ms_path), params)
    save_raster(fused, out_path)
    if diff:
        ref_path, diff_path = diff
        save_raster(residual_raster(load_raster(ref_path), fused), diff_path)
    click.echo(f"wrote {out_path}")


@cli.command(name='eval')
@click.option('--mode', type=click.Choice([m.value for m in EvalMode]), default=EvalMode.REDUCED.value,
              show_default=True)
@click.option('--test', 'test_path', type=click.Path(path_type=Path), required=True)
@click.option('--ref', 'ref_path', type=click.Path(path_type=Path), default=None)
@click.option('--ms', 'ms_path', type=click.Path(path_type=Path), default=None)
@click.option('--pan', 'pan_path', type=click.Path(path_type=Path), default=None)
@click.option('--ratio', type=int, default=4, show_default=True)
@click.option('--peak', type=float, default=1.0, show_default=True)
@click.option('--block', type=int, default=32, show_default=True)
@click.option('--blur-sigma', type=float, default=None)
@click.option('--json', 'json_path', type=click.Path(path_type=Path), default=None)
@click.option('--registry', default=None, help="Database URL to record the report in.")
@click.option('--run-id', type=int, default=None, help="Training run the fused raster came from.")
def evaluate(mode, test_path, ref_path, ms_path, pan_path, ratio, peak, block, blur_sigma, json_path, registry, run_id):
    """Score a fused raster against a reference or, in full mode, against its inputs."""
    flags = parse_config(MetricFlags, mode=mode, ratio=ratio, peak=peak, block=block, blur_sigma=blur_sigma)
    if flags.mode == EvalMode.REDUCED and ref_path is None:
        raise ConfigError("--ref is required in reduced mode")
    if flags.mode == EvalMode.FULL and (ms_path is None or pan_path is None):
        raise ConfigError("--ms and --pan are required in full mode")
    if run_id is not None and not registry:
        raise ConfigError("--run-id needs --registry")
    report = evaluate_pair(
        load_raster(test_path),
        flags,
        ref=load_raster(ref_path) if ref_path else None,
        ms=load_raster(ms_path) if ms_path else None,
        pan=load_raster(pan_path) if pan_path else None,
    )
    payload = report.model_dump(mode='json')
    if json_path:
        _write_json(json_path, payload)
    if registry:
        from .db.registry import record_evaluation
        with _registry_session(registry) as db:
            (row_id,) = record_evaluation(db, run_id, flags.mode.value, [report])
        logger.info(f"Recorded evaluation {row_id} for run {run_id}")
    click.echo(json.dumps(payload, sort_keys=True))


@cli.command()
@click.option('--in', 'in_path', type=click.Path(path_type=Path), required=True)
@click.option('--levels', type=int, default=1, show_default=True)
@click.option('--out', 'out_dir', type=click.Path(path_type=Path), required=True)
def dwt(in_path, levels, out_dir):
    """Write the four Haar bands of every level as `level<k>_<band>.wfrs` (unclamped)."""
    raster = load_raster(in_path)
    with no_grad():
        decomposition = wavedec(Tensor(raster.values), levels)
    for k, bands in enumerate(decomposition):
        for name, band in bands.items():
            save_raster(Raster(band.data, raster.bit_depth), Path(out_dir) / f"level{k}_{name}.wfrs", clamp=False)
    click.echo(f"wrote {4 * levels} bands to {out_dir}")


@cli.command()
@click.option('--tol', type=float, default=DEFAULT_TOLERANCE, show_default=True)
@click.option('--check', 'checks', multiple=True, help="Run only the named checks.")
@click.option('--max-elements', type=click.IntRange(min=1), default=None,
              help="Check at most this many elements per input (default: all).")
def gradcheck(tol, checks, max_elements):
    """Run the gradient-check battery; exits 3 when any check exceeds the tolerance."""
    results = run_battery(tol, checks or None, max_elements=max_elements)
    for result in results:
        status = "ok" if result.passed else "FAIL"
        click.echo(f"{result.name:<18} {result.error:.3e} {status}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise NumericError(f"gradient checks above {tol:g}: {', '.join(failed)}")


@cli.command()
@click.option('--data', 'data_dir', type=click.Path(path_type=Path), required=True)
@click.option('--split', default="train", show_default=True)
@click.option('--epochs', type=int, default=None)
@click.option('--batch', type=int, default=None)
@click.option('--seed', type=int, default=None)
@click.option('--validation', type=int, default=8, show_default=True, help="Held-out sample count.")
@click.option('--only', 'names', multiple=True, type=click.Choice(list(ABLATIONS)))
@click.option('--config', 'config_file', type=click.Path(path_type=Path), default=None)
@click.option('--json', 'json_path', type=click.Path(path_type=Path), required=True)
@click.option('--registry', default=None, help="Database URL to record every variant in.")
def ablate(data_dir, split, epochs, batch, seed, validation, names, config_file, json_path, registry):
    """Train every ablation variant with the same schedule and record held-out l1."""
    dataset = load_dataset(data_dir, split)
    train_set, validation_set = split_dataset(dataset, validation)
    net_config, train_config = _configs(
        config_file, dataset, {}, {"epochs": epochs, "batch_size": batch, "seed": seed},
    )
    on_result = None
    db = None
    if registry:
        from .db.registry import record_training
        db = _registry_session(registry)

        def on_result(result, config, params):
            record_training(db, result.name, config, train_config, result.train_report, result.validation_l1)

    try:
        results = run_ablation_sweep(net_config, train_config, train_set, validation_set, names or None, on_result)
    finally:
        if db is not None:
            db.close()
    _write_json(json_path, [r.model_dump(mode='json') for r in results])
    for result in results:
        click.echo(f"{result.name:<16} {result.validation_l1:.6f}")


def run(argv: Optional[List[str]] = None) -> int:
    try:
        cli.main(args=argv, prog_name="wfanet", standalone_mode=False)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.exceptions.Abort:
        return 1
    except WfanetError as exc:
        click.echo(f"error ({exc.kind}): {exc.detail}", err=True)
        return exc.exit_code
    except OSError as exc:
        # unreadable inputs and unwritable outputs count as data errors
        detail = f"{exc.strerror or exc}: {exc.filename}" if exc.filename else str(exc)
        click.echo(f"error (io): {detail}", err=True)
        return FormatError.exit_code
    return 0


def main():
    sys.exit(run())
