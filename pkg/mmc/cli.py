"""
CLI interface for MMC
Run a fit, a parameter sweep, or materialize a synthetic dataset
"""

import argparse
import asyncio
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from joblib import Parallel, delayed
from pydantic import ValidationError

from .config import MmcConfig, load_config
from .data import (
    MultiSourceDataset, build_problem, generate_synthetic, load_dataset, read_dataset,
    save_labels, write_dataset,
)
from .errors import ConfigError, DataFormatError, MmcError
from .mapping import subsample_pairs
from .metrics import mean_nmi_protocol
from .optimizer import fit
from .report import RunReport, SweepRow, build_report, mapping_block_csv, sweep_csv, trace_csv
from .validation import SweepParam, SweepRequest, SynthSpec, load_dataset_spec, load_model

logger = logging.getLogger('mmc.cli')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _add_solver_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('spec', type=str, help='Dataset spec (JSON or YAML)')
    parser.add_argument('--out', type=str, default='mmc-out', help='Output directory (default: mmc-out)')
    parser.add_argument('--config', type=str, help='MmcConfig file (YAML or JSON)')
    parser.add_argument('--alpha', type=float, help='View weight for every view')
    parser.add_argument('--beta', type=float, help='Penalty weight for every source pair')
    parser.add_argument('--inner-tol', type=float, help='Relative objective change ending the inner loop')
    parser.add_argument('--outer-tol', type=float, help='Mapping change ending the outer loop')
    parser.add_argument('--max-inner', type=int, help='Inner iteration cap')
    parser.add_argument('--max-outer', type=int, help='Outer iteration cap')
    parser.add_argument('--restarts', type=int, help='k-means restarts')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument('--no-row-normalize', action='store_true',
                        help='Cluster the raw consensus rows')
    parser.add_argument('--dense-mappings', action='store_true',
                        help='Plain transitivity mapping updates without re-orthogonalization')
    parser.add_argument('--jobs', type=int, help='Worker threads')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='mmc',
        description='MMC - Multi-source Multi-view Clustering'
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')
    commands = parser.add_subparsers(dest='command', required=True)

    fit_parser = commands.add_parser('fit', help='Cluster a dataset')
    _add_solver_options(fit_parser)

    sweep_parser = commands.add_parser('sweep', help='Fit once per parameter value')
    _add_solver_options(sweep_parser)
    sweep_parser.add_argument('--param', required=True, choices=[p.value for p in SweepParam],
                              help='Parameter to vary')
    sweep_parser.add_argument('--values', nargs='*', default=[],
                              help='Values, space- or comma-separated')

    synth_parser = commands.add_parser('synth', help='Write a synthetic dataset')
    synth_parser.add_argument('synth_spec', nargs='?', help='SynthSpec file (defaults when omitted)')
    synth_parser.add_argument('out_dir', nargs='?', default='mmc-synth', help='Output directory')
    return parser


def config_from_args(args: argparse.Namespace) -> MmcConfig:
    """Flags override the config file, which overrides the environment"""
    return load_config(
        args.config,
        default_alpha=args.alpha,
        default_beta=args.beta,
        inner_tol=args.inner_tol,
        outer_tol=args.outer_tol,
        max_inner=args.max_inner,
        max_outer=args.max_outer,
        restarts=args.restarts,
        seed=args.seed,
        row_normalize=False if args.no_row_normalize else None,
        orthogonal_mappings=False if args.dense_mappings else None,
        n_jobs=args.jobs,
    )


def parse_values(tokens: Sequence[str]) -> List[float]:
    values = []
    for token in tokens:
        for part in token.split(','):
            if not part.strip():
                continue
            try:
                values.append(float(part))
            except ValueError:
                raise ConfigError(f"Sweep value {part!r} is not a number")
    return values


async def cmd_fit(spec_path: str, config: MmcConfig, out: str) -> RunReport:
    """Fit a dataset and write labels, report.json, trace.csv and mapping heatmap data"""
    spec = load_dataset_spec(spec_path)
    problem, truth = load_dataset(spec, config)
    result = fit(problem, config)
    report = build_report(problem, result, config, truth)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, labels in zip(problem.source_names, result.labels):
        save_labels(out_dir / f"{name}.labels", labels)
    await report.export_json(out_dir / 'report.json')
    (out_dir / 'trace.csv').write_text(trace_csv(result.objective_trace), encoding='utf-8')
    if truth is not None:
        for a, b in sorted(result.mappings):
            names = problem.source_names
            block = mapping_block_csv(result, (a, b), truth[a], truth[b])
            (out_dir / f"{names[a]}-{names[b]}.mapping.csv").write_text(block, encoding='utf-8')

    for entry in report.sources:
        if entry.nmi is not None:
            logger.info(f"{entry.name}: NMI={entry.nmi:.4f} (mean {entry.nmi_mean:.4f} +/- {entry.nmi_std:.4f})")
    logger.info(f"Finished in {report.outer_iters} outer / {report.inner_iters} inner iterations; "
                f"results in {out_dir}")
    return report


def _sweep_point(dataset: MultiSourceDataset, request: SweepRequest, config: MmcConfig,
                 index: int, value: float) -> SweepRow:
    K = len(dataset.sources)
    seed = config.seed + index
    updates = {'seed': seed}
    if request.param == SweepParam.ALPHA:
        updates.update(default_alpha=value, alpha_overrides={})
    elif request.param == SweepParam.BETA:
        updates.update(default_beta=value, beta_overrides={})
    run_config = config.model_copy(update=updates)

    if request.param == SweepParam.KNOWN_FRACTION:
        pairs = {key: subsample_pairs(found, value, seed) for key, found in dataset.pairs.items()}
        dataset = MultiSourceDataset(dataset.sources, pairs, dataset.cluster_counts)
    elif request.param == SweepParam.N_CLUSTERS:
        dataset = MultiSourceDataset(dataset.sources, dataset.pairs, [int(value)] * K)

    try:
        problem = build_problem(dataset, run_config)
        result = fit(problem, run_config)
        scores = [
            mean_nmi_protocol(result.consensus[k], problem.cluster_counts[k], dataset.truth[k],
                              runs=run_config.nmi_runs, seed=seed,
                              row_normalized=run_config.row_normalize,
                              max_iter=run_config.kmeans_max_iter)
            for k in range(K)
        ]
    except MmcError as e:
        logger.error(f"Sweep {request.param.value}={value} failed: {e}")
        return SweepRow(value, [math.nan] * K, [math.nan] * K, ok=False)

    logger.info(f"Sweep {request.param.value}={value}: " +
                ", ".join(f"{m:.4f}" for m, _ in scores))
    return SweepRow(value, [m for m, _ in scores], [s for _, s in scores])


async def cmd_sweep(spec_path: str, request: SweepRequest, config: MmcConfig,
                    out: str) -> Tuple[List[SweepRow], int]:
    """One fit per value; rows follow input order whatever the thread count"""
    dataset = read_dataset(load_dataset_spec(spec_path))
    if dataset.truth is None:
        raise ConfigError("Sweeps need ground-truth labels for every source")

    points = list(enumerate(request.values))
    if config.n_jobs > 1 and len(points) > 1:
        inner = config.model_copy(update={'n_jobs': 1})
        rows = Parallel(n_jobs=config.n_jobs, prefer='threads')(
            delayed(_sweep_point)(dataset, request, inner, i, v) for i, v in points
        )
    else:
        rows = [_sweep_point(dataset, request, config, i, v) for i, v in points]

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / 'sweep.csv').write_text(sweep_csv(dataset.names, rows), encoding='utf-8')
    failed = sum(1 for row in rows if not row.ok)
    if failed:
        logger.error(f"{failed} of {len(rows)} sweep runs failed")
    return rows, EXIT_FAILURE if failed else EXIT_OK


async def cmd_synth(synth_path: Optional[str], out_dir: str) -> Path:
    """Write a synthetic dataset and its DatasetSpec"""
    spec = load_model(synth_path, SynthSpec) if synth_path else SynthSpec()
    problem = generate_synthetic(spec)
    write_dataset(problem.dataset, out_dir)
    spec_path = Path(out_dir) / 'dataset.json'
    logger.info(f"Synthetic dataset written to {spec_path}")
    return spec_path


def setup_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    logging.getLogger('mmc').setLevel(level)


async def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    setup_logging(args.verbose, args.quiet)

    try:
        if args.command == 'synth':
            await cmd_synth(args.synth_spec, args.out_dir)
            return EXIT_OK

        config = config_from_args(args)
        if args.command == 'fit':
            await cmd_fit(args.spec, config, args.out)
            return EXIT_OK

        request = SweepRequest(param=args.param, values=parse_values(args.values))
        _, code = await cmd_sweep(args.spec, request, config, args.out)
        return code
    except (ConfigError, DataFormatError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        print(f"Error: invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MmcError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def run() -> None:
    sys.exit(asyncio.run(main()))


if __name__ == '__main__':
    run()
