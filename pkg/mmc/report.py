"""
MMC - Run Reports
Machine-readable results of a fit: JSON report plus CSV plot data
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .config import MmcConfig
from .metrics import inferred_mapping_block, mapping_inference_accuracy, mean_nmi_protocol, nmi
from .optimizer import MmcProblem, MmcResult, TracePoint

try:
    import aiofiles
    AIOFILES_AVAILABLE = True
except ImportError:
    AIOFILES_AVAILABLE = False

SCHEMA_VERSION = 1

PathLike = Union[str, Path]


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


@dataclass
class SourceReport:
    """Per-source clustering quality"""
    name: str
    n: int
    n_clusters: int
    nmi: Optional[float] = None
    nmi_mean: Optional[float] = None
    nmi_std: Optional[float] = None


@dataclass
class PairReport:
    """Inferred-mapping quality for one source pair"""
    source_a: str
    source_b: str
    known: int
    unmapped: int
    matches: Optional[int] = None
    accuracy: Optional[float] = None


@dataclass
class ComponentReport:
    """Convergence record of one group of coupled sources"""
    sources: List[str]
    outer_iters: int
    inner_iters: List[int]
    converged: bool
    mapping_deltas: List[float] = field(default_factory=list)


@dataclass
class RunReport:
    """Everything one fit produced, in a stable JSON layout"""
    sources: List[SourceReport]
    pairs: List[PairReport]
    objective_trace: List[TracePoint]
    outer_iters: int
    inner_iters: int
    converged: bool
    config: Dict[str, Any]
    seed: int
    wall_time: float = 0.0
    components: List[ComponentReport] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['objective_trace'] = [
            {'component': p.component, 'outer_iter': p.outer_iter,
             'inner_iter': p.inner_iter, 'objective': _finite_or_none(p.objective)}
            for p in self.objective_trace
        ]
        for source in data['sources']:
            for key in ('nmi', 'nmi_mean', 'nmi_std'):
                source[key] = _finite_or_none(source[key])
        for pair in data['pairs']:
            pair['accuracy'] = _finite_or_none(pair['accuracy'])
        for component in data['components']:
            component['mapping_deltas'] = [_finite_or_none(d) for d in component['mapping_deltas']]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    async def export_json(self, filepath: PathLike) -> str:
        """Write the report; uses aiofiles when installed"""
        text = self.to_json()
        if AIOFILES_AVAILABLE:
            async with aiofiles.open(filepath, 'w', encoding='utf-8', newline='\n') as f:
                await f.write(text)
        else:
            with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
                f.write(text)
        return text


def build_report(problem: MmcProblem, result: MmcResult, config: MmcConfig,
                 truth: Optional[Sequence[np.ndarray]] = None) -> RunReport:
    """Score a result against ground truth when available"""
    names = problem.source_names
    sources = []
    for k in range(problem.n_sources):
        entry = SourceReport(name=names[k], n=problem.n(k), n_clusters=problem.cluster_counts[k])
        if truth is not None:
            entry.nmi = nmi(result.labels[k], truth[k])
            entry.nmi_mean, entry.nmi_std = mean_nmi_protocol(
                result.consensus[k], problem.cluster_counts[k], truth[k],
                runs=config.nmi_runs, seed=config.seed,
                row_normalized=config.row_normalize, max_iter=config.kmeans_max_iter,
            )
        sources.append(entry)

    pairs = []
    for (a, b), state in sorted(result.mappings.items()):
        entry = PairReport(source_a=names[a], source_b=names[b], known=state.n_known,
                           unmapped=int(state.unmapped_rows().size))
        if truth is not None:
            accuracy = mapping_inference_accuracy(state, truth[a], truth[b])
            entry.matches, entry.accuracy = accuracy.matches, accuracy.accuracy
        pairs.append(entry)

    return RunReport(
        sources=sources,
        pairs=pairs,
        objective_trace=list(result.objective_trace),
        outer_iters=result.outer_iters,
        inner_iters=result.inner_iters,
        converged=result.converged,
        config=config.model_dump(mode='json'),
        seed=config.seed,
        wall_time=result.wall_time,
        components=[
            ComponentReport(sources=[names[k] for k in it.sources], outer_iters=it.outer_iters,
                            inner_iters=list(it.inner_iters), converged=it.converged,
                            mapping_deltas=[float(d) for d in it.mapping_deltas])
            for it in result.iterations
        ],
    )


def trace_csv(trace: Sequence[TracePoint]) -> str:
    """outer_iter, inner_iter, objective, then the component the point belongs to"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['outer_iter', 'inner_iter', 'objective', 'component'])
    for p in trace:
        writer.writerow([p.outer_iter, p.inner_iter, repr(float(p.objective)), p.component])
    return buffer.getvalue()


def mapping_block_csv(result: MmcResult, pair, truth_a, truth_b) -> str:
    """Class-sorted unknown block among unmapped instances, with class ids in the header"""
    block, rows, cols = inferred_mapping_block(result.mappings[pair], truth_a, truth_b)
    truth_a, truth_b = np.asarray(truth_a), np.asarray(truth_b)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['row', 'class'] + [f"{int(j)}:{int(truth_b[j])}" for j in cols])
    for r, values in zip(rows, block):
        writer.writerow([int(r), int(truth_a[r])] + [repr(float(v)) for v in values])
    return buffer.getvalue()


@dataclass
class SweepRow:
    """One sweep value and the per-source mean/std NMI it produced"""
    value: float
    nmi_mean: List[float]
    nmi_std: List[float]
    ok: bool = True


def sweep_csv(names: Sequence[str], rows: Sequence[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    header = ['value']
    for name in names:
        header += [f"{name}_nmi_mean", f"{name}_nmi_std"]
    writer.writerow(header + ['status'])
    for row in rows:
        cells = [repr(float(row.value))]
        for mean, std in zip(row.nmi_mean, row.nmi_std):
            cells += [repr(float(mean)), repr(float(std))]
        writer.writerow(cells + ['ok' if row.ok else 'failed'])
    return buffer.getvalue()
