"""
MMC - Dataset Loading
Dense CSV matrices, pair files, label files and assembly into an MmcProblem
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import MmcConfig
from ..errors import DataFormatError, MmcError
from ..kernels import ViewData, ViewKind, view_laplacian
from ..mapping import build_mapping
from ..optimizer import MmcProblem
from ..validation import DatasetSpec, MappingSpec, SourceSpec, ViewSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Pair = Tuple[int, int]


def _split(line: str) -> List[str]:
    if ',' in line:
        return [token.strip() for token in line.split(',')]
    return line.split()


def _read_lines(path: Path) -> List[str]:
    raw = path.read_bytes()
    try:
        return raw.decode('utf-8').splitlines()
    except UnicodeDecodeError as e:
        raise DataFormatError(f"Not UTF-8 text: {e.reason}", path=str(path),
                              line=raw[:e.start].count(b'\n') + 1)


def load_matrix(path: PathLike, expected_rows: Optional[int] = None) -> np.ndarray:
    """
    Read a dense matrix: comma- or whitespace-delimited rows, no header.
    A single leading '#' line is skipped. Errors carry the 1-based line.
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"Matrix file not found: {path}", path=str(path))
    lines = _read_lines(path)

    rows: List[List[float]] = []
    width = None
    for lineno, line in enumerate(lines, start=1):
        if lineno == 1 and line.lstrip().startswith('#'):
            continue
        if not line.strip():
            continue
        row = []
        for token in _split(line):
            try:
                value = float(token)
            except ValueError:
                raise DataFormatError(f"Non-numeric token {token!r}", path=str(path), line=lineno)
            if not np.isfinite(value):
                raise DataFormatError(f"Non-finite value {token!r}", path=str(path), line=lineno)
            row.append(value)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataFormatError(
                f"Ragged row: {len(row)} columns, expected {width}", path=str(path), line=lineno
            )
        rows.append(row)

    if not rows:
        raise DataFormatError("Matrix file is empty", path=str(path))
    if expected_rows is not None and len(rows) != expected_rows:
        raise DataFormatError(f"Expected {expected_rows} rows, found {len(rows)}", path=str(path))
    return np.array(rows, dtype=np.float64)


def save_matrix(path: PathLike, matrix: np.ndarray, comment: Optional[str] = None) -> None:
    """Write with 17 significant digits so load_matrix returns identical values"""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    header = f"# {comment}\n" if comment else ""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(header)
        np.savetxt(f, matrix, fmt='%.17g', delimiter=',')


def load_pairs(path: PathLike) -> List[Pair]:
    """One 'a<TAB>b' pair per line, 0-based"""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"Pairs file not found: {path}", path=str(path))
    pairs: List[Pair] = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip() or line.lstrip().startswith('#'):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(f"Expected two indices, got {len(parts)} fields",
                                  path=str(path), line=lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataFormatError("Pair indices must be integers", path=str(path), line=lineno)
        pairs.append((a, b))
    return pairs


def save_pairs(path: PathLike, pairs: Sequence[Pair]) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for a, b in pairs:
            f.write(f"{a}\t{b}\n")


def load_labels(path: PathLike, expected: Optional[int] = None) -> np.ndarray:
    """One non-negative class id per line"""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"Labels file not found: {path}", path=str(path))
    labels = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        token = line.strip()
        if not token:
            continue
        try:
            label = int(token)
        except ValueError:
            raise DataFormatError(f"Label {token!r} is not an integer", path=str(path), line=lineno)
        if label < 0:
            raise DataFormatError("Labels must be non-negative", path=str(path), line=lineno)
        labels.append(label)
    if expected is not None and len(labels) != expected:
        raise DataFormatError(f"Expected {expected} labels, found {len(labels)}", path=str(path))
    return np.array(labels, dtype=np.int64)


def save_labels(path: PathLike, labels: Sequence[int]) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for label in labels:
            f.write(f"{int(label)}\n")


@dataclass
class SourceData:
    """Views and optional ground truth of one source, in memory"""
    name: str
    views: List[ViewData]
    labels: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.views[0].n


@dataclass
class MultiSourceDataset:
    """Sources, known pairs per source pair, and cluster counts"""
    sources: List[SourceData]
    pairs: Dict[Tuple[int, int], List[Pair]] = field(default_factory=dict)
    cluster_counts: List[int] = field(default_factory=list)

    @property
    def truth(self) -> Optional[List[np.ndarray]]:
        """Ground-truth labels, only when every source has them"""
        if any(s.labels is None for s in self.sources):
            return None
        return [s.labels for s in self.sources]

    @property
    def names(self) -> List[str]:
        return [s.name for s in self.sources]


def build_problem(dataset: MultiSourceDataset, config: Optional[MmcConfig] = None) -> MmcProblem:
    """Kernels and Laplacians per view, mappings per pair, weights from config"""
    config = config or MmcConfig()
    laplacians = []
    for k, source in enumerate(dataset.sources):
        per_view = []
        for view in source.views:
            try:
                per_view.append(view_laplacian(view))
            except MmcError as e:
                raise e.with_context(source=source.name, view=view.name or view.view_index)
        laplacians.append(per_view)

    mappings = {}
    for (a, b), pairs in dataset.pairs.items():
        mappings[(a, b)] = build_mapping(dataset.sources[a].n, dataset.sources[b].n, pairs, a, b)

    K = len(dataset.sources)
    return MmcProblem(
        laplacians=laplacians,
        cluster_counts=list(dataset.cluster_counts),
        view_weights=[[config.alpha(k, i) for i in range(len(s.views))]
                      for k, s in enumerate(dataset.sources)],
        pair_weights={(i, j): config.beta(i, j) for i in range(K) for j in range(i + 1, K)},
        mappings=mappings,
        source_names=dataset.names,
    )


def read_dataset(spec: DatasetSpec) -> MultiSourceDataset:
    """Load every file a DatasetSpec names"""
    sources = []
    for k, source in enumerate(spec.sources):
        views = []
        for i, view in enumerate(source.views):
            kind = ViewKind(view.kind.value)
            matrix = load_matrix(spec.resolve(view.path), source.n)
            if kind == ViewKind.SIMILARITY and matrix.shape[0] != matrix.shape[1]:
                raise DataFormatError(f"Similarity view is {matrix.shape[0]} x {matrix.shape[1]}",
                                      path=view.path)
            views.append(ViewData(kind, matrix, k, i, view.name or f"view{i}"))
        n_k = views[0].n
        for view, view_spec in zip(views, source.views):
            if view.n != n_k:
                raise DataFormatError(f"Source {source.name}: {view.n} rows, other views have {n_k}",
                                      path=view_spec.path)
        labels = None
        if source.labels_path is not None:
            labels = load_labels(spec.resolve(source.labels_path), n_k)
        if spec.cluster_counts[k] > n_k:
            raise DataFormatError(
                f"Source {source.name}: {spec.cluster_counts[k]} clusters for {n_k} instances"
            )
        sources.append(SourceData(source.name, views, labels))

    pairs = {}
    for m in spec.mappings:
        a, b = spec.source_index(m.source_a), spec.source_index(m.source_b)
        found = load_pairs(spec.resolve(m.pairs_path))
        n_a, n_b = sources[a].n, sources[b].n
        seen_a, seen_b = set(), set()
        for lineno, (x, y) in enumerate(found, start=1):
            if not (0 <= x < n_a and 0 <= y < n_b):
                raise DataFormatError(f"Pair ({x}, {y}) out of range for {n_a} x {n_b}",
                                      path=m.pairs_path, line=lineno)
            if x in seen_a or y in seen_b:
                raise DataFormatError(f"Pair ({x}, {y}) repeats an instance; known pairs must be one-to-one",
                                      path=m.pairs_path, line=lineno)
            seen_a.add(x)
            seen_b.add(y)
        if a > b:
            a, b, found = b, a, [(y, x) for x, y in found]
        pairs[(a, b)] = found

    logger.info(f"Loaded {len(sources)} sources and {len(pairs)} mappings")
    return MultiSourceDataset(sources, pairs, list(spec.cluster_counts))


def load_dataset(spec: DatasetSpec, config: Optional[MmcConfig] = None
                 ) -> Tuple[MmcProblem, Optional[List[np.ndarray]]]:
    """DatasetSpec -> (MmcProblem, ground-truth labels or None)"""
    dataset = read_dataset(spec)
    return build_problem(dataset, config), dataset.truth


def write_dataset(dataset: MultiSourceDataset, out_dir: PathLike,
                  spec_name: str = "dataset.json") -> DatasetSpec:
    """Materialize a dataset as CSV/pairs/labels files plus a DatasetSpec JSON"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    sources = []
    for source in dataset.sources:
        views = []
        for view in source.views:
            filename = f"{source.name}.{view.name or f'view{view.view_index}'}.csv"
            save_matrix(out_dir / filename, view.matrix)
            views.append(ViewSpec(path=filename, kind=view.kind.value, name=view.name))
        labels_path = None
        if source.labels is not None:
            labels_path = f"{source.name}.labels"
            save_labels(out_dir / labels_path, source.labels)
        sources.append(SourceSpec(name=source.name, views=views, labels_path=labels_path, n_k=source.n))

    mappings = []
    for (a, b), pairs in sorted(dataset.pairs.items()):
        filename = f"{dataset.sources[a].name}-{dataset.sources[b].name}.pairs"
        save_pairs(out_dir / filename, pairs)
        mappings.append(MappingSpec(source_a=dataset.sources[a].name,
                                    source_b=dataset.sources[b].name, pairs_path=filename))

    spec = DatasetSpec(sources=sources, mappings=mappings, cluster_counts=list(dataset.cluster_counts))
    with open(out_dir / spec_name, 'w', encoding='utf-8', newline='\n') as f:
        f.write(spec.model_dump_json(indent=2, by_alias=True))
        f.write("\n")
    spec.base_dir = str(out_dir.resolve())
    logger.info(f"Wrote dataset with {len(sources)} sources to {out_dir}")
    return spec
