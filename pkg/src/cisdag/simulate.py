"""Seeded sampling from Gaussian SEMs and random positive models.

Reproducibility contract: rows are generated in fixed blocks of
:data:`BLOCK_ROWS`; block ``b`` draws from a Philox stream keyed by
``(seed, b)``. Uniforms are built from the raw 64-bit output and mapped to
normals with the inverse CDF, so the result depends only on ``(sem, n, seed)``
and not on the number of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import ndtri

from .dag import Dag
from .model import SemParams

__all__ = [
    "SimSpec",
    "BLOCK_ROWS",
    "split_seed",
    "sample_sem",
    "random_cis_model",
    "random_dag",
    "random_positive_sem",
    "thread_count",
]

BLOCK_ROWS = 4096
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SimSpec:
    sem: SemParams
    n: int
    seed: int = 0

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"sample size must be positive, got {self.n}")
        if not 0 <= int(self.seed) <= _SEED_MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")


def split_seed(seed: int, r: int) -> int:
    """Independent 64-bit seed for replicate ``r`` of a study seeded with ``seed``."""
    state = np.random.SeedSequence(int(seed), spawn_key=(int(r),)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(key),))))


def _standard_normals(seed: int, block: int, shape: tuple[int, int]) -> NDArray[np.float64]:
    bits = _stream(seed, block).bit_generator.random_raw(shape[0] * shape[1]) >> np.uint64(11)
    u = (bits.astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u).reshape(shape)


def thread_count(threads: int | None = None) -> int:
    """Worker threads: explicit value, else ``CISDAG_THREADS`` (0 means one per CPU)."""
    if threads is None:
        threads = int(os.environ.get("CISDAG_THREADS", "1") or 1)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def _sample_block(sem: SemParams, seed: int, block: int, rows: int) -> NDArray[np.float64]:
    m = sem.dim
    eps = _standard_normals(seed, block, (rows, m)) * np.sqrt(sem.noise_var)
    X = np.zeros((rows, m))
    for v in sem.ordering:
        X[:, v] = sem.mean[v] + X @ sem.lam[v] + eps[:, v]
    return X


def sample_sem(spec: SimSpec, threads: int | None = None) -> NDArray[np.float64]:
    """Draw ``spec.n`` i.i.d. rows from ``spec.sem``.

    Variables are generated in ``spec.sem.ordering`` as
    ``X_i = mean_i + sum_j lam[i, j] X_j + eps_i``. Output is bit-identical for
    a given spec regardless of ``threads``.
    """
    n, m = int(spec.n), spec.sem.dim
    sizes = [min(BLOCK_ROWS, n - start) for start in range(0, n, BLOCK_ROWS)]
    workers = min(thread_count(threads), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda b: _sample_block(spec.sem, spec.seed, b, sizes[b]), range(len(sizes))))
    else:
        blocks = [_sample_block(spec.sem, spec.seed, b, rows) for b, rows in enumerate(sizes)]
    return np.vstack(blocks) if blocks else np.empty((0, m))


def random_cis_model(
    m: int, edge_prob: float, coeff_range: tuple[float, float] = (0.1, 1.0), seed: int = 0
) -> SemParams:
    """Random SEM with nonnegative coefficients under the identity ordering.

    Each pair ``j < i`` gets an edge ``j -> i`` with probability ``edge_prob``
    and a coefficient uniform on ``coeff_range``; noise variances are 1.
    """
    lo, hi = coeff_range
    if not 0 <= lo <= hi:
        raise ValueError(f"coefficient range must satisfy 0 <= lo <= hi, got {coeff_range}")
    if not 0 <= edge_prob <= 1:
        raise ValueError("edge probability must lie in [0, 1]")
    rng = _stream(seed, 0)
    mask = np.tril(rng.random((m, m)) < edge_prob, -1)
    coeffs = rng.uniform(lo, hi, size=(m, m))
    return SemParams(tuple(range(m)), np.where(mask, coeffs, 0.0), np.ones(m))


def random_dag(m: int, edge_prob: float, seed: int = 0) -> Dag:
    """Random DAG: random node order, each forward pair joined with probability ``edge_prob``."""
    rng = _stream(seed, 1)
    order = rng.permutation(m)
    edges = [
        (int(order[a]), int(order[b]))
        for a in range(m)
        for b in range(a + 1, m)
        if rng.random() < edge_prob
    ]
    return Dag(m, tuple(edges))


def random_positive_sem(
    dag: Dag,
    coeff_range: tuple[float, float] = (0.1, 1.0),
    noise_range: tuple[float, float] = (0.5, 2.0),
    seed: int = 0,
) -> SemParams:
    """Random element of the nonnegative-coefficient model on ``dag``."""
    lo, hi = coeff_range
    if not 0 <= lo <= hi:
        raise ValueError(f"coefficient range must satisfy 0 <= lo <= hi, got {coeff_range}")
    rng = _stream(seed, 2)
    lam = np.zeros((dag.m, dag.m))
    for i, j in dag.edges:
        lam[j, i] = rng.uniform(lo, hi)
    noise = rng.uniform(*noise_range, size=dag.m)
    return SemParams(dag.topological_order(), lam, noise)
