import numpy as np
import pytest

from cisdag.dag import Dag
from cisdag.model import SemParams, sem_to_precision
from cisdag.positivity import is_cis
from cisdag.simulate import (
    BLOCK_ROWS,
    SimSpec,
    random_cis_model,
    random_dag,
    random_positive_sem,
    sample_sem,
    split_seed,
    thread_count,
)
from worked_examples import CROP_INTERCEPT, CROP_LAMBDA, CROP_MEANS, CROP_NOISE_VAR


def test_standard_normal_covariance():
    sem = SemParams((0, 1, 2), np.zeros((3, 3)), np.ones(3))
    X = sample_sem(SimSpec(sem, 10**5, seed=1))
    assert X.shape == (10**5, 3)
    np.testing.assert_allclose(np.cov(X.T), np.eye(3), atol=0.05)
    np.testing.assert_allclose(X.mean(axis=0), 0, atol=0.02)


def test_crop_covariance_and_means():
    sem = SemParams(tuple(range(6)), CROP_LAMBDA, CROP_NOISE_VAR, CROP_INTERCEPT)
    n = 10**5
    X = sample_sem(SimSpec(sem, n, seed=3))
    assert np.cov(X[:, 2], X[:, 1])[0, 1] == pytest.approx(50, abs=2)
    se = np.sqrt(np.diag(sem_to_precision(sem).sigma) / n)
    assert np.all(np.abs(X.mean(axis=0) - CROP_MEANS) < 3 * se)


def test_vanishing_noise_is_deterministic():
    lam = np.array([[0.0, 0.0], [0.7, 0.0]])
    X = sample_sem(SimSpec(SemParams((0, 1), lam, np.array([1.0, 1e-12])), 1000, seed=4))
    assert np.max(np.abs(X[:, 1] - 0.7 * X[:, 0])) < 1e-5


def test_respects_non_identity_ordering():
    lam = np.zeros((2, 2))
    lam[0, 1] = 2.0
    X = sample_sem(SimSpec(SemParams((1, 0), lam, np.array([1e-12, 1.0])), 100, seed=0))
    np.testing.assert_allclose(X[:, 0], 2 * X[:, 1], atol=1e-4)


def test_determinism_and_thread_independence():
    sem = random_cis_model(5, 0.5, seed=9)
    spec = SimSpec(sem, 3 * BLOCK_ROWS + 17, seed=123)
    a = sample_sem(spec, threads=1)
    assert np.array_equal(a, sample_sem(spec, threads=1))
    assert np.array_equal(a, sample_sem(spec, threads=4))
    assert not np.array_equal(a, sample_sem(SimSpec(sem, spec.n, seed=124)))


def test_blocks_are_prefix_stable():
    sem = SemParams((0, 1), np.zeros((2, 2)), np.ones(2))
    short = sample_sem(SimSpec(sem, BLOCK_ROWS, seed=5))
    long = sample_sem(SimSpec(sem, BLOCK_ROWS + 100, seed=5))
    assert np.array_equal(long[:BLOCK_ROWS], short)


def test_simspec_validation():
    sem = SemParams((0,), np.zeros((1, 1)), np.ones(1))
    with pytest.raises(ValueError):
        SimSpec(sem, 0)
    with pytest.raises(ValueError):
        SimSpec(sem, 10, seed=-1)


def test_split_seed():
    seeds = {split_seed(42, r) for r in range(1000)}
    assert len(seeds) == 1000
    assert split_seed(42, 7) == split_seed(42, 7)
    assert split_seed(42, 7) != split_seed(43, 7)


def test_thread_count(monkeypatch):
    assert thread_count(3) == 3
    monkeypatch.setenv("CISDAG_THREADS", "2")
    assert thread_count() == 2
    monkeypatch.setenv("CISDAG_THREADS", "0")
    assert thread_count() >= 1


def test_random_cis_model():
    empty = random_cis_model(4, 0.0, seed=1)
    assert np.all(empty.lam == 0)
    full = random_cis_model(3, 1.0, coeff_range=(0.2, 0.4), seed=1)
    nz = full.lam[full.lam != 0]
    assert nz.size == 3 and np.all((nz >= 0.2) & (nz <= 0.4))
    assert is_cis(sem_to_precision(full), (0, 1, 2))
    with pytest.raises(ValueError):
        random_cis_model(3, 0.5, coeff_range=(-1.0, 1.0))
    with pytest.raises(ValueError):
        random_cis_model(3, 1.5)


def test_random_dag_and_positive_sem():
    g = random_dag(6, 0.5, seed=2)
    assert isinstance(g, Dag) and g.m == 6
    assert random_dag(6, 0.5, seed=2) == g
    assert len(random_dag(4, 1.0, seed=0).edges) == 6
    sem = random_positive_sem(g, seed=3)
    assert sem.edges() == set(g.edges)
    assert np.all(sem.lam >= 0)
    assert is_cis(sem_to_precision(sem), g.topological_order())
