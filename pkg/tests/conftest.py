import functools

import numpy as np
import pytest

from ctspline import L1Config, build_operator, fit_l1, fit_l2, benchmark_system, synth_paper_dataset

ACCEPTANCE_LINES: list[str] = []

BENCH_SEEDS = tuple(range(10))


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def bench_operator():
    ds, _ = synth_paper_dataset(0)
    return build_operator(benchmark_system(), ds.times)


@functools.lru_cache(maxsize=None)
def bench_fits(seed: int):
    """(dataset, reference, l1 fit with x0, l2 fit) for one benchmark seed."""
    ds, ref = synth_paper_dataset(seed)
    sys = benchmark_system()
    l1 = fit_l1(sys, ds, L1Config(eta=0.01, p=1, estimate_x0=True))
    l2 = fit_l2(sys, ds, 1e-4)
    return ds, ref, l1, l2


@pytest.fixture(scope="session")
def bench_op():
    return bench_operator()


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)
