import numpy as np
import pytest

from scdensity import bench
from scdensity import distributions as dists


@pytest.fixture
def rng():
    return dists.replicate_rng(20240611)


def gaussian_sample(n, seed=1, replicate=0):
    return dists.gaussian().sample(dists.replicate_rng(seed, replicate, n), n)


class BenchCache:
    """Memoized per-replicate ISE arrays, shared by every test in the session."""

    def __init__(self):
        self._runs = {}

    def ises(self, dist, estimators, n_list, reps=100, seed=2024):
        out = {}
        missing = []
        for est in estimators:
            for n in n_list:
                key = (dist, est, n, reps, seed)
                if key in self._runs:
                    out[(est, n)] = self._runs[key]
                elif est not in missing:
                    missing.append(est)
        for n in n_list:
            todo = [e for e in missing if (dist, e, n, reps, seed) not in self._runs]
            if not todo:
                continue
            plan = bench.BenchmarkPlan(dist, tuple(todo), (n,), reps, seed)
            for (est, nn), v in bench.measure(plan).items():
                self._runs[(dist, est, nn, reps, seed)] = v
        return {(e, n): self._runs[(dist, e, n, reps, seed)] for e in estimators for n in n_list}

    def records(self, dist, estimators, n_list, reps=100, seed=2024):
        plan = bench.BenchmarkPlan(dist, tuple(estimators), tuple(n_list), reps, seed)
        return bench.summarize(plan, self.ises(dist, estimators, n_list, reps, seed))


_CACHE = BenchCache()


@pytest.fixture(scope="session")
def bench_cache():
    return _CACHE


def mean_se(v):
    v = np.asarray(v)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


# one line per acceptance criterion, echoed in the terminal summary
CRITERIA = {}


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
