"""Shared fixtures: solved case-study batteries reused across test modules.

The heavy solve batteries are session-scoped. Setting CONTRACTOPT_TEST_CACHE
to a directory caches their results on disk keyed by configuration hash,
which speeds up repeated local runs; results are deterministic given the
seed battery, so the cache is a pure compute cache.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import pytest

from contractopt.analysis import single_type_problem
from contractopt.cli import problem_to_dict, result_from_dict, result_to_dict
from contractopt.model import ValueKind
from contractopt.optimizer import AnnealerConfig, best_of_seeds
from contractopt import studies

ACCEPTANCE_SEEDS = 5
KAPPAS = (2.5, 1.5)
SIGMAS = (0.1, 0.4)
COSTS = (0.1, 0.4)


@pytest.fixture(scope="session")
def annealer_cfg() -> AnnealerConfig:
    return AnnealerConfig(seed=0)


def _cache_dir():
    path = os.environ.get("CONTRACTOPT_TEST_CACHE")
    if not path:
        return None
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cached_solve(problem, cfg, n_seeds, label):
    cache = _cache_dir()
    if cache is None:
        return best_of_seeds(problem, cfg, n_seeds=n_seeds)
    key_payload = json.dumps(
        {"problem": problem_to_dict(problem), "cfg": repr(cfg), "n_seeds": n_seeds},
        sort_keys=True,
    )
    key = hashlib.sha256(key_payload.encode()).hexdigest()[:16]
    path = cache / f"{label}_{key}.json"
    if path.exists():
        return result_from_dict(json.loads(path.read_text()))
    result = best_of_seeds(problem, cfg, n_seeds=n_seeds)
    path.write_text(json.dumps(result_to_dict(result)))
    return result


def _grid_solutions(value_kind, cfg):
    out = {}
    for kappa in KAPPAS:
        for sigma in SIGMAS:
            for cost in COSTS:
                problem = single_type_problem(kappa, sigma, cost, value_kind)
                label = f"{value_kind.value.lower()}_{kappa}_{sigma}_{cost}"
                out[(kappa, sigma, cost)] = _cached_solve(
                    problem, cfg, ACCEPTANCE_SEEDS, label
                )
    return out


@pytest.fixture(scope="session")
def rb_solutions(annealer_cfg):
    """Best-of-five solves for all eight cells of the step-value grid."""
    return _grid_solutions(ValueKind.RB, annealer_cfg)


@pytest.fixture(scope="session")
def rpi_solutions(annealer_cfg):
    """Best-of-five solves for all eight cells of the slope-value grid."""
    return _grid_solutions(ValueKind.RPI, annealer_cfg)


@pytest.fixture(scope="session")
def unknown_cost_solution(annealer_cfg):
    return _cached_solve(
        studies.unknown_cost_problem(), annealer_cfg, ACCEPTANCE_SEEDS, "as_cost"
    )


@pytest.fixture(scope="session")
def unknown_complexity_solution(annealer_cfg):
    return _cached_solve(
        studies.unknown_complexity_problem(), annealer_cfg, ACCEPTANCE_SEEDS, "as_complexity"
    )


@pytest.fixture(scope="session")
def quick_cfg() -> AnnealerConfig:
    """Small budget for structural tests that need a real solve but not a
    polished optimum."""
    return AnnealerConfig(particle_count=48, n_stages=10, mcmc_steps_per_stage=3, seed=11)


@pytest.fixture(scope="session")
def quick_solution(quick_cfg):
    problem = single_type_problem(1.5, 0.1, 0.4, ValueKind.RB)
    return problem, _cached_solve(problem, quick_cfg, 1, "quick_rb")
