"""Expectations over standard-normal noise and discrete agent types.

Uses probabilists' Gauss-Hermite rules (unit-variance convention, weights
normalized to sum to one) built by Golub-Welsch eigen-decomposition of the
Jacobi matrix, plus a Smolyak sparse-grid combination for several noise
dimensions. The 1D growth rule is m(level) = 2**(level+1) - 1, so the
level-6 one-dimensional rule has 127 nodes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .model import ProblemSpec


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for integrating against a D-dimensional standard
    normal. Weights sum to one; sparse-grid weights may be negative."""

    nodes: np.ndarray  # (n_points, dimension)
    weights: np.ndarray  # (n_points,)
    dimension: int
    description: str = ""

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.atleast_2d(np.asarray(self.nodes, dtype=float)))
        weights = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        if nodes.shape[0] != weights.shape[0]:
            raise ValueError("node and weight counts differ")
        if nodes.shape[1] != self.dimension:
            raise ValueError("node dimension does not match rule dimension")
        total = math.fsum(weights.tolist())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n_points(self) -> int:
        return self.nodes.shape[0]

    def axis(self, d: int = 0) -> np.ndarray:
        """Node coordinates along one dimension."""
        return self.nodes[:, d]

    def integrate(self, values) -> float:
        """Weighted sum of integrand values evaluated at the nodes."""
        values = np.asarray(values, dtype=float)
        return float(values @ self.weights)


def hermite_nodes_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Probabilists' Gauss-Hermite nodes and probability weights.

    Eigenvalues of the symmetric tridiagonal Jacobi matrix give the nodes;
    squared first eigenvector components give weights that already sum to
    one under the unit-variance normal.
    """
    if n < 1:
        raise ValueError(f"point count must be at least 1, got {n}")
    if n == 1:
        return np.zeros(1), np.ones(1)
    off_diag = np.sqrt(np.arange(1, n, dtype=float))
    nodes, vectors = eigh_tridiagonal(np.zeros(n), off_diag)
    weights = vectors[0, :] ** 2
    weights = weights / weights.sum()
    return nodes, weights


def gauss_hermite_1d(n: int) -> QuadratureRule:
    """n-point 1D rule, exact for polynomial moments up to degree 2n - 1."""
    nodes, weights = hermite_nodes_weights(n)
    return QuadratureRule(
        nodes=nodes.reshape(-1, 1),
        weights=weights,
        dimension=1,
        description=f"gauss-hermite-1d(n={n})",
    )


def _points_at_level(level: int) -> int:
    # doubling growth: 3, 7, 15, 31, 63, 127 for levels 1..6
    return 2 ** (level + 1) - 1


def sparse_grid(dimension: int, level: int) -> QuadratureRule:
    """Smolyak sparse grid built from nested-growth 1D Gauss-Hermite rules.

    For dimension 1 this is simply the one-dimensional rule with
    2**(level+1) - 1 points (127 at level 6). For higher dimensions the
    standard combination formula is applied; coincident nodes from
    different tensor terms are merged.
    """
    if dimension < 1:
        raise ValueError(f"dimension must be at least 1, got {dimension}")
    if level < 1:
        raise ValueError(f"level must be at least 1, got {level}")

    if dimension == 1:
        n = _points_at_level(level)
        nodes, weights = hermite_nodes_weights(n)
        return QuadratureRule(
            nodes=nodes.reshape(-1, 1),
            weights=weights,
            dimension=1,
            description=f"sparse-grid(d=1, level={level}, n={n})",
        )

    rules_1d = {}

    def rule_1d(lev: int):
        if lev not in rules_1d:
            rules_1d[lev] = hermite_nodes_weights(_points_at_level(lev))
        return rules_1d[lev]

    q = level + dimension - 1
    accum: dict[tuple, float] = {}
    for total in range(max(dimension, q - dimension + 1), q + 1):
        coeff = (-1) ** (q - total) * math.comb(dimension - 1, q - total)
        for combo in _compositions(total, dimension):
            axes = [rule_1d(lev) for lev in combo]
            for idx in itertools.product(*(range(len(ax[0])) for ax in axes)):
                point = tuple(round(float(axes[d][0][idx[d]]), 13) for d in range(dimension))
                w = coeff * math.prod(float(axes[d][1][idx[d]]) for d in range(dimension))
                accum[point] = accum.get(point, 0.0) + w

    points = np.array(sorted(accum), dtype=float)
    weights = np.array([accum[tuple(p)] for p in points.tolist()], dtype=float)
    keep = np.abs(weights) > 1e-15
    points, weights = points[keep], weights[keep]
    weights = weights / weights.sum()
    return QuadratureRule(
        nodes=points,
        weights=weights,
        dimension=dimension,
        description=f"sparse-grid(d={dimension}, level={level}, n={len(weights)})",
    )


def _compositions(total: int, parts: int):
    """All tuples of `parts` positive integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def default_rule(problem: ProblemSpec, n_1d: int = 32, level: int = 6) -> QuadratureRule:
    """Default noise rule: a 32-point 1D rule for one agent, the level-6
    sparse grid otherwise."""
    if problem.n_agents == 1:
        return gauss_hermite_1d(n_1d)
    return sparse_grid(problem.n_agents, level)


def type_assignments(problem: ProblemSpec):
    """All joint type assignments with their prior probabilities."""
    ranges = [range(a.n_types) for a in problem.agents]
    out = []
    for theta in itertools.product(*ranges):
        p = math.prod(problem.agents[i].types[k].prior_prob for i, k in enumerate(theta))
        out.append((theta, p))
    return out


def expect(f, problem: ProblemSpec, rule: QuadratureRule, conditioning=None) -> float:
    """Expectation of f(theta, xi) over types and noise.

    f takes a joint type assignment (tuple of indices) and one noise vector
    of length N. With conditioning=(i, k), agent i's type is fixed to k and
    the prior over the remaining agents is renormalized.
    """
    if rule.dimension != problem.n_agents:
        raise ValueError(
            f"rule dimension {rule.dimension} does not match {problem.n_agents} agents"
        )
    if conditioning is not None:
        i, k = conditioning
        p_ik = problem.agents[i].types[k].prior_prob
        if p_ik <= 0:
            raise ValueError(f"cannot condition on zero-probability type ({i}, {k})")

    total = 0.0
    for theta, p in type_assignments(problem):
        if conditioning is not None:
            i, k = conditioning
            if theta[i] != k:
                continue
            p = p / problem.agents[i].types[k].prior_prob
        if p == 0.0:
            continue
        inner = 0.0
        for s in range(rule.n_points):
            inner += rule.weights[s] * f(theta, rule.nodes[s])
        total += p * inner
    return total
