"""Network topologies and combination matrices.

Combination matrices are stored with entry (l, k) giving the weight node k
applies to information received from node l, so left-stochastic matrices
have unit column sums (estimate combination) and right-stochastic matrices
have unit row sums (gradient/data fusion).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.random import SeedSequence, default_rng

STOCHASTIC_TOL = 1e-12

LEFT = "left-stochastic"
RIGHT = "right-stochastic"
DOUBLY = "doubly-stochastic"


class TopologyError(RuntimeError):
    """Could not build a valid topology (e.g. retry budget exhausted)."""


def _connected(adjacency: np.ndarray) -> bool:
    n = adjacency.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        k = stack.pop()
        for j in np.flatnonzero(adjacency[k]):
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


@dataclass(frozen=True)
class Topology:
    """Geometric sensor layout with symmetric single-hop connectivity.

    ``adjacency`` includes the self-loop (diagonal is True): every node is
    a member of its own neighborhood.
    """

    positions: np.ndarray
    comm_radius: float
    adjacency: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        adj = np.asarray(self.adjacency, dtype=bool)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "adjacency", adj)
        n = pos.shape[0]
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be an (N, 2) array")
        if adj.shape != (n, n):
            raise ValueError("adjacency must be square and match positions")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if not adj.diagonal().all():
            raise ValueError("every node must neighbor itself")
        if not _connected(adj):
            raise ValueError("topology must be connected")

    @property
    def num_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        """Neighborhood sizes |N_k|, self-loop included."""
        return self.adjacency.sum(axis=1)

    def neighbors(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[:, k])


def random_geometric_topology(num_nodes: int, radius: float, seed: int,
                              max_attempts: int = 1000) -> Topology:
    """Draw node positions uniformly on the unit square until connected.

    Nodes within ``radius`` of each other are linked.  Disconnected draws
    are rejected and redrawn with an incremented sub-seed, so the result
    is deterministic in ``seed``.
    """
    if num_nodes < 1:
        raise ValueError("num_nodes must be >= 1")
    if radius <= 0:
        raise ValueError("radius must be positive")
    for attempt in range(max_attempts):
        rng = default_rng(SeedSequence(seed, spawn_key=(attempt,)))
        positions = rng.random((num_nodes, 2))
        delta = positions[:, None, :] - positions[None, :, :]
        adjacency = (delta ** 2).sum(axis=-1) <= radius ** 2
        if _connected(adjacency):
            return Topology(positions, float(radius), adjacency, seed=seed)
    raise TopologyError(
        f"no connected draw in {max_attempts} attempts "
        f"(num_nodes={num_nodes}, radius={radius})"
    )


@dataclass(frozen=True)
class CombinationMatrix:
    """Nonnegative weights confined to the topology's neighborhoods."""

    entries: np.ndarray
    kind: str = LEFT

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be square")
        if self.kind not in (LEFT, RIGHT, DOUBLY):
            raise ValueError(f"unknown kind {self.kind!r}")
        self.validate()

    @property
    def num_nodes(self) -> int:
        return self.entries.shape[0]

    def validate(self, topology: Topology | None = None, tol: float = STOCHASTIC_TOL):
        a = self.entries
        if (a < -tol).any():
            raise ValueError("combination weights must be nonnegative")
        if self.kind in (LEFT, DOUBLY) and np.abs(a.sum(axis=0) - 1.0).max() > tol:
            raise ValueError("columns must sum to 1")
        if self.kind in (RIGHT, DOUBLY) and np.abs(a.sum(axis=1) - 1.0).max() > tol:
            raise ValueError("rows must sum to 1")
        if topology is not None:
            if a.shape[0] != topology.num_nodes:
                raise ValueError("matrix size does not match topology")
            if (np.abs(a[~topology.adjacency]) > tol).any():
                raise ValueError("nonzero weight outside a neighborhood")


def metropolis_weights(topology: Topology) -> CombinationMatrix:
    """Doubly-stochastic Metropolis weights.

    Off-diagonal weight between neighbors l != k is 1/max(|N_l|, |N_k|)
    with the self-loop counted in the degree; the diagonal absorbs the
    remainder.  Symmetric, so usable both as A (left) and C (right).
    """
    adj = topology.adjacency
    deg = topology.degrees
    w = np.where(adj, 1.0 / np.maximum(deg[:, None], deg[None, :]), 0.0)
    np.fill_diagonal(w, 0.0)
    np.fill_diagonal(w, 1.0 - w.sum(axis=0))
    return CombinationMatrix(w, DOUBLY)


def relative_variance_weights(topology: Topology, noise_vars) -> CombinationMatrix:
    """Left-stochastic weights inversely proportional to regression-noise power.

    Column k distributes weight over N_k proportionally to 1/sigma2_n of
    each neighbor, so nodes lean hardest on the least noisy regressors.
    """
    noise_vars = np.asarray(noise_vars, dtype=float)
    if noise_vars.shape != (topology.num_nodes,):
        raise ValueError("need one noise variance per node")
    if (noise_vars <= 0).any():
        raise ValueError("noise variances must be positive")
    inv = 1.0 / noise_vars
    adj = topology.adjacency
    w = np.where(adj, inv[:, None], 0.0)
    w /= w.sum(axis=0, keepdims=True)
    return CombinationMatrix(w, LEFT)


def identity_combination(num_nodes: int) -> CombinationMatrix:
    """Identity weights: no cooperation; valid as both A and C."""
    return CombinationMatrix(np.eye(num_nodes), DOUBLY)


def extend(matrix, block_size: int) -> np.ndarray:
    """Lift an N x N combination matrix to (N*M) x (N*M) via kron with I_M."""
    entries = matrix.entries if isinstance(matrix, CombinationMatrix) else np.asarray(matrix)
    return np.kron(np.asarray(entries, dtype=complex), np.eye(block_size))


def topology_to_dict(topology: Topology) -> dict:
    return {
        "num_nodes": topology.num_nodes,
        "comm_radius": topology.comm_radius,
        "seed": topology.seed,
        "positions": [[repr(float(x)) for x in row] for row in topology.positions],
        "adjacency": [[int(v) for v in row] for row in topology.adjacency],
    }


def topology_from_dict(data: dict) -> Topology:
    positions = np.array([[float(x) for x in row] for row in data["positions"]])
    adjacency = np.array(data["adjacency"], dtype=bool)
    return Topology(positions, float(data["comm_radius"]), adjacency, seed=data.get("seed"))


def combination_to_dict(matrix: CombinationMatrix) -> dict:
    return {
        "kind": matrix.kind,
        "entries": [[repr(float(v)) for v in row] for row in matrix.entries],
    }


def combination_from_dict(data: dict) -> CombinationMatrix:
    entries = np.array([[float(v) for v in row] for row in data["entries"]])
    return CombinationMatrix(entries, data["kind"])
