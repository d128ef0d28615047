"""Static undirected networks and their r-stage neighbourhood structure.

Node indices are 0-based throughout the Python API.  Edge-list files use
1-based indices (see :mod:`gnarspec.io`).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Network:
    """Undirected static graph on ``d`` nodes.

    Parameters
    ----------
    d : int
        Number of nodes.
    edges : iterable of (int, int)
        Unordered node pairs.  Duplicates and reversed pairs collapse.
    weights : dict, optional
        Nonnegative weight per edge, keyed by ``(min(i, j), max(i, j))``.
    """

    d: int
    edges: tuple[tuple[int, int], ...]
    weights: dict | None = None

    def __init__(self, d, edges, weights=None):
        d = int(d)
        if d < 1:
            raise ValueError(f"node count must be positive, got {d}")
        canon = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < d and 0 <= j < d):
                raise ValueError(f"edge ({i}, {j}) outside node range 0..{d - 1}")
            canon.add((min(i, j), max(i, j)))
        w = None
        if weights is not None:
            w = {}
            for (i, j), value in dict(weights).items():
                key = (min(int(i), int(j)), max(int(i), int(j)))
                if key not in canon:
                    raise ValueError(f"weight given for non-edge {key}")
                if value < 0:
                    raise ValueError(f"negative weight on edge {key}")
                w[key] = float(value)
            missing = canon - set(w)
            if missing:
                raise ValueError(f"missing weights for edges {sorted(missing)}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        object.__setattr__(self, "weights", w)

    @property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.d, self.d), dtype=int)
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1
        return A

    def weight_matrix(self) -> np.ndarray:
        """Symmetric matrix of raw edge weights (ones when unweighted)."""
        M = np.zeros((self.d, self.d))
        for i, j in self.edges:
            w = 1.0 if self.weights is None else self.weights[(i, j)]
            M[i, j] = M[j, i] = w
        return M

    def neighbours(self) -> list[list[int]]:
        nbrs = [[] for _ in range(self.d)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def is_connected(self) -> bool:
        return bool(np.isfinite(_bfs_distances(self)).all())

    @classmethod
    def from_adjacency(cls, A, weights=None):
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(A != 0, (A != 0).T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValueError("adjacency has self-loops")
        iu, ju = np.nonzero(np.triu(A != 0, 1))
        edges = list(zip(iu.tolist(), ju.tolist()))
        w = None
        if weights is not None:
            weights = np.asarray(weights, dtype=float)
            w = {(i, j): weights[i, j] for i, j in edges}
        return cls(A.shape[0], edges, w)


@dataclass(frozen=True)
class StageStructure:
    """Shortest-path distances and the r-stage adjacency matrices A_1..A_rmax."""

    distances: np.ndarray
    stage_adjacency: tuple[np.ndarray, ...]

    @property
    def d(self) -> int:
        return self.distances.shape[0]

    @property
    def r_max(self) -> int:
        return len(self.stage_adjacency)

    def stage(self, r: int) -> np.ndarray:
        """A_r; a zero matrix for stages beyond the diameter."""
        if r < 1:
            raise ValueError(f"stage must be >= 1, got {r}")
        if r > self.r_max:
            return np.zeros((self.d, self.d), dtype=int)
        return self.stage_adjacency[r - 1]


def _bfs_distances(net: Network) -> np.ndarray:
    nbrs = net.neighbours()
    dist = np.full((net.d, net.d), np.inf)
    for src in range(net.d):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if dist[src, v] == np.inf:
                    dist[src, v] = dist[src, u] + 1
                    queue.append(v)
    return dist


def compute_stages(net: Network) -> StageStructure:
    """Breadth-first distances and stage adjacency matrices of ``net``.

    Disconnected pairs get distance ``inf`` and belong to no stage.
    """
    dist = _bfs_distances(net)
    finite = dist[np.isfinite(dist)]
    r_max = int(finite.max()) if finite.size else 0
    stages = []
    for r in range(1, r_max + 1):
        A = (dist == r).astype(int)
        A.setflags(write=False)
        stages.append(A)
    dist.setflags(write=False)
    return StageStructure(dist, tuple(stages))


def equal_stage_weights(stages: StageStructure) -> np.ndarray:
    """W_ij = 1/|N_r(i)| with r = delta(i, j); zero on the diagonal and for unreachable pairs."""
    W = np.zeros((stages.d, stages.d))
    for A in stages.stage_adjacency:
        counts = A.sum(axis=1, keepdims=True)
        W += np.divide(A, counts, out=np.zeros_like(W), where=counts > 0)
    return W


def edge_stage_weights(stages: StageStructure, raw: np.ndarray) -> np.ndarray:
    """Stage weights built from raw first-stage edge weights.

    Stage-1 entries are ``raw`` row-normalized over N_1(i); rows whose raw
    weights sum to zero fall back to equal splits.  Higher stages carry no
    raw weights and use equal splits.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (stages.d, stages.d):
        raise ValueError("raw weight matrix has wrong shape")
    if np.any(raw < 0):
        raise ValueError("raw weights must be nonnegative")
    W = equal_stage_weights(stages)
    if stages.r_max == 0:
        return W
    A1 = stages.stage(1)
    masked = raw * A1
    sums = masked.sum(axis=1)
    for i in np.nonzero(sums > 0)[0]:
        W[i] = np.where(A1[i] == 1, masked[i] / sums[i], W[i])
    return W


def induced_adjacency(stages: StageStructure, r_star: int) -> np.ndarray:
    """Mask of pairs within distance 2 r* (capped at the diameter)."""
    if r_star < 1:
        raise ValueError(f"r_star must be >= 1, got {r_star}")
    A = np.zeros((stages.d, stages.d), dtype=int)
    for r in range(1, min(2 * r_star, stages.r_max) + 1):
        A += stages.stage(r)
    return A


def augment_mask(A: np.ndarray) -> np.ndarray:
    """Tile a d x d mask into the 2d x 2d pattern [[A, A], [A, A]]."""
    A = np.asarray(A)
    return np.block([[A, A], [A, A]])


@dataclass(frozen=True)
class NetworkContext:
    """A network bundled with its stage structure and stage weights."""

    network: Network
    stages: StageStructure
    weights: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.network.d

    @property
    def r_max(self) -> int:
        return self.stages.r_max

    def weighted_stage(self, r: int) -> np.ndarray:
        """W o A_r."""
        return self.weights * self.stages.stage(r)

    @classmethod
    def from_network(cls, net: Network, weights: str = "equal") -> "NetworkContext":
        """Build the context; ``weights`` is ``"equal"`` or ``"edge"`` (raw edge weights)."""
        stages = compute_stages(net)
        if weights == "equal":
            W = equal_stage_weights(stages)
        elif weights == "edge":
            W = edge_stage_weights(stages, net.weight_matrix())
        else:
            raise ValueError(f"unknown weighting {weights!r}")
        W.setflags(write=False)
        return cls(net, stages, W)


def random_network(d: int, extra_edges: int = 0, seed=None) -> Network:
    """Random connected graph: a random recursive tree plus ``extra_edges`` chords."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(d)
    edges = set()
    for k in range(1, d):
        parent = order[rng.integers(0, k)]
        i, j = int(order[k]), int(parent)
        edges.add((min(i, j), max(i, j)))
    candidates = [(i, j) for i in range(d) for j in range(i + 1, d) if (i, j) not in edges]
    if extra_edges:
        picks = rng.choice(len(candidates), size=min(extra_edges, len(candidates)), replace=False)
        edges.update(candidates[k] for k in picks)
    return Network(d, edges)
