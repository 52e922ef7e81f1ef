"""Semidefinite relaxations for recovery and a first-order splitting solver.

Two programs are supported: known community sizes (objective <A, X> with an
all-ones-sum equality constraint) and unknown sizes (objective
<A, X> - omega <J, X>).  Both share the constraints diag(X) = 1, entrywise
X >= -1/(r-1), and X PSD.  The solver is consensus ADMM over the three
constraint sets, with a full symmetric eigendecomposition per iteration for
the PSD projection; robust and adequate at desk scale (n up to ~2000).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph_model import Graph, PartitionLabels
from .thresholds import ParameterError


def centered_partition_matrix(labels: PartitionLabels) -> np.ndarray:
    """Matrix with 1 for same-community pairs and -1/(r-1) otherwise."""
    if labels.r < 2:
        raise ParameterError("need r >= 2")
    same = labels.same_community_matrix()
    low = -1.0 / (labels.r - 1)
    return np.where(same, 1.0, low)


@dataclass
class SdpProblem:
    n: int
    r: int
    objective: np.ndarray = field(repr=False)  # C; maximize <C, X>
    j_target: float | None = None  # known-sizes equality <J, X> = j_target
    omega: float | None = None  # unknown-sizes penalty (already folded into C)

    @property
    def lower_bound(self) -> float:
        return -1.0 / (self.r - 1)


@dataclass
class SolverOptions:
    tol: float = 1e-6
    max_iters: int = 20000
    rho: float = 1.0
    adapt_every: int = 50
    round_tol: float = 0.1
    keep_iterates: int = 0  # snapshot the consensus X every k iterations


@dataclass
class SdpSolution:
    X: np.ndarray = field(repr=False)
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool
    iterates: list = field(default_factory=list, repr=False)


@dataclass
class RoundingResult:
    labels: PartitionLabels | None
    success: bool
    max_deviation: float


def j_constraint_target(sizes) -> float:
    sizes = np.asarray(sizes, dtype=float)
    r = len(sizes)
    n = sizes.sum()
    return r / (r - 1) * float(np.sum(sizes**2)) - n**2 / (r - 1)


def build_known_sizes(g: Graph, sizes) -> SdpProblem:
    """Known-sizes program: maximize <A, X> subject to the sum constraint."""
    sizes = [int(s) for s in sizes]
    if sum(sizes) != g.n or any(s < 1 for s in sizes):
        raise ParameterError(f"sizes {sizes} do not sum to n={g.n}")
    r = len(sizes)
    if r < 2:
        raise ParameterError("need r >= 2")
    return SdpProblem(
        n=g.n, r=r, objective=g.adjacency(), j_target=j_constraint_target(sizes)
    )


def build_unknown_sizes(g: Graph, r: int, omega: float) -> SdpProblem:
    """Unknown-sizes program: maximize <A - omega J, X>."""
    if r < 2:
        raise ParameterError("need r >= 2")
    if not (0.0 < omega < 1.0):
        raise ParameterError(f"need 0 < omega < 1, got {omega}")
    c = g.adjacency() - omega
    return SdpProblem(n=g.n, r=r, objective=c, omega=omega)


def objective_value(g: Graph, X: np.ndarray, omega: float | None = None) -> float:
    """<A, X>, minus omega <J, X> when omega is given."""
    X = np.asarray(X, dtype=float)
    if X.shape != (g.n, g.n):
        raise ParameterError(f"matrix shape {X.shape} does not match n={g.n}")
    value = float(np.sum(g.adjacency() * X))
    if omega is not None:
        value -= omega * float(np.sum(X))
    return value


def _project_psd(y: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(y)
    pos = w > 0
    if not np.any(pos):
        return np.zeros_like(y)
    vp = v[:, pos] * w[pos]
    return vp @ v[:, pos].T


def _project_affine(y: np.ndarray, j_target: float | None) -> np.ndarray:
    out = y.copy()
    np.fill_diagonal(out, 1.0)
    if j_target is not None:
        n = y.shape[0]
        off = float(out.sum()) - n
        shift = (j_target - n - off) / (n * n - n)
        out += shift
        np.fill_diagonal(out, 1.0)
    return out


def solve(prob: SdpProblem, opts: SolverOptions | None = None) -> SdpSolution:
    """Consensus ADMM over {PSD} x {affine} x {box}; never raises on
    non-convergence (returns the best iterate with converged=False)."""
    opts = opts or SolverOptions()
    n = prob.n
    lb = prob.lower_bound
    c_mat = prob.objective
    rho = opts.rho
    x = np.eye(n)
    z = [x.copy(), x.copy(), x.copy()]
    u = [np.zeros((n, n)) for _ in range(3)]
    scale = n  # residual normalization
    primal = dual = math.inf
    iterates: list = []
    it = 0
    for it in range(1, opts.max_iters + 1):
        x_prev = x
        x = (z[0] - u[0] + z[1] - u[1] + z[2] - u[2]) / 3.0 + c_mat / (3.0 * rho)
        x = 0.5 * (x + x.T)
        z[0] = _project_psd(x + u[0])
        z[1] = _project_affine(x + u[1], prob.j_target)
        z[2] = np.clip(x + u[2], lb, 1.0)
        primal = 0.0
        for k in range(3):
            u[k] += x - z[k]
            primal = max(primal, float(np.linalg.norm(x - z[k])))
        primal /= scale
        dual = rho * float(np.linalg.norm(x - x_prev)) / scale
        if opts.keep_iterates and it % opts.keep_iterates == 0:
            iterates.append(x.copy())
        if max(primal, dual) < opts.tol:
            break
        if opts.adapt_every and it % opts.adapt_every == 0:
            if primal > 10.0 * dual:
                rho *= 2.0
                for k in range(3):
                    u[k] /= 2.0
            elif dual > 10.0 * primal:
                rho /= 2.0
                for k in range(3):
                    u[k] *= 2.0
    converged = max(primal, dual) < opts.tol
    return SdpSolution(
        X=x,
        objective=float(np.sum(c_mat * x)),
        primal_residual=primal,
        dual_residual=dual,
        iterations=it,
        converged=converged,
        iterates=iterates,
    )


def _labels_from_components(same: np.ndarray, r: int) -> PartitionLabels | None:
    """Labels when the same-community relation is exactly r disjoint cliques."""
    n = same.shape[0]
    labels = -np.ones(n, dtype=int)
    comp = 0
    for v in range(n):
        if labels[v] >= 0:
            continue
        members = np.flatnonzero(same[v])
        if np.any(labels[members] >= 0):
            return None
        # the block must be mutually complete and closed
        sub = same[np.ix_(members, members)]
        if not np.all(sub):
            return None
        outside = np.ones(n, dtype=bool)
        outside[members] = False
        if np.any(same[np.ix_(members, np.flatnonzero(outside))]):
            return None
        labels[members] = comp
        comp += 1
    if comp != r:
        return None
    return PartitionLabels(labels=tuple(labels.tolist()), r=r)


def _spectral_labels(X: np.ndarray, r: int) -> PartitionLabels | None:
    from scipy.cluster.vq import kmeans2

    w, v = np.linalg.eigh(X)
    rows = v[:, -(r - 1):] * w[-(r - 1):]
    if rows.ndim == 1:
        rows = rows[:, None]
    _, assign = kmeans2(rows, r, minit="++", seed=12345)
    if len(set(assign.tolist())) != r:
        return None
    # canonical first-occurrence relabeling
    remap, labels = {}, []
    for a in assign.tolist():
        if a not in remap:
            remap[a] = len(remap)
        labels.append(remap[a])
    return PartitionLabels(labels=tuple(labels), r=r)


def round_to_partition(
    sol: SdpSolution, r: int, round_tol: float = 0.1
) -> RoundingResult:
    """Snap a solved matrix to the nearest centered partition matrix.

    Entries are thresholded at the midpoint between 1 and -1/(r-1); if the
    resulting same-community relation is not exactly r disjoint cliques, fall
    back to clustering rows by the top r-1 eigenvectors.  The candidate is
    accepted only if its centered partition matrix is entrywise within
    round_tol of the solved matrix.
    """
    if r < 2:
        raise ParameterError("need r >= 2")
    X = sol.X
    mid = 0.5 * (1.0 - 1.0 / (r - 1))
    same = X > mid
    np.fill_diagonal(same, True)
    labels = _labels_from_components(same, r)
    if labels is None:
        labels = _spectral_labels(X, r)
    if labels is None:
        return RoundingResult(labels=None, success=False, max_deviation=math.inf)
    deviation = float(np.max(np.abs(centered_partition_matrix(labels) - X)))
    if deviation > round_tol:
        return RoundingResult(labels=None, success=False, max_deviation=deviation)
    return RoundingResult(labels=labels, success=True, max_deviation=deviation)
