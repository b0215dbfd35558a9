"""Reference coreness scores computed on the weighted aggregate network."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .quality import qubo_operator
from .solver import EdgeTensor, NumericalError, SolverParams, solve
from .tensor import aggregate

POWER_TOL = 1e-10
POWER_MAX_ITER = 10000


@dataclass
class BaselineResult:
    method: str
    x: np.ndarray
    c: np.ndarray
    meta: dict = field(default_factory=dict)


def _weights(A, c):
    c = np.asarray(c, dtype=np.float64).ravel()
    if c.size != A.num_layers:
        raise ValueError(f"need {A.num_layers} layer weights, got {c.size}")
    if np.any(c < 0) or not np.all(np.isfinite(c)) or not np.any(c > 0):
        raise ValueError("layer weights must be non-negative, finite and not all zero")
    return c


def ml_degree(A, c):
    """Multilayer degree ``sum_k c_k d^(k)``."""
    c = _weights(A, c)
    return BaselineResult("ml-degree", c @ A.degrees.astype(np.float64), c)


def power_iteration(matvec, n, shift, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """Dominant eigenvector of ``M + shift*I`` from the all-ones start.

    Returns ``(x, iterations)`` with ``||x||_2 = 1``; stops once successive
    iterates differ by less than ``tol`` in the max norm.
    """
    x = np.full(n, 1.0 / np.sqrt(n))
    for it in range(1, max_iter + 1):
        y = matvec(x) + shift * x
        nrm = np.linalg.norm(y)
        if nrm == 0 or not np.isfinite(nrm):
            raise NumericalError("power iteration hit a zero or non-finite vector", it)
        y /= nrm
        if np.max(np.abs(y - x)) < tol:
            return y, it
        x = y
    raise NumericalError(f"power iteration did not converge in {max_iter} steps")


def eig_a(A, c):
    """Perron vector of the aggregate adjacency ``sum_k c_k A^(k)``.

    The iteration runs on ``W + sigma I`` with ``sigma`` half the largest row
    sum, which leaves the Perron vector unchanged and breaks the +-lambda tie
    of bipartite graphs.  On a disconnected aggregate the result is the Perron
    vector of the dominant component.
    """
    c = _weights(A, c)
    W = aggregate(A, c / c.sum())
    if W.nnz == 0:
        raise ValueError("aggregate network has no edges")
    shift = 0.5 * float(np.abs(W).sum(axis=1).max())
    x, its = power_iteration(lambda v: W @ v, A.num_nodes, shift)
    if x.sum() < 0:
        x = -x
    x = np.clip(x, 0.0, None)
    return BaselineResult("eig-a", x, c, {"iterations": its})


def eig_q(A, c, exclude_degenerate=False):
    """Top eigenvector of the weighted multiplex QUBO matrix.

    The matrix is indefinite, so the iteration runs on ``Q + sigma I`` with
    ``sigma`` an upper bound on its absolute row sums.  The eigenvector may
    carry mixed signs; it is oriented to a non-negative sum and shifted by its
    minimum, which keeps the node ranking intact.
    """
    c = _weights(A, c)
    op, bound = qubo_operator(A, c, exclude_degenerate)
    x, its = power_iteration(op.matvec, A.num_nodes, bound)
    if x.sum() < 0:
        x = -x
    lo = x.min()
    if lo < 0:
        x = x - lo
    return BaselineResult("eig-q", x, c, {"iterations": its, "shift": bound})


def _h_operator(adj, h):
    """One sweep of the H-operator: largest k with k neighbours scoring >= k."""
    n = adj.shape[0]
    rows = np.repeat(np.arange(n), np.diff(adj.indptr))
    vals = h[adj.indices]
    order = np.lexsort((-vals, rows))
    vals = vals[order]
    pos = np.arange(vals.size) - adj.indptr[rows] + 1  # rows stay sorted
    return np.bincount(rows[vals >= pos], minlength=n)


def h_index(A, c):
    """Fixed point of the iterated H-operator on the binarised aggregate.

    Starts from the degree sequence; the sequence never increases, so the
    loop ends after finitely many sweeps.
    """
    c = _weights(A, c)
    W = aggregate(A, c)
    adj = sp.csr_matrix((np.ones(W.nnz), W.indices, W.indptr), shape=W.shape)
    adj.eliminate_zeros()
    h = np.diff(adj.indptr).astype(np.int64)
    sweeps = 0
    while True:
        new = _h_operator(adj, h)
        sweeps += 1
        if np.array_equal(new, h):
            break
        h = new
    weighted = bool(W.nnz and np.ptp(W.data) > 0)
    return BaselineResult("h-index", h.astype(np.float64), c,
                          {"sweeps": sweeps, "binarised_weighted_aggregate": weighted})


def nsm_single_layer(adjacency, params=None, binarise=False, start=None):
    """Single-layer nonlinear spectral method on a (weighted) adjacency."""
    params = params or SolverParams()
    W = sp.csr_matrix(adjacency, dtype=np.float64)
    if binarise:
        W = sp.csr_matrix((np.ones(W.nnz), W.indices, W.indptr), shape=W.shape)
        W.eliminate_zeros()
    report = solve(EdgeTensor.from_weighted(W), params, start)
    return BaselineResult("nsm", report.x, np.ones(1), {"report": report})


def nsm_aggregated(A, c, params=None, binarise=False):
    c = _weights(A, c)
    res = nsm_single_layer(aggregate(A, c / c.sum()), params, binarise)
    res.method = "nsm-aggregated"
    res.c = c
    return res
