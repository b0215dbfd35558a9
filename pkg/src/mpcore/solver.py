"""Multiplex nonlinear spectral method for node and layer coreness.

The objective is

    f(x, c) = sum_k c_k sum_{i,j} A^(k)_ij (x_i^a + x_j^a)^(1/a)

maximised over positive ``x`` with unit p-norm and positive ``c`` with unit
q-norm.  :func:`solve` runs the alternating fixed-point iteration

    x <- J_{p*}(grad_x f(x, c)),   c <- J_{q*}(grad_c f(x, c))

where both updates read the same previous pair.  Every gradient evaluation is
a single pass over the stored edges, so one iteration costs O(nnz + n + L).
"""

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .tensor import MultiplexAdjacency

log = logging.getLogger(__name__)

ASCENT_SLACK = 1e-12


class NumericalError(RuntimeError):
    """The iteration produced non-finite values or broke monotone ascent."""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverParams:
    """Parameters of the nonlinear power iteration.

    ``fix_layer_weights`` emulates the ``q -> inf`` limit: ``c`` is held at the
    all-ones direction (rescaled to unit q-norm) and never updated.
    """

    alpha: float = 10.0
    p: float = 2.0
    q: float = 2.0
    tol: float = 1e-8
    max_iter: int = 1000
    fix_layer_weights: bool = False
    check_ascent: bool = True

    def __post_init__(self):
        for name in ("alpha", "p", "q"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 1):
                raise ValueError(f"{name} must be a finite number > 1, got {val}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")

    @property
    def p_star(self):
        return self.p / (self.p - 1)

    @property
    def q_star(self):
        return self.q / (self.q - 1)

    @classmethod
    def preset(cls, name, **overrides):
        """``global`` (p=22, q=2), ``local`` (p=q=2) or ``equal-weights``."""
        try:
            base = PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
        return cls(**{**base, **overrides})


PRESETS = {
    "global": dict(alpha=10.0, p=22.0, q=2.0),
    "local": dict(alpha=10.0, p=2.0, q=2.0),
    "equal-weights": dict(alpha=10.0, p=22.0, q=2.0, fix_layer_weights=True),
}


@dataclass(frozen=True)
class CorenessState:
    x: np.ndarray
    c: np.ndarray


@dataclass
class SolverReport:
    state: CorenessState
    iterations: int
    g_trace: list
    x_steps: list
    c_steps: list
    converged: bool
    objective: float
    params: SolverParams
    wall_time: float = 0.0

    @property
    def x(self):
        return self.state.x

    @property
    def c(self):
        return self.state.c

    @property
    def c_1norm(self):
        c = self.state.c
        return c / c.sum()


class Regime(enum.Enum):
    GLOBAL_CONTRACTION = "GlobalContraction"
    LOCAL_ASCENT_ONLY = "LocalAscentOnly"


@dataclass(frozen=True)
class ContractionReport:
    theta: np.ndarray
    m_matrix: np.ndarray
    rho: float
    regime: Regime


@dataclass(frozen=True)
class EdgeTensor:
    """Flat edge view consumed by the objective and gradients.

    Each undirected edge appears once with ``u < v``; ``weight`` is ``None``
    for binary layers.
    """

    num_nodes: int
    num_layers: int
    u: np.ndarray
    v: np.ndarray
    layer: np.ndarray
    weight: np.ndarray = field(default=None)

    @classmethod
    def from_weighted(cls, matrix):
        """Single weighted layer from a symmetric non-negative matrix."""
        m = sp.coo_matrix(matrix)
        n = m.shape[0]
        if m.shape != (n, n):
            raise ValueError("adjacency must be square")
        if m.data.size and m.data.min() < 0:
            raise ValueError("edge weights must be non-negative")
        csr = m.tocsr()
        if csr.nnz and abs(csr - csr.T).max() > 0:
            raise ValueError("weighted adjacency must be symmetric")
        up = sp.triu(csr, k=1).tocoo()
        keep = up.data != 0
        u, v, w = up.row[keep].astype(np.int64), up.col[keep].astype(np.int64), up.data[keep]
        return cls(n, 1, u, v, np.zeros(u.size, dtype=np.int64), np.asarray(w, dtype=np.float64))


def as_edge_tensor(A):
    if isinstance(A, EdgeTensor):
        return A
    if isinstance(A, MultiplexAdjacency):
        u, v, layer = A.edge_arrays
        return EdgeTensor(A.num_nodes, A.num_layers, u, v, layer)
    if sp.issparse(A) or isinstance(A, np.ndarray):
        return EdgeTensor.from_weighted(A)
    raise TypeError(f"cannot interpret {type(A).__name__} as a multiplex")


def pnorm(v, r):
    """r-norm of a non-negative vector, scaled by its max to avoid overflow."""
    v = np.asarray(v, dtype=np.float64)
    m = v.max(initial=0.0)
    if m == 0:
        return 0.0
    return float(m * np.sum((v / m) ** r) ** (1.0 / r))


def smoothed_max(a, b, alpha):
    """``(a^alpha + b^alpha)^(1/alpha)`` for non-negative arrays, overflow-safe."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    hi = np.maximum(a, b)
    safe = np.where(hi > 0, hi, 1.0)
    s = (a / safe) ** alpha + (b / safe) ** alpha
    return np.where(hi > 0, hi * s ** (1.0 / alpha), 0.0)


def _edge_terms(et, x, alpha, work=None):
    """Per-edge kernel value and the two partial-derivative factors.

    With ``M = max(x_u, x_v)``, ``r = x/M`` and ``s = r_u^a + r_v^a`` (which
    lies in ``[1, 2]``): kernel ``M s^(1/a)`` and
    ``x_u^(a-1) (x_u^a + x_v^a)^(1/a - 1) = r_u^(a-1) s^(1/a - 1)``.
    Edges with both endpoints at zero contribute nothing.

    ``work`` is an optional ``(7, m)`` buffer reused across calls; the returned
    arrays are views into it and are overwritten by the next call.
    """
    if work is None:
        work = np.empty((7, et.u.size))
    xu, xv, hi, kernel, du, dv = work[:6]
    np.take(x, et.u, out=xu)
    np.take(x, et.v, out=xv)
    np.maximum(xu, xv, out=hi)
    dead = hi == 0 if et.u.size and hi.min() == 0 else None
    if dead is not None:
        hi[dead] = 1.0
    np.divide(xu, hi, out=xu)
    np.divide(xv, hi, out=xv)
    np.power(xu, alpha - 1.0, out=du)
    np.power(xv, alpha - 1.0, out=dv)
    np.multiply(du, xu, out=kernel)
    np.multiply(dv, xv, out=xu)
    kernel += xu
    np.power(kernel, 1.0 / alpha - 1.0, out=xv)
    du *= xv
    dv *= xv
    kernel *= xv
    kernel *= hi
    if dead is not None:
        kernel[dead] = du[dead] = dv[dead] = 0.0
    return kernel, du, dv


def _check_state(et, x, c):
    x = np.asarray(x, dtype=np.float64).ravel()
    c = np.asarray(c, dtype=np.float64).ravel()
    if x.size != et.num_nodes:
        raise ValueError(f"x has {x.size} entries, multiplex has {et.num_nodes} nodes")
    if c.size != et.num_layers:
        raise ValueError(f"c has {c.size} entries, multiplex has {et.num_layers} layers")
    if np.any(x < 0) or np.any(c < 0):
        raise ValueError("x and c must be non-negative")
    return x, c


def _grad_c_from(et, kernel):
    w = kernel if et.weight is None else kernel * et.weight
    return 2.0 * np.bincount(et.layer, weights=w, minlength=et.num_layers)


def _grad_x_from(et, c, du, dv, scratch=None):
    # scales du and dv in place
    ce = np.take(c, et.layer, out=scratch)
    if et.weight is not None:
        ce *= et.weight
    du *= ce
    dv *= ce
    n = et.num_nodes
    return 2.0 * (np.bincount(et.u, weights=du, minlength=n)
                  + np.bincount(et.v, weights=dv, minlength=n))


def _unpack(s, x, c):
    if s is not None:
        return s.x, s.c
    return x, c


def objective_f(A, state=None, params=None, *, x=None, c=None, alpha=None):
    """Objective value; every undirected edge counts for both orientations."""
    et = as_edge_tensor(A)
    x, c = _check_state(et, *_unpack(state, x, c))
    a = params.alpha if params is not None else alpha
    kernel, _, _ = _edge_terms(et, x, a)
    return float(c @ _grad_c_from(et, kernel))


def quotient_g(A, state=None, params=None, *, x=None, c=None):
    """Scale-invariant quotient ``f / (||x||_p ||c||_q)``."""
    x, c = _unpack(state, x, c)
    nx, nc = pnorm(x, params.p), pnorm(c, params.q)
    if nx == 0 or nc == 0:
        raise ValueError("x and c must be nonzero")
    return objective_f(A, params=params, x=x, c=c) / (nx * nc)


def grad_x(A, state=None, params=None, *, x=None, c=None, alpha=None):
    et = as_edge_tensor(A)
    x, c = _check_state(et, *_unpack(state, x, c))
    a = params.alpha if params is not None else alpha
    _, du, dv = _edge_terms(et, x, a)
    return _grad_x_from(et, c, du, dv)


def grad_c(A, state=None, params=None, *, x=None, c=None, alpha=None):
    et = as_edge_tensor(A)
    x, c = _check_state(et, *_unpack(state, x, c))
    a = params.alpha if params is not None else alpha
    kernel, _, _ = _edge_terms(et, x, a)
    return _grad_c_from(et, kernel)


def dual_norm_map(y, r):
    """``J_{r*}(y) = (y / ||y||_{r*})^(1/(r-1))``, a point on the unit r-sphere."""
    y = np.asarray(y, dtype=np.float64)
    if not r > 1:
        raise ValueError("r must exceed 1")
    if np.any(y < 0):
        raise ValueError("dual_norm_map expects a non-negative vector")
    r_star = r / (r - 1.0)
    nrm = pnorm(y, r_star)
    if nrm == 0:
        raise ValueError("dual_norm_map of the zero vector is undefined")
    return (y / nrm) ** (1.0 / (r - 1.0))


def contraction_report(params):
    """Lipschitz matrices of the fixed-point map and the resulting regime."""
    a, p, q = params.alpha, params.p, params.q
    theta = np.array([[abs(a - 1.0), 1.0], [2.0, 0.0]])
    m = np.array([[2.0 * abs(a - 1.0) / (p - 1.0), 1.0 / (p - 1.0)],
                  [2.0 / (q - 1.0), 0.0]])
    rho = 0.5 * float(m[0, 0] + math.sqrt(m[0, 0] ** 2 + 4.0 * m[0, 1] * m[1, 0]))
    regime = Regime.GLOBAL_CONTRACTION if rho < 1 else Regime.LOCAL_ASCENT_ONLY
    return ContractionReport(theta, m, rho, regime)


def random_start(num_nodes, num_layers, rng):
    """Strictly positive random start vectors."""
    return CorenessState(rng.uniform(0.1, 1.0, num_nodes), rng.uniform(0.1, 1.0, num_layers))


def solve(A, params=None, start=None):
    """Run the alternating nonlinear power iteration.

    Args:
        A: a :class:`MultiplexAdjacency`, an :class:`EdgeTensor`, or a
            symmetric non-negative matrix (treated as one weighted layer).
        params: :class:`SolverParams`; defaults to ``alpha=10, p=q=2``.
        start: strictly positive :class:`CorenessState`; all-ones by default.

    Returns:
        A :class:`SolverReport`.  ``g_trace[k]`` is the quotient at the k-th
        iterate, the last entry belonging to the returned state.

    Raises:
        ValueError: bad start vector or an edgeless multiplex.
        NumericalError: non-finite values or a drop of the quotient.
    """
    params = params or SolverParams()
    et = as_edge_tensor(A)
    n, L = et.num_nodes, et.num_layers
    if start is None:
        x0, c0 = np.ones(n), np.ones(L)
    else:
        x0, c0 = _check_state(et, start.x, start.c)
        if np.any(x0 <= 0) or (not params.fix_layer_weights and np.any(c0 <= 0)):
            raise ValueError("start vectors must be strictly positive")
    if et.u.size == 0:
        raise ValueError("the multiplex has no edges")

    alpha, p, q = params.alpha, params.p, params.q
    if params.fix_layer_weights:
        c0 = np.full(L, L ** (-1.0 / q))
    else:
        c0 = c0 / pnorm(c0, params.q_star)
    x0 = x0 / pnorm(x0, params.p_star)

    g_trace, x_steps, c_steps = [], [], []
    converged = False
    x, c = x0, c0
    it = 0

    def record_g(f_val, xs, cs, k):
        g = f_val / (pnorm(xs, p) * pnorm(cs, q))
        if not math.isfinite(g):
            raise NumericalError("quotient is not finite", k)
        if params.check_ascent and g_trace and g < g_trace[-1] - ASCENT_SLACK * abs(g_trace[-1]):
            raise NumericalError(
                f"quotient decreased from {g_trace[-1]!r} to {g!r} "
                f"(relative drop {(g_trace[-1] - g) / abs(g_trace[-1]):.3e})", k)
        g_trace.append(g)

    # one buffer for all per-edge temporaries; fresh allocations each pass cost
    # as much as the arithmetic on large graphs
    work = np.empty((7, et.u.size))
    t0 = time.perf_counter()
    for it in range(1, params.max_iter + 1):
        kernel, du, dv = _edge_terms(et, x0, alpha, work)
        gc = _grad_c_from(et, kernel)
        gx = _grad_x_from(et, c0, du, dv, work[6])
        record_g(float(c0 @ gc), x0, c0, it - 1)
        if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gc))):
            raise NumericalError("non-finite gradient", it)
        try:
            x = dual_norm_map(gx, p)
            c = c0 if params.fix_layer_weights else dual_norm_map(gc, q)
        except ValueError as exc:
            raise NumericalError(str(exc), it) from None
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(c))):
            raise NumericalError("non-finite iterate", it)
        dx = float(np.max(np.abs(x - x0)))
        dc = float(np.max(np.abs(c - c0)))
        x_steps.append(dx)
        c_steps.append(dc)
        if dx < params.tol and dc < params.tol:
            converged = True
            break
        x0, c0 = x, c
    wall = time.perf_counter() - t0

    if params.max_iter == 0:
        x = x0 / pnorm(x0, p)
        c = c0 if params.fix_layer_weights else c0 / pnorm(c0, q)
    f_final = objective_f(et, x=x, c=c, alpha=alpha)
    record_g(f_final, x, c, it)
    if not converged:
        log.warning("solver stopped after %d iterations without reaching tol=%g", it, params.tol)
    return SolverReport(CorenessState(x, c), it, g_trace, x_steps, c_steps, converged,
                        f_final, params, wall)
