"""Convex Bregman functions: values, proximal maps, subgradients, conjugates.

Every regularizer is a :class:`BregmanFunction` exposing

* ``value(u)``            -- extended-real function value,
* ``prox(z, tau)``        -- argmin_u 0.5*||u - z||^2 + tau * R(u),
* ``initial_subgradient`` -- a deterministic element of the subdifferential,
* ``conjugate_value(q)``  -- the convex conjugate R*(q), where available.

Instances are immutable after construction (the one exception is the opt-in
warm-start cache of :class:`TotalVariation2D`, see its docstring) and operate
on arrays of any shape with the expected number of entries; outputs match the
input's shape.
"""

from __future__ import annotations

import numpy as np

from . import pdhg
from .exceptions import UnsupportedOperation
from .tensor_ops import dct2, idct2, svd_thin, total_variation

# Feasibility band used when evaluating indicator-type values and conjugates;
# certifies subgradients produced by floating-point prox computations.
FEAS_TOL = 1e-9

INF = float("inf")


# ---------------------------------------------------------------------------
# elementary proximal maps
# ---------------------------------------------------------------------------

def prox_l1(z: np.ndarray, lam: float) -> np.ndarray:
    """Soft thresholding: sign(z) * max(|z| - lam, 0)."""
    if lam < 0:
        raise ValueError("threshold must be nonnegative")
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def prox_weighted_l1_dct(z: np.ndarray, lam: float, w: np.ndarray) -> np.ndarray:
    """Prox of lam * sum_l w_l |(C z)_l| with C the orthonormal 2-D DCT.

    Exact because C is orthonormal: shrink in coefficient space, transform back.
    """
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    z = np.asarray(z, dtype=np.float64)
    coef = dct2(z)
    return idct2(np.sign(coef) * np.maximum(np.abs(coef) - lam * w, 0.0))


def project_simplex(z: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {h : h >= 0, sum h = 1} by sort-and-threshold."""
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.size < 1:
        raise ValueError("cannot project an empty vector")
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, z.size + 1)
    rho = np.nonzero(u - css / j > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(z - theta, 0.0)


def prox_nuclear(a: np.ndarray, lam: float) -> np.ndarray:
    """Singular value soft thresholding: U max(s - lam, 0) V^T."""
    if lam < 0:
        raise ValueError("threshold must be nonnegative")
    u, s, v = svd_thin(a)
    return (u * np.maximum(s - lam, 0.0)) @ v.T


def prox_tv(z: np.ndarray, lam: float, tol: float = 1e-7, maxit: int = 2000):
    """Prox of lam * TV via the primal-dual inner solver; returns its result object."""
    cfg = pdhg.PdhgConfig(tol=tol, maxit=maxit)
    return pdhg.pdhg_tv_prox(np.asarray(z, dtype=np.float64), lam, cfg)


# ---------------------------------------------------------------------------
# Bregman-distance calculus
# ---------------------------------------------------------------------------

def bregman_distance(R: "BregmanFunction", u: np.ndarray, v: np.ndarray, q: np.ndarray) -> float:
    """Generalised Bregman distance R(u) - R(v) - <q, u - v> for q in dR(v)."""
    rv = R.value(v)
    if not np.isfinite(rv):
        raise ValueError("base point v lies outside dom(R)")
    ru = R.value(u)
    if ru == INF:
        return INF
    return float(ru - rv - np.vdot(np.ravel(q), np.ravel(u) - np.ravel(v)).real)


def symmetric_bregman_distance(R, u, v, p, q) -> float:
    """Symmetric Bregman distance <p - q, u - v> for p in dR(u), q in dR(v)."""
    du = np.ravel(u) - np.ravel(v)
    dq = np.ravel(p) - np.ravel(q)
    return float(np.vdot(dq, du).real)


def fenchel_residual(R: "BregmanFunction", u: np.ndarray, q: np.ndarray) -> float:
    """Fenchel-Young residual R(u) + R*(q) - <u, q>; zero iff q in dR(u)."""
    rstar = R.conjugate_value(q)
    ru = R.value(u)
    if not np.isfinite(ru) or not np.isfinite(rstar):
        return INF
    return float(ru + rstar - np.vdot(np.ravel(u), np.ravel(q)).real)


# ---------------------------------------------------------------------------
# the abstraction
# ---------------------------------------------------------------------------

class BregmanFunction:
    """Proper, lower semi-continuous, convex function with a proximal map."""

    #: whether ``conjugate_value`` is implemented
    has_conjugate = False
    #: whether the solver should carry this block's dual variable between steps
    dual_memory = True

    def value(self, u) -> float:
        raise NotImplementedError

    def prox(self, z, tau: float) -> np.ndarray:
        raise NotImplementedError

    def initial_subgradient(self, u) -> np.ndarray:
        """A deterministic element of dR(u) (minimal-norm where a choice exists)."""
        raise NotImplementedError

    def conjugate_value(self, q) -> float:
        raise UnsupportedOperation(f"{type(self).__name__} has no convex conjugate evaluation")

    def dual_memory_mask(self) -> np.ndarray | None:
        """0/1 per-entry mask the solver multiplies into new dual iterates;
        None means full memory everywhere."""
        return None


class NoDualMemory(BregmanFunction):
    """Wrapper that makes a block behave like a plain proximal/projected step.

    The solver zeroes the block's dual variable after every iteration, so the
    next step argument is u - tau * grad instead of carrying Bregman memory.
    Intended for indicator functions, where 0 is a subgradient at every
    feasible point and all certificates stay valid; this is how the motivating
    blind-deconvolution iteration treats its kernel simplex constraint while
    keeping the scale-space memory on the image block.
    """

    dual_memory = False

    def __init__(self, inner: "BregmanFunction"):
        self.inner = inner
        self.has_conjugate = inner.has_conjugate

    def value(self, u):
        return self.inner.value(u)

    def prox(self, z, tau):
        return self.inner.prox(z, tau)

    def initial_subgradient(self, u):
        return self.inner.initial_subgradient(u)

    def conjugate_value(self, q):
        return self.inner.conjugate_value(q)


class Zero(BregmanFunction):
    """R = 0; the linearised Bregman iteration degenerates to gradient descent."""

    has_conjugate = True

    def value(self, u):
        return 0.0

    def prox(self, z, tau):
        return np.array(z, dtype=np.float64, copy=True)

    def initial_subgradient(self, u):
        return np.zeros_like(np.asarray(u, dtype=np.float64))

    def conjugate_value(self, q):
        q = np.ravel(q)
        scale = FEAS_TOL * (1.0 + np.sqrt(q.size))
        return 0.0 if np.all(np.abs(q) <= scale) else INF


class SquaredL2(BregmanFunction):
    """R(u) = (alpha/2) ||u||^2."""

    has_conjugate = True

    def __init__(self, alpha: float = 1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)

    def value(self, u):
        u = np.ravel(u)
        return 0.5 * self.alpha * float(np.dot(u, u))

    def prox(self, z, tau):
        return np.asarray(z, dtype=np.float64) / (1.0 + tau * self.alpha)

    def initial_subgradient(self, u):
        return self.alpha * np.asarray(u, dtype=np.float64)

    def conjugate_value(self, q):
        q = np.ravel(q)
        return 0.5 / self.alpha * float(np.dot(q, q))


class L1(BregmanFunction):
    """R(u) = alpha ||u||_1."""

    has_conjugate = True

    def __init__(self, alpha: float = 1.0):
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.alpha = float(alpha)

    def value(self, u):
        return self.alpha * float(np.sum(np.abs(u)))

    def prox(self, z, tau):
        return prox_l1(z, tau * self.alpha)

    def initial_subgradient(self, u):
        return self.alpha * np.sign(np.asarray(u, dtype=np.float64))

    def conjugate_value(self, q):
        bound = self.alpha + FEAS_TOL * (1.0 + self.alpha)
        return 0.0 if np.max(np.abs(q), initial=0.0) <= bound else INF


class WeightedL1Dct(BregmanFunction):
    """R(u) = alpha * sum_l w_l |(C u)_l| with orthonormal 2-D DCT coefficients."""

    has_conjugate = True

    def __init__(self, alpha: float, weights, shape):
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.alpha = float(alpha)
        self.shape = tuple(shape)
        w = np.asarray(weights, dtype=np.float64).reshape(self.shape)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        self.weights = w

    def _img(self, u):
        return np.asarray(u, dtype=np.float64).reshape(self.shape)

    def value(self, u):
        return self.alpha * float(np.sum(self.weights * np.abs(dct2(self._img(u)))))

    def prox(self, z, tau):
        z = np.asarray(z, dtype=np.float64)
        out = prox_weighted_l1_dct(self._img(z), tau * self.alpha, self.weights)
        return out.reshape(z.shape)

    def initial_subgradient(self, u):
        u = np.asarray(u, dtype=np.float64)
        coef = dct2(self._img(u))
        g = idct2(self.alpha * self.weights * np.sign(coef))
        return g.reshape(u.shape)

    def conjugate_value(self, q):
        coef = np.abs(dct2(self._img(q)))
        bound = self.alpha * self.weights + FEAS_TOL * (1.0 + self.alpha * self.weights)
        return 0.0 if np.all(coef <= bound) else INF


class SimplexIndicator(BregmanFunction):
    """Indicator of the probability simplex {h >= 0, sum h = 1}."""

    has_conjugate = True

    def _feasible(self, u):
        u = np.ravel(u)
        tol = FEAS_TOL * (1.0 + np.sqrt(u.size))
        return abs(float(np.sum(u)) - 1.0) <= tol and float(np.min(u)) >= -tol

    def value(self, u):
        return 0.0 if self._feasible(u) else INF

    def prox(self, z, tau):
        z = np.asarray(z, dtype=np.float64)
        return project_simplex(z).reshape(z.shape)

    def initial_subgradient(self, u):
        if not self._feasible(u):
            raise ValueError("initial point lies outside the simplex")
        return np.zeros_like(np.asarray(u, dtype=np.float64))

    def conjugate_value(self, q):
        # support function of the simplex
        return float(np.max(np.ravel(q)))


class NonnegativeIndicator(BregmanFunction):
    """Indicator of the nonnegative orthant {u >= 0}."""

    has_conjugate = True

    def value(self, u):
        return 0.0 if float(np.min(np.ravel(u), initial=0.0)) >= -FEAS_TOL else INF

    def prox(self, z, tau):
        return np.maximum(np.asarray(z, dtype=np.float64), 0.0)

    def initial_subgradient(self, u):
        if self.value(u) == INF:
            raise ValueError("initial point has negative entries")
        return np.zeros_like(np.asarray(u, dtype=np.float64))

    def conjugate_value(self, q):
        return 0.0 if float(np.max(np.ravel(q), initial=0.0)) <= FEAS_TOL else INF


class NuclearNorm(BregmanFunction):
    """R(A) = alpha * sum of singular values, on matrices of a fixed shape."""

    has_conjugate = True

    def __init__(self, alpha: float, shape):
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.alpha = float(alpha)
        self.shape = tuple(shape)

    def _mat(self, u):
        return np.asarray(u, dtype=np.float64).reshape(self.shape)

    def value(self, u):
        return self.alpha * float(np.sum(np.linalg.svd(self._mat(u), compute_uv=False)))

    def prox(self, z, tau):
        z = np.asarray(z, dtype=np.float64)
        return prox_nuclear(self._mat(z), tau * self.alpha).reshape(z.shape)

    def initial_subgradient(self, u):
        u = np.asarray(u, dtype=np.float64)
        uu, s, v = svd_thin(self._mat(u))
        cutoff = 1e-12 * max(float(s[0]) if s.size else 0.0, 1e-300)
        keep = s > cutoff
        g = self.alpha * (uu[:, keep] @ v[:, keep].T)
        return g.reshape(u.shape)

    def conjugate_value(self, q):
        s = np.linalg.svd(self._mat(q), compute_uv=False)
        smax = float(s[0]) if s.size else 0.0
        return 0.0 if smax <= self.alpha + FEAS_TOL * (1.0 + self.alpha) else INF


class TotalVariation2D(BregmanFunction):
    """R(u) = alpha * TV(u) on images of a fixed shape; prox via the PDHG inner solver.

    No closed-form conjugate exists in this discretisation, so subgradient
    certification for TV relies on prox-construction optimality only.

    With ``warm_start=True`` (default) the instance keeps the last inner dual
    variable and reuses it for the next prox call, cutting inner iterations
    when consecutive arguments are close (as they are along an outer solver
    run).  A warm-started instance should not be shared between concurrently
    running solvers; construct one per run, or pass ``warm_start=False``.

    With ``strict=False`` an exhausted inner iteration budget returns the best
    iterate found instead of raising.  Long outer runs use this: early prox
    calls only need coarse accuracy, while late warm-started calls reach far
    below the tolerance anyway, so the inexactness vanishes as the outer
    iteration converges.
    """

    has_conjugate = False

    def __init__(self, alpha: float, shape, config: pdhg.PdhgConfig | None = None,
                 warm_start: bool = True, strict: bool = True):
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        self.alpha = float(alpha)
        self.shape = tuple(shape)
        self.config = config if config is not None else pdhg.PdhgConfig()
        self.warm_start = bool(warm_start)
        self.strict = bool(strict)
        self._dual = None
        self._dual_lam = None

    def _img(self, u):
        return np.asarray(u, dtype=np.float64).reshape(self.shape)

    def value(self, u):
        return self.alpha * total_variation(self._img(u))

    def prox(self, z, tau):
        from .exceptions import NotConvergedError

        z = np.asarray(z, dtype=np.float64)
        lam = tau * self.alpha
        dual0 = None
        if self.warm_start and self._dual is not None:
            dual0 = self._dual
            # the dual solution scales with the ball radius; rescale the warm
            # start when the outer stepsize changed between calls
            if self._dual_lam and self._dual_lam > 0 and lam > 0:
                dual0 = dual0 * (lam / self._dual_lam)
        try:
            res = pdhg.pdhg_tv_prox(self._img(z), lam, self.config, dual0=dual0)
        except NotConvergedError as err:
            if self.strict:
                raise
            res = err.result
        if self.warm_start:
            self._dual = res.dual
            self._dual_lam = lam
        return res.u.reshape(z.shape)

    def initial_subgradient(self, u):
        from .tensor_ops import div2d, grad2d_forward

        u = np.asarray(u, dtype=np.float64)
        g = grad2d_forward(self._img(u))
        mag = np.sqrt(g[0] ** 2 + g[1] ** 2)
        field = np.zeros_like(g)
        np.divide(g, mag[None, :, :], out=field, where=mag[None, :, :] > 0)
        return (-self.alpha * div2d(field)).reshape(u.shape)


class SeparableSum(BregmanFunction):
    """Block-separable sum R(u) = sum_i R_i(u[range_i]) over a partition of indices."""

    def __init__(self, parts):
        spans = []
        for R, span in parts:
            start, stop = int(span[0]), int(span[1])
            if stop <= start:
                raise ValueError(f"empty block ({start}, {stop})")
            spans.append((R, start, stop))
        spans.sort(key=lambda t: t[1])
        cursor = 0
        for _, start, stop in spans:
            if start != cursor:
                raise ValueError("block ranges must partition the variable without gaps or overlap")
            cursor = stop
        self.parts = spans
        self.size = cursor
        self.has_conjugate = all(R.has_conjugate for R, _, _ in spans)
        self.dual_memory = all(R.dual_memory for R, _, _ in spans)

    def _flat(self, u):
        u = np.ravel(np.asarray(u, dtype=np.float64))
        if u.size != self.size:
            raise ValueError(f"expected {self.size} entries, got {u.size}")
        return u

    def value(self, u):
        u = self._flat(u)
        total = 0.0
        for R, a, b in self.parts:
            v = R.value(u[a:b])
            if v == INF:
                return INF
            total += v
        return total

    def prox(self, z, tau):
        zf = self._flat(z)
        out = np.empty_like(zf)
        for R, a, b in self.parts:
            out[a:b] = np.ravel(R.prox(zf[a:b], tau))
        return out.reshape(np.asarray(z).shape)

    def initial_subgradient(self, u):
        uf = self._flat(u)
        out = np.empty_like(uf)
        for R, a, b in self.parts:
            out[a:b] = np.ravel(R.initial_subgradient(uf[a:b]))
        return out.reshape(np.asarray(u).shape)

    def conjugate_value(self, q):
        if not self.has_conjugate:
            raise UnsupportedOperation("a block has no conjugate evaluation")
        qf = self._flat(q)
        total = 0.0
        for R, a, b in self.parts:
            v = R.conjugate_value(qf[a:b])
            if not np.isfinite(v):
                return INF
            total += v
        return total

    def dual_memory_mask(self):
        if self.dual_memory:
            return None
        mask = np.ones(self.size)
        for R, a, b in self.parts:
            inner = R.dual_memory_mask()
            if inner is not None:
                mask[a:b] = np.ravel(inner)
            elif not R.dual_memory:
                mask[a:b] = 0.0
        return mask


def compose_separable(parts) -> SeparableSum:
    """Build a block-separable Bregman function from (function, (start, stop)) pairs."""
    return SeparableSum(parts)
