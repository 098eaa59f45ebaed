"""Exact Gaussian-process regression on the unit cube.

Everything here works in the normalized view: inputs in [0, 1]^d, targets
standardized by the caller.  The model is

    f ~ GP(m, k),    y_i = f(x_i) + eps_i,   eps_i ~ N(0, sigma2)

with a constant mean m and a stationary ARD kernel (Matern-5/2 by default,
RBF selectable).  Inference is dense: one Cholesky factorization of
K + sigma2*I per fit or prediction, with a diagonal jitter ladder as the
fallback for near-singular covariances (duplicate inputs).

Hyperparameters theta = (lengthscales, signal variance, noise variance,
mean) are chosen by multi-start maximization of the log marginal
likelihood

    log p(y | X, theta) = -1/2 (y-m)' (K+sigma2 I)^{-1} (y-m)
                          - sum_i log L_ii - N/2 log(2 pi)

using the analytic gradient over log-parameters and a bounded
quasi-Newton local method (L-BFGS-B).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf, dpotrs
from scipy.optimize import minimize

from .errors import NumericalError, NumericsWarning, SpaceError, UsageError
from .sobol import MAX_DIMENSION, SobolEngine

MATERN52 = "matern52"
RBF = "rbf"

LENGTHSCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_VARIANCE_BOUNDS = (1e-4, 1e4)
NOISE_VARIANCE_BOUNDS = (1e-8, 1.0)
MEAN_BOUNDS = (-2.0, 2.0)

# Relative jitter ladder; scaled by the mean diagonal of K when factorizing.
JITTER_LADDER = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)

_SQRT5 = math.sqrt(5.0)
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Stationary ARD kernel: family, per-dimension lengthscales, amplitude."""

    family: str
    lengthscales: np.ndarray
    signal_variance: float

    def __post_init__(self):
        if self.family not in (MATERN52, RBF):
            raise UsageError(f"unknown kernel family {self.family!r}")
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise UsageError("lengthscales must be strictly positive and finite")
        if not (np.isfinite(self.signal_variance) and self.signal_variance > 0):
            raise UsageError("signal_variance must be strictly positive and finite")


@dataclass(frozen=True)
class MeanSpec:
    """Constant prior mean."""

    constant: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.constant):
            raise UsageError("mean constant must be finite")


@dataclass(frozen=True, eq=False)
class GpHyperparams:
    kernel: KernelSpec
    mean: MeanSpec
    noise_variance: float

    def __post_init__(self):
        if not (np.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise UsageError("noise_variance must be finite and >= 0")


def default_hyperparams(d: int, family: str = MATERN52) -> GpHyperparams:
    """A sane starting model for unit-cube inputs and standardized targets."""
    return GpHyperparams(
        kernel=KernelSpec(family, np.full(d, 0.5), 1.0),
        mean=MeanSpec(0.0),
        noise_variance=1e-4,
    )


@dataclass(frozen=True, eq=False)
class GpModel:
    """A fitted (or directly constructed) GP with its cached factorization.

    ``chol`` is the lower Cholesky factor of K + (noise + jitter) I and
    ``alpha`` solves (L L') alpha = y - m.  ``noise_diag``, when present,
    is a fixed per-observation noise variance that replaces the
    homoscedastic ``theta.noise_variance``.
    """

    X: np.ndarray
    y: np.ndarray
    theta: GpHyperparams
    chol: np.ndarray | None
    alpha: np.ndarray | None
    jitter_used: float
    noise_diag: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Predictive mean and variance per query point."""

    means: np.ndarray
    variances: np.ndarray


def _scaled_sq_dists(spec: KernelSpec, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    # Explicit differences (not the a^2+b^2-2ab trick) so that coincident
    # points give exactly zero and the matrix is exactly symmetric.
    diff = (X[:, None, :] - Z[None, :, :]) / spec.lengthscales
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kernel_from_r2(spec: KernelSpec, r2: np.ndarray) -> np.ndarray:
    s2 = spec.signal_variance
    if spec.family == RBF:
        return s2 * np.exp(-0.5 * r2)
    r = np.sqrt(r2)
    return s2 * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-_SQRT5 * r)


def kernel_eval(spec: KernelSpec, u, v) -> float:
    """k(u, v) for a single pair of points."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.shape != spec.lengthscales.shape:
        raise SpaceError(
            f"kernel_eval dimension mismatch: {u.shape}, {v.shape}, "
            f"lengthscales {spec.lengthscales.shape}"
        )
    r2 = float(np.sum(((u - v) / spec.lengthscales) ** 2))
    return float(_kernel_from_r2(spec, np.asarray(r2)))


def kernel_matrix(spec: KernelSpec, X: np.ndarray, Z: np.ndarray | None = None) -> np.ndarray:
    """Covariance matrix K(X, Z); K(X, X) when Z is omitted."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.lengthscales.shape[0]:
        raise SpaceError(
            f"kernel_matrix dimension mismatch: inputs have {X.shape[1]} columns, "
            f"kernel has {spec.lengthscales.shape[0]} lengthscales"
        )
    Z = X if Z is None else np.atleast_2d(np.asarray(Z, dtype=float))
    return _kernel_from_r2(spec, _scaled_sq_dists(spec, X, Z))


def factorize(K: np.ndarray, noise_variance: float, noise_diag: np.ndarray | None = None):
    """Cholesky of K + (noise + jitter) I with an escalating jitter ladder.

    Jitter starts at zero and escalates through JITTER_LADDER scaled by
    the mean diagonal of K (a proxy for the signal variance).  Returns
    (lower factor, jitter actually used).
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    idx = np.arange(n)
    scale = float(np.mean(np.diag(K)))
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    base = K.copy()
    base[idx, idx] += noise_variance
    if noise_diag is not None:
        base[idx, idx] += np.asarray(noise_diag, dtype=float)
    previous = 0.0
    for jitter in (0.0,) + tuple(j * scale for j in JITTER_LADDER):
        base[idx, idx] += jitter - previous
        previous = jitter
        try:
            return np.linalg.cholesky(base), jitter
        except np.linalg.LinAlgError:
            continue
    base[idx, idx] -= previous
    eigs = np.linalg.eigvalsh(base)
    raise NumericalError(
        "covariance not positive definite at maximum jitter",
        diagnostics={
            "min_eigenvalue": float(eigs.min()),
            "max_eigenvalue": float(eigs.max()),
            "max_jitter": JITTER_LADDER[-1] * scale,
        },
    )


def _effective_noise_diag(theta: GpHyperparams, n: int, noise_diag: np.ndarray | None):
    if noise_diag is None:
        return None
    nd = np.asarray(noise_diag, dtype=float)
    if nd.shape != (n,):
        raise SpaceError(f"noise_diag must have shape ({n},), got {nd.shape}")
    return nd


def _mll_parts(theta: GpHyperparams, X: np.ndarray, y: np.ndarray, noise_diag=None):
    """Shared plumbing: factorization, residual, alpha, and the mll value."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 1:
        raise UsageError("marginal likelihood requires at least one observation")
    nd = _effective_noise_diag(theta, n, noise_diag)
    K = kernel_matrix(theta.kernel, X)
    sigma2 = 0.0 if nd is not None else theta.noise_variance
    L, jitter = factorize(K, sigma2, nd)
    r = y - theta.mean.constant
    alpha = cho_solve((L, True), r)
    value = (
        -0.5 * float(r @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * _LOG_2PI
    )
    return K, L, alpha, r, value, jitter


def mll(theta: GpHyperparams, X: np.ndarray, y: np.ndarray, noise_diag=None) -> float:
    """Log marginal likelihood of the targets under theta."""
    return _mll_parts(theta, X, y, noise_diag)[4]


def mll_grad(theta: GpHyperparams, X: np.ndarray, y: np.ndarray, noise_diag=None) -> np.ndarray:
    """Analytic gradient of :func:`mll` over the fitting parameterization.

    Layout: d(log lengthscale_j) for j = 1..d, then d(log signal variance),
    then d(log noise variance) unless a fixed ``noise_diag`` is in force,
    then d(mean constant).  Uses the standard trace identity
    dL/dtheta = 1/2 tr((alpha alpha' - K~^{-1}) dK~/dtheta).
    """
    return _mll_and_grad(theta, X, y, noise_diag)[1]


def _mll_and_grad(theta: GpHyperparams, X, y, noise_diag=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 1:
        raise UsageError("marginal likelihood requires at least one observation")
    nd = _effective_noise_diag(theta, n, noise_diag)
    spec = theta.kernel
    s2 = spec.signal_variance

    # One pass over the pairwise differences feeds K and every dK/dtheta.
    scaled = (X[:, None, :] - X[None, :, :]) / spec.lengthscales
    sq = scaled * scaled
    r2 = np.einsum("ijk->ij", sq)
    K = _kernel_from_r2(spec, r2)
    sigma2 = 0.0 if nd is not None else theta.noise_variance
    L, _ = factorize(K, sigma2, nd)
    r = y - theta.mean.constant
    alpha = cho_solve((L, True), r)
    value = (
        -0.5 * float(r @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * _LOG_2PI
    )

    Kinv = cho_solve((L, True), np.eye(n))
    P = np.outer(alpha, alpha) - Kinv
    grad = np.empty(d + (2 if noise_diag is not None else 3))
    if spec.family == RBF:
        radial = K  # dK/dlog l_j = K * D_j with D_j the scaled squared diffs
    else:
        rr = np.sqrt(r2)
        radial = (5.0 / 3.0) * s2 * (1.0 + _SQRT5 * rr) * np.exp(-_SQRT5 * rr)
    PR = P * radial
    for j in range(d):
        grad[j] = 0.5 * float(np.sum(PR * sq[:, :, j]))
    grad[d] = 0.5 * float(np.sum(P * K))  # d log s2
    if noise_diag is None:
        grad[d + 1] = 0.5 * theta.noise_variance * float(np.trace(P))
        grad[d + 2] = float(np.sum(alpha))
    else:
        grad[d + 1] = float(np.sum(alpha))
    return value, grad


def make_model(X, y, theta: GpHyperparams, noise_diag=None) -> GpModel:
    """Assemble a GpModel for given hyperparameters (no fitting).

    Accepts an empty history (N = 0), which yields the prior.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise SpaceError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if X.shape[0] == 0:
        return GpModel(X=X, y=y, theta=theta, chol=None, alpha=None, jitter_used=0.0)
    nd = _effective_noise_diag(theta, X.shape[0], noise_diag)
    K = kernel_matrix(theta.kernel, X)
    sigma2 = 0.0 if nd is not None else theta.noise_variance
    L, jitter = factorize(K, sigma2, nd)
    alpha = cho_solve((L, True), y - theta.mean.constant)
    return GpModel(
        X=X, y=y, theta=theta, chol=L, alpha=alpha, jitter_used=jitter, noise_diag=nd
    )


def _make_fit_objective(X: np.ndarray, y: np.ndarray, family: str, noise_diag):
    """Negative mll and gradient over packed log-parameters.

    Same math as :func:`_mll_and_grad` (including the jitter ladder),
    specialized for a fixed dataset and stripped down to raw LAPACK calls:
    a multi-start fit makes thousands of evaluations of this function, so
    per-call overhead dominates the wall time at desk-scale N.
    """
    n, d = X.shape
    diff2 = np.ascontiguousarray(((X[:, None, :] - X[None, :, :]) ** 2).transpose(2, 0, 1))
    eye = np.eye(n)
    idx = np.arange(n)
    nd = None if noise_diag is None else np.asarray(noise_diag, dtype=float)
    with_noise = nd is None
    zeros = np.zeros(d + (3 if with_noise else 2))

    def objective(z):
        ls2 = np.exp(-2.0 * z[:d])
        s2 = math.exp(z[d])
        sigma2 = math.exp(z[d + 1]) if with_noise else 0.0
        m = z[-1]
        r2 = np.tensordot(ls2, diff2, axes=1)
        if family == RBF:
            K = s2 * np.exp(-0.5 * r2)
            radial = K
        else:
            rr = np.sqrt(r2)
            decay = np.exp(-_SQRT5 * rr)
            K = s2 * (1.0 + _SQRT5 * rr + (5.0 / 3.0) * r2) * decay
            radial = (5.0 / 3.0) * s2 * (1.0 + _SQRT5 * rr) * decay
        A = K.copy()
        A[idx, idx] += sigma2 if nd is None else sigma2 + nd
        L = None
        previous = 0.0
        for jitter in (0.0,) + tuple(j * s2 for j in JITTER_LADDER):
            if jitter != previous:
                A[idx, idx] += jitter - previous
                previous = jitter
            c, info = dpotrf(A, lower=1)
            if info == 0:
                L = c
                break
        if L is None:
            return 1e25, zeros
        r = y - m
        alpha = dpotrs(L, r, lower=1)[0]
        value = (
            -0.5 * float(r @ alpha)
            - float(np.sum(np.log(np.einsum("ii->i", L))))
            - 0.5 * n * _LOG_2PI
        )
        if not np.isfinite(value):
            return 1e25, zeros
        P = np.outer(alpha, alpha) - dpotrs(L, eye, lower=1)[0]
        grad = np.empty_like(zeros)
        PR = P * radial
        for j in range(d):
            grad[j] = 0.5 * float(np.vdot(PR, diff2[j])) * ls2[j]
        grad[d] = 0.5 * float(np.vdot(P, K))
        if with_noise:
            grad[d + 1] = 0.5 * sigma2 * float(np.trace(P))
        grad[-1] = float(np.sum(alpha))
        return -value, -grad

    return objective


def _pack(theta: GpHyperparams, with_noise: bool) -> np.ndarray:
    z = list(np.log(theta.kernel.lengthscales))
    z.append(math.log(theta.kernel.signal_variance))
    if with_noise:
        z.append(math.log(theta.noise_variance))
    z.append(theta.mean.constant)
    return np.asarray(z)


def _unpack(z: np.ndarray, d: int, family: str, with_noise: bool) -> GpHyperparams:
    ls = np.exp(z[:d])
    s2 = math.exp(z[d])
    if with_noise:
        noise = math.exp(z[d + 1])
    else:
        noise = 0.0
    return GpHyperparams(KernelSpec(family, ls, s2), MeanSpec(float(z[-1])), noise)


def _fit_bounds(d: int, with_noise: bool) -> list[tuple[float, float]]:
    lo_l, hi_l = (math.log(b) for b in LENGTHSCALE_BOUNDS)
    bounds = [(lo_l, hi_l)] * d
    bounds.append(tuple(math.log(b) for b in SIGNAL_VARIANCE_BOUNDS))
    if with_noise:
        bounds.append(tuple(math.log(b) for b in NOISE_VARIANCE_BOUNDS))
    bounds.append(MEAN_BOUNDS)
    return bounds


def _start_points(bounds, restarts: int, seed: int, default: np.ndarray) -> list[np.ndarray]:
    """Default hyperparameters first, then Sobol points over the bound box."""
    starts = [default]
    if restarts <= 1:
        return starts
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    k = len(bounds)
    if k <= MAX_DIMENSION:
        engine = SobolEngine(k).fast_forward(seed % 4096)
        u = engine.next(restarts - 1)
    else:
        u = np.random.default_rng(seed).random((restarts - 1, k))
    for row in u:
        starts.append(lo + row * (hi - lo))
    return starts


def fit(
    X,
    y,
    restarts: int = 10,
    seed: int = 0,
    family: str = MATERN52,
    noise_diag=None,
) -> GpModel:
    """Fit hyperparameters by multi-start maximum marginal likelihood.

    Each start runs bounded L-BFGS-B (max 200 iterations, projected
    gradient tolerance 1e-6) on the negative mll over log-parameters; the
    best final value wins, ties broken by the lowest restart index.  The
    default hyperparameters are always included as start 0, so the fitted
    mll is never worse than theirs.

    When ``noise_diag`` is given (per-observation noise variances), the
    noise is fixed rather than fitted.

    Parameters
    ----------
    X : (N, d) array of unit-cube inputs, N >= 1
    y : (N,) array of standardized targets
    restarts : number of optimizer starts (>= 1)
    seed : offsets the Sobol stream the non-default starts are drawn from
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 1:
        raise UsageError("fit requires at least one observation")
    if restarts < 1:
        raise UsageError("fit requires at least one restart")
    with_noise = noise_diag is None
    bounds = _fit_bounds(d, with_noise)
    default = np.clip(
        _pack(default_hyperparams(d, family), with_noise),
        [b[0] for b in bounds],
        [b[1] for b in bounds],
    )

    objective = _make_fit_objective(X, y, family, noise_diag)

    best_val = -np.inf
    best_z = None
    failures = []
    for idx, z0 in enumerate(_start_points(bounds, restarts, seed, default)):
        try:
            res = minimize(
                objective,
                z0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": 200, "gtol": 1e-6},
            )
            candidates = (res.x, z0)
        except (np.linalg.LinAlgError, ValueError) as exc:
            failures.append(f"restart {idx}: {exc}")
            candidates = (z0,)
        # Keeping the start point as a candidate guarantees the fitted mll
        # is at least the mll at every start used.
        for z in candidates:
            val = -objective(z)[0]
            if val > -1e24 and val > best_val:
                best_val = val
                best_z = np.array(z)
    if best_z is None:
        raise NumericalError(
            "every fit restart failed numerically", diagnostics={"failures": failures}
        )
    theta = _unpack(best_z, d, family, with_noise)
    return make_model(X, y, theta, noise_diag)


def posterior(model: GpModel, Xq) -> PosteriorSummary:
    """Predictive mean and variance of the latent function at query points.

    mu(x)     = m + k*' alpha
    sigma2(x) = k(x, x) - || L^{-1} k* ||^2   (clamped at zero)

    An empty model returns the prior.  Computed variances below -1e-8 are
    a numerics bug, not rounding, and emit a NumericsWarning.
    """
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    spec = model.theta.kernel
    if Xq.shape[1] != spec.lengthscales.shape[0]:
        raise SpaceError(
            f"query points have {Xq.shape[1]} columns, model expects "
            f"{spec.lengthscales.shape[0]}"
        )
    m = model.theta.mean.constant
    q = Xq.shape[0]
    if model.n == 0:
        return PosteriorSummary(
            means=np.full(q, m), variances=np.full(q, spec.signal_variance)
        )
    kstar = kernel_matrix(spec, model.X, Xq)
    means = m + kstar.T @ model.alpha
    v = solve_triangular(model.chol, kstar, lower=True)
    variances = spec.signal_variance - np.einsum("ij,ij->j", v, v)
    worst = float(variances.min())
    if worst < -1e-8:
        warnings.warn(
            f"posterior variance {worst} below the rounding floor", NumericsWarning
        )
    return PosteriorSummary(means=means, variances=np.maximum(variances, 0.0))


def _fast_posterior(model: GpModel):
    """Closure precomputing L^{-1} so repeated small queries stay cheap.

    Agrees with :func:`posterior` to rounding; used by the acquisition
    optimizer, which issues thousands of 1-3 point queries.
    """
    spec = model.theta.kernel
    m = model.theta.mean.constant
    if model.n == 0:
        def prior(Xq):
            q = Xq.shape[0]
            return PosteriorSummary(np.full(q, m), np.full(q, spec.signal_variance))

        return prior
    linv = solve_triangular(model.chol, np.eye(model.n), lower=True)
    X, alpha, s2 = model.X, model.alpha, spec.signal_variance

    def closure(Xq):
        kstar = kernel_matrix(spec, X, Xq)
        means = m + kstar.T @ alpha
        v = linv @ kstar
        variances = np.maximum(s2 - np.einsum("ij,ij->j", v, v), 0.0)
        return PosteriorSummary(means, variances)

    return closure


def rsample(summary: PosteriorSummary, n: int, seed: int) -> np.ndarray:
    """Draw n independent samples per query point: mu + sigma * z.

    Returns an (n, Q) array; the same seed reproduces the batch bitwise.
    """
    if n < 1:
        raise UsageError(f"rsample requires n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, summary.means.shape[0]))
    return summary.means + np.sqrt(summary.variances) * z
