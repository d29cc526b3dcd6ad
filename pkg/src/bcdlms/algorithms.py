"""Adaptive estimators: bias-compensated diffusion LMS and relatives.

Everything is built on one general three-step network iteration

    phi_k = sum_l a1[l, k] w_l               (combine I)
    psi_k = phi_k + mu_k * sum_l c[l, k] *
            ( z_l^* (d_l - z_l phi_k) + sigma2_n_l phi_k )   (adapt)
    w_k   = sum_l a2[l, k] psi_l             (combine II)

so adapt-then-combine (a1 = I), combine-then-adapt (a2 = I), the
non-cooperative mode (a1 = a2 = c = I) and the uncompensated standard
diffusion LMS (all sigma2_n treated as zero) are just configurations of
the same code path.  State arrays accept leading batch axes, which lets a
Monte-Carlo harness advance many independent trials in one call.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datamodel import NodeObservation

# Weight-energy floor below which the online variance estimate is held at
# its previous value instead of dividing by a vanishing norm.
EPS_WEIGHT_NORM = 1e-8


@dataclass(frozen=True)
class KnownVariances:
    """Regression-noise variances supplied a priori (one per node)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        object.__setattr__(self, "values", v)
        if (v < 0).any():
            raise ValueError("variances must be nonnegative")


@dataclass(frozen=True)
class AdaptiveVariances:
    """Online estimation of the regression-noise variances.

    alpha is the smoothing factor of the squared-error average; nominal
    values sit in [0.95, 0.99] but anything in (0, 1) is accepted.
    """

    alpha: float = 0.99

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


MODES = ("atc", "cta", "general", "non-cooperative", "standard", "centralized")


@dataclass(frozen=True)
class AlgorithmConfig:
    mode: str
    step_sizes: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    c: np.ndarray
    variance_source: KnownVariances | AdaptiveVariances
    name: str = ""

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        mu = np.asarray(self.step_sizes, dtype=float).reshape(-1)
        object.__setattr__(self, "step_sizes", mu)
        for field_name in ("a1", "a2", "c"):
            m = np.asarray(getattr(self, field_name), dtype=float)
            object.__setattr__(self, field_name, m)
        if (mu < 0).any():
            raise ValueError("step sizes must be nonnegative")
        n = mu.size
        for field_name in ("a1", "a2", "c"):
            if getattr(self, field_name).shape != (n, n):
                raise ValueError(f"{field_name} must be {n} x {n}")
        eye = np.eye(n)
        if self.mode == "atc" and not np.array_equal(self.a1, eye):
            raise ValueError("ATC requires a1 = I")
        if self.mode == "cta" and not np.array_equal(self.a2, eye):
            raise ValueError("CTA requires a2 = I")
        if not self.name:
            object.__setattr__(self, "name", self.mode)

    @property
    def num_nodes(self) -> int:
        return self.step_sizes.size

    @property
    def adaptive(self) -> bool:
        return isinstance(self.variance_source, AdaptiveVariances)

    # -- constructors for the named operating modes -------------------

    @staticmethod
    def _entries(m):
        return np.asarray(getattr(m, "entries", m), dtype=float)

    @classmethod
    def atc(cls, a, c, step_sizes, variance_source, name="bc-atc"):
        a = cls._entries(a)
        return cls("atc", _full_steps(step_sizes, a.shape[0]), np.eye(a.shape[0]),
                   a, cls._entries(c), variance_source, name)

    @classmethod
    def cta(cls, a, c, step_sizes, variance_source, name="bc-cta"):
        a = cls._entries(a)
        return cls("cta", _full_steps(step_sizes, a.shape[0]), a,
                   np.eye(a.shape[0]), cls._entries(c), variance_source, name)

    @classmethod
    def general(cls, a1, a2, c, step_sizes, variance_source, name="bc-general"):
        a1 = cls._entries(a1)
        return cls("general", _full_steps(step_sizes, a1.shape[0]), a1,
                   cls._entries(a2), cls._entries(c), variance_source, name)

    @classmethod
    def non_cooperative(cls, num_nodes, step_sizes, variance_source, name="bc-noncoop"):
        eye = np.eye(num_nodes)
        return cls("non-cooperative", _full_steps(step_sizes, num_nodes),
                   eye, eye, eye, variance_source, name)

    @classmethod
    def standard_diffusion(cls, a, c, step_sizes, name="standard-atc"):
        """Uncompensated ATC diffusion LMS: identical code path with the
        compensation term pinned to zero."""
        a = cls._entries(a)
        n = a.shape[0]
        return cls("standard", _full_steps(step_sizes, n), np.eye(n),
                   a, cls._entries(c), KnownVariances(np.zeros(n)), name)


def _full_steps(step_sizes, n):
    mu = np.asarray(step_sizes, dtype=float)
    return np.full(n, float(mu)) if mu.ndim == 0 else mu


@dataclass(frozen=True)
class NetworkState:
    """Per-node estimates and variance-estimator state.

    All arrays allow leading batch axes: w has shape (..., N, M) and the
    scalar per-node quantities (..., N).
    """

    w: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    f: np.ndarray
    sigma2_hat: np.ndarray

    @classmethod
    def zeros(cls, num_nodes: int, dim: int, batch: tuple = ()):
        shape = (*batch, num_nodes, dim)
        return cls(
            w=np.zeros(shape, dtype=complex),
            psi=np.zeros(shape, dtype=complex),
            phi=np.zeros(shape, dtype=complex),
            f=np.zeros((*batch, num_nodes)),
            sigma2_hat=np.zeros((*batch, num_nodes)),
        )


def stochastic_gradient(z, d, w, sigma2_n):
    """Instantaneous bias-compensated update direction for one node.

    Returns z^* (d - z w) + sigma2_n w, i.e. minus the conjugate gradient
    of the compensated cost evaluated on a single sample.  With
    sigma2_n = 0 this is the plain LMS direction.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    err = np.asarray(d) - np.einsum("...m,...m->...", z, w)
    return z.conj() * err[..., None] + np.asarray(sigma2_n)[..., None] * w


def _coerce_observations(obs):
    if isinstance(obs, tuple):
        z, d = obs
        return np.asarray(z, dtype=complex), np.asarray(d, dtype=complex)
    if isinstance(obs, (list,)) and obs and isinstance(obs[0], NodeObservation):
        z = np.stack([o.z for o in obs])
        d = np.array([o.d for o in obs])
        return z.astype(complex), d.astype(complex)
    raise TypeError("observations must be (z, d) arrays or a list of NodeObservation")


def diffusion_step(state: NetworkState, obs, cfg: AlgorithmConfig) -> NetworkState:
    """One synchronous network iteration of the general diffusion form.

    ``obs`` is either a (z, d) pair with z of shape (..., N, M) and d of
    shape (..., N), or a list of N NodeObservation.  All combination steps
    read previous-iteration values only, so results are independent of any
    node ordering.  In adaptive mode the gradients use the neighbors'
    variance estimates from the previous iteration, and the estimator
    state is refreshed afterwards from e_k = d_k - z_k phi_k (phi is the
    pre-adaptation estimate: w_{k,i-1} for ATC, the combined psi for CTA).
    """
    z, d = _coerce_observations(obs)
    n, m = cfg.num_nodes, z.shape[-1]
    if z.shape[-2] != n or state.w.shape[-2:] != (n, m):
        raise ValueError("state/observation dimensions do not match the config")

    mu = cfg.step_sizes
    phi = np.einsum("lk,...lm->...km", cfg.a1, state.w)
    zph = np.einsum("...lm,...km->...lk", z, phi)
    resid = d[..., :, None] - zph
    grad = np.einsum("lk,...lm,...lk->...km", cfg.c, z.conj(), resid)
    if cfg.adaptive:
        comp = np.einsum("lk,...l->...k", cfg.c, state.sigma2_hat)
    else:
        comp = np.broadcast_to(cfg.c.T @ cfg.variance_source.values, phi.shape[:-1])
    psi = phi + mu[:, None] * (grad + comp[..., None] * phi)
    w = np.einsum("lk,...lm->...km", cfg.a2, psi)

    if cfg.adaptive:
        alpha = cfg.variance_source.alpha
        e = d - np.einsum("...km,...km->...k", z, phi)
        f, sigma2_hat = variance_update(
            state.f, e, np.einsum("...km,...km->...k", w.conj(), w).real,
            alpha, sigma2_prev=state.sigma2_hat,
        )
    else:
        f, sigma2_hat = state.f, state.sigma2_hat
    return NetworkState(w=w, psi=psi, phi=phi, f=f, sigma2_hat=sigma2_hat)


def non_cooperative_step(state: NetworkState, obs, cfg: AlgorithmConfig) -> NetworkState:
    """Stand-alone bias-compensated LMS at every node.

    Identical to :func:`diffusion_step`; it only exists so callers can ask
    for the non-cooperative mode by name.  ``cfg`` should carry identity
    combination matrices (use ``AlgorithmConfig.non_cooperative``).
    """
    return diffusion_step(state, obs, cfg)


def centralized_step(w, z, d, mu: float, sigma2_n) -> np.ndarray:
    """One iteration of bias-compensated centralized LMS on pooled data.

    w <- w + mu * sum_k ( z_k^* (d_k - z_k w) + sigma2_n_k w )
    """
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    d = np.asarray(d, dtype=complex)
    s2 = np.asarray(sigma2_n, dtype=float)
    resid = d - np.einsum("...km,...m->...k", z, w)
    update = np.einsum("...km,...k->...m", z.conj(), resid) + s2.sum() * w
    return w + mu * update


def variance_update(f_prev, e, w_norm_sq, alpha: float, sigma2_prev=0.0,
                    eps: float = EPS_WEIGHT_NORM):
    """Smoothed-error update of the regression-noise variance estimate.

    f <- alpha f_prev + (1 - alpha) |e|^2 and sigma2 <- f / |w|^2.  When
    the weight energy is still below ``eps`` (startup transient) the
    previous estimate is carried over instead of dividing by near-zero.
    """
    f = alpha * np.asarray(f_prev) + (1.0 - alpha) * np.abs(np.asarray(e)) ** 2
    wn = np.asarray(w_norm_sq, dtype=float)
    safe = np.maximum(wn, np.finfo(float).tiny)
    sigma2 = np.where(wn >= eps, f / safe, sigma2_prev)
    if sigma2.ndim == 0:
        return float(f), float(sigma2)
    return f, sigma2
