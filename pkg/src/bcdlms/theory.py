"""Closed-form mean and mean-square performance predictions.

Builds the network-level operators of the weight-error recursion

    werr_i = B_i werr_{i-1} - A2^T M g_i + A2^T M P_i omega

and evaluates, for the bias-compensated diffusion family with known
regression-noise variances: the mean transition matrix B and its stability
bounds, the noise moment matrices G and Pi, the weighted-variance
transition F with its load vector gamma, and the steady-state and
transient MSD/EMSE these induce.  The default F is the mean-product form
B^T (x)_b B^*, whose spectral radius equals rho(B)**2 exactly; the exact
expectation is available through :func:`empirical_variance_transition` and
the explicit small-step expansion through
:func:`small_step_variance_transition`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import blockmat
from .blockmat import BlockSpec, block_kron, bvec, spectral_radius
from .datamodel import DataStream, SystemProfile
from .network import extend


class InstabilityError(RuntimeError):
    """The configured step sizes put the network outside the stable region."""


def to_db(x):
    """10 log10 of mean-square quantities, the convention of all reports."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TheoryOperators:
    """All matrices of the error recursion for one network configuration."""

    block_spec: BlockSpec
    step: np.ndarray                    # diag(mu_k I_M)
    gradient_cov: np.ndarray            # R: fused regressor covariances
    mean_transition: np.ndarray         # B
    output_noise_moment: np.ndarray     # G
    regression_noise_moment: np.ndarray  # Pi
    variance_transition: np.ndarray     # F
    load_vector: np.ndarray             # gamma
    a1_ext: np.ndarray
    a2_ext: np.ndarray
    c_ext: np.ndarray

    def with_variance_transition(self, f: np.ndarray) -> "TheoryOperators":
        """Copy with an alternative F (exact-empirical or small-step form)."""
        return replace(self, variance_transition=np.asarray(f, dtype=complex))


@dataclass(frozen=True)
class PerformancePrediction:
    """Steady-state values and, when produced by ``transient``, the curves.

    Curves are indexed so row 0 is the zero-initialization energy (before
    any update) and row i the prediction after i network iterations.
    """

    msd: np.ndarray
    emse: np.ndarray
    network_msd: float
    network_emse: float
    msd_curve: np.ndarray | None = None
    emse_curve: np.ndarray | None = None
    network_msd_curve: np.ndarray | None = None
    network_emse_curve: np.ndarray | None = None


def _matrix(m) -> np.ndarray:
    return np.asarray(getattr(m, "entries", m), dtype=float)


def centralized_bias(r_u_sum, r_du, sigma2_n_sum: float):
    """Minimum-MSE solution and its bias under noisy regressors.

    Given the network-summed moments, returns (w_b, b) where
    w_b = (R_u + sigma2_n I)^{-1} r_du is the biased stationary point and
    b = sigma2_n (I + sigma2_n R_u^{-1})^{-1} R_u^{-1} w_o its deviation
    from the true w_o = R_u^{-1} r_du; the two satisfy b = w_o - w_b.
    """
    r_u = np.asarray(r_u_sum, dtype=complex)
    r_du = np.asarray(r_du, dtype=complex).reshape(-1)
    m = r_du.size
    w_o = blockmat.solve(r_u, r_du)
    w_b = blockmat.solve(r_u + sigma2_n_sum * np.eye(m), r_du)
    r_inv_w = blockmat.solve(r_u, w_o)
    bias = sigma2_n_sum * blockmat.solve(
        np.eye(m) + sigma2_n_sum * np.linalg.inv(r_u), r_inv_w
    )
    return w_b, bias


@dataclass(frozen=True)
class StepSizeBounds:
    """Per-node open intervals (0, upper) guaranteeing mean stability."""

    compensated: np.ndarray     # bias-compensated algorithm
    uncompensated: np.ndarray   # standard diffusion on noisy regressors


def step_size_bounds(profile: SystemProfile, c) -> StepSizeBounds:
    """Upper step-size limits 2 / rho(fused covariance) for each node.

    The compensated bound uses the fused R_{u,l} alone; the uncompensated
    one fuses R_{u,l} + sigma2_n_l I and is therefore never larger.
    """
    c = _matrix(c)
    n, m = profile.num_nodes, profile.dim
    comp = np.empty(n)
    uncomp = np.empty(n)
    eye = np.eye(m)
    for k in range(n):
        fused = np.einsum("l,lab->ab", c[:, k], profile.regressor_cov)
        noisy = fused + (c[:, k] @ profile.regression_noise_var) * eye
        comp[k] = 2.0 / spectral_radius(fused)
        uncomp[k] = 2.0 / spectral_radius(noisy)
    return StepSizeBounds(comp, uncomp)


def _block_diag(blocks: np.ndarray) -> np.ndarray:
    n, m, _ = blocks.shape
    out = np.zeros((n * m, n * m), dtype=blocks.dtype)
    for k in range(n):
        out[k * m:(k + 1) * m, k * m:(k + 1) * m] = blocks[k]
    return out


def _fused_cov(profile: SystemProfile, c: np.ndarray, include_noise: bool) -> np.ndarray:
    blocks = np.einsum("lk,lab->kab", c, profile.regressor_cov)
    if include_noise:
        eye = np.eye(profile.dim)
        blocks = blocks + np.einsum("lk,l->k", c, profile.regression_noise_var)[:, None, None] * eye
    return _block_diag(blocks)


def network_parameter(profile: SystemProfile) -> np.ndarray:
    """The stacked truth: N copies of w_o, length N*M."""
    return np.tile(profile.w_o, profile.num_nodes)


def build_operators(profile: SystemProfile, a1, a2, c, step_sizes,
                    topology=None) -> TheoryOperators:
    """Assemble M, R, B, G, Pi, F and gamma for one configuration.

    ``a1``, ``a2`` are left-stochastic combination matrices, ``c`` the
    right-stochastic fusion matrix (CombinationMatrix or plain arrays).
    When a topology is supplied the matrices are checked against its
    neighborhoods first.
    """
    a1, a2, c = _matrix(a1), _matrix(a2), _matrix(c)
    n, m = profile.num_nodes, profile.dim
    if topology is not None:
        for name, mat in (("a1", a1), ("a2", a2), ("c", c)):
            if (np.abs(mat[~topology.adjacency]) > 0).any():
                raise ValueError(f"{name} has weight outside the topology's neighborhoods")
    mu = np.asarray(step_sizes, dtype=float)
    mu = np.full(n, float(mu)) if mu.ndim == 0 else mu
    spec = BlockSpec(n, m)
    eye = np.eye(m)

    a1e, a2e, ce = extend(a1, m), extend(a2, m), extend(c, m)
    step = np.kron(np.diag(mu), eye).astype(complex)
    r_fused = _fused_cov(profile, c, include_noise=False).astype(complex)
    b = a2e.T @ (np.eye(n * m) - step @ r_fused) @ a1e.T

    g_blocks = np.array([
        profile.output_noise_var[k] * (profile.regressor_cov[k]
                                       + profile.regression_noise_var[k] * eye)
        for k in range(n)
    ])
    g = ce.T @ _block_diag(g_blocks) @ ce

    energy = float(np.vdot(profile.w_o, profile.w_o).real)
    outer = np.outer(profile.w_o, profile.w_o.conj())
    per_source = np.array([
        profile.regression_noise_var[l] * energy
        * (profile.regressor_cov[l] + profile.regression_noise_var[l] * eye)
        + (profile.beta - 1.0) * profile.regression_noise_var[l] ** 2 * outer
        for l in range(n)
    ])
    weights = np.einsum("lk,lj->kjl", c, c)
    pi_blocks = np.einsum("kjl,lab->kjab", weights, per_source)
    pi = pi_blocks.transpose(0, 2, 1, 3).reshape(n * m, n * m)

    f = block_kron(b.T, b.conj().T, spec)
    gamma = bvec(a2e.T @ step @ g.T @ step @ a2e
                 + a2e.T @ step @ pi.T @ step @ a2e, spec)
    return TheoryOperators(
        block_spec=spec, step=step, gradient_cov=r_fused, mean_transition=b,
        output_noise_moment=g, regression_noise_moment=pi,
        variance_transition=f, load_vector=gamma,
        a1_ext=a1e, a2_ext=a2e, c_ext=ce,
    )


def small_step_variance_transition(ops: TheoryOperators) -> np.ndarray:
    """F without the quadratic step-size term (explicit expansion).

    (A1 (x)_b A1)(I - I (x)_b R M - R^T M (x)_b I)(A2 (x)_b A2); agrees
    with the mean-product default to O(mu^2).
    """
    spec = ops.block_spec
    eye = np.eye(spec.dim, dtype=complex)
    rm = ops.gradient_cov @ ops.step
    middle = (np.eye(spec.vec_dim, dtype=complex)
              - block_kron(eye, rm, spec)
              - block_kron(ops.gradient_cov.T @ ops.step, eye, spec))
    return (block_kron(ops.a1_ext, ops.a1_ext, spec) @ middle
            @ block_kron(ops.a2_ext, ops.a2_ext, spec))


def empirical_variance_transition(profile: SystemProfile, a1, a2, c, step_sizes,
                                  num_samples: int, seed: int) -> np.ndarray:
    """Sample average of B_i^T (x)_b B_i^* over i.i.d. regressor draws.

    This is the exact weighted-variance transition, estimated by Monte
    Carlo.  The average is computed through the factorization
    B_i^T (x)_b B_i^* = (A1 (x)_b A1)(D_i^T (x)_b D_i^*)(A2 (x)_b A2)
    with D_i = I - M R_i, which holds sample-by-sample because the block
    Kronecker product is multiplicative over conforming factors; only the
    block-diagonal middle factor is random, so the average reduces to
    N^2 small fourth-moment blocks.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    a1, a2, c = _matrix(a1), _matrix(a2), _matrix(c)
    n, m = profile.num_nodes, profile.dim
    spec = BlockSpec(n, m)
    mu = np.asarray(step_sizes, dtype=float)
    mu = np.full(n, float(mu)) if mu.ndim == 0 else mu

    mean_mid = np.zeros((n, n, m * m, m * m), dtype=complex)
    stream = DataStream(profile, seed)
    eye = np.eye(m)
    chunk = 2048
    done = 0
    while done < num_samples:
        take = min(chunk, num_samples - done)
        z = stream.draw_block(take).z
        outer = np.einsum("sla,slb->slab", z.conj(), z)
        fused = np.einsum("lk,slab->skab", c, outer)
        fused -= (c.T @ profile.regression_noise_var)[None, :, None, None] * eye
        d_i = eye - mu[:, None, None] * fused
        # sample-summed (D^T (x) D^*) block for every node pair
        mid = np.einsum("siba,skdc->ikacbd", d_i, d_i.conj())
        mean_mid += mid.reshape(n, n, m * m, m * m)
        done += take
    mean_mid /= num_samples

    middle = np.zeros((spec.vec_dim, spec.vec_dim), dtype=complex)
    mm = m * m
    for i in range(n):
        for k in range(n):
            r0 = (i * n + k) * mm
            middle[r0:r0 + mm, r0:r0 + mm] = mean_mid[i, k]
    return (block_kron(extend(a1, m), extend(a1, m), spec) @ middle
            @ block_kron(extend(a2, m), extend(a2, m), spec))


def standard_diffusion_bias(profile: SystemProfile, a1, a2, c, step_sizes) -> np.ndarray:
    """Limiting mean weight error of uncompensated diffusion LMS.

    Solves (I - B') x = A2^T M P' omega with the noisy-regressor fused
    covariance R' and the noise-power fusion P'.  Raises
    :class:`InstabilityError` when rho(B') >= 1.
    """
    a1, a2, c = _matrix(a1), _matrix(a2), _matrix(c)
    n, m = profile.num_nodes, profile.dim
    mu = np.asarray(step_sizes, dtype=float)
    mu = np.full(n, float(mu)) if mu.ndim == 0 else mu
    a1e, a2e = extend(a1, m), extend(a2, m)
    step = np.kron(np.diag(mu), np.eye(m)).astype(complex)
    r_noisy = _fused_cov(profile, c, include_noise=True).astype(complex)
    b_prime = a2e.T @ (np.eye(n * m) - step @ r_noisy) @ a1e.T
    rho = spectral_radius(b_prime)
    if rho >= 1.0:
        raise InstabilityError(f"uncompensated mean recursion unstable: rho(B') = {rho:.6f}")
    p_fused = np.kron(np.diag(c.T @ profile.regression_noise_var), np.eye(m)).astype(complex)
    rhs = a2e.T @ step @ p_fused @ network_parameter(profile)
    return blockmat.solve(np.eye(n * m, dtype=complex) - b_prime, rhs)


# -- weighting vectors in bvec coordinates ----------------------------

def _msd_indices(spec: BlockSpec, k: int) -> np.ndarray:
    n, m = spec.num_blocks, spec.block_size
    base = k * (n * m * m) + k * (m * m)
    return base + np.arange(m) * m + np.arange(m)


def _emse_entries(spec: BlockSpec, k: int, cov_k: np.ndarray):
    n, m = spec.num_blocks, spec.block_size
    base = k * (n * m * m) + k * (m * m)
    cols, rows = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    idx = base + cols.reshape(-1) * m + rows.reshape(-1)
    return idx, cov_k[rows.reshape(-1), cols.reshape(-1)]


def _check_stable(ops: TheoryOperators):
    rho_b = spectral_radius(ops.mean_transition)
    if rho_b >= 1.0:
        raise InstabilityError(
            f"mean recursion unstable: rho(B) = {rho_b:.6f} (variance transition "
            f"has spectral radius rho(B)^2 = {rho_b ** 2:.6f})"
        )


def steady_state(ops: TheoryOperators, profile: SystemProfile) -> PerformancePrediction:
    """Limiting per-node and network MSD/EMSE.

    Evaluates gamma^T (I - F)^{-1} sigma with sigma the block-vectorized
    per-node weighting (identity blocks for MSD, R_{u,k} for EMSE), via a
    single transposed solve shared across all nodes.
    """
    _check_stable(ops)
    spec = ops.block_spec
    dim = spec.vec_dim
    try:
        y = blockmat.solve((np.eye(dim, dtype=complex) - ops.variance_transition).T,
                           ops.load_vector)
    except blockmat.SingularMatrixError as exc:
        raise InstabilityError(f"I - F singular to tolerance: {exc}") from exc
    n = profile.num_nodes
    msd = np.empty(n)
    emse = np.empty(n)
    for k in range(n):
        msd[k] = y[_msd_indices(spec, k)].sum().real
        idx, vals = _emse_entries(spec, k, profile.regressor_cov[k])
        emse[k] = (y[idx] * vals).sum().real
    return PerformancePrediction(
        msd=msd, emse=emse,
        network_msd=float(msd.mean()), network_emse=float(emse.mean()),
    )


def transient(ops: TheoryOperators, profile: SystemProfile,
              horizon: int) -> PerformancePrediction:
    """MSD/EMSE learning-curve predictions under zero initialization.

    Row i of each curve is gamma^T sum_{j<i} F^j sigma plus the weighted
    energy of the stacked truth under F^i sigma; row 0 is the raw
    initialization energy and the rows converge geometrically to the
    steady-state values.  Both required sequences are propagated as left
    vectors through F^T, so the cost is two matrix-vector products per
    iteration regardless of the network size.
    """
    _check_stable(ops)
    spec = ops.block_spec
    n = profile.num_nodes
    omega = network_parameter(profile)
    q = bvec(np.outer(omega, omega.conj()).conj(), spec)

    f_t = ops.variance_transition.T
    if np.abs(f_t.imag).max() == 0.0 and np.abs(q.imag).max() == 0.0 \
            and np.abs(ops.load_vector.imag).max() == 0.0:
        f_t = np.ascontiguousarray(f_t.real)
        q = q.real.copy()
        gamma = ops.load_vector.real.copy()
    else:
        q = q.copy()
        gamma = ops.load_vector.copy()

    msd_idx = [_msd_indices(spec, k) for k in range(n)]
    emse_iv = [_emse_entries(spec, k, profile.regressor_cov[k]) for k in range(n)]

    msd_curve = np.empty((horizon + 1, n))
    emse_curve = np.empty((horizon + 1, n))
    head = q
    tail = np.zeros_like(gamma)
    for i in range(horizon + 1):
        full = head + tail
        for k in range(n):
            msd_curve[i, k] = full[msd_idx[k]].sum().real
            idx, vals = emse_iv[k]
            emse_curve[i, k] = (full[idx] * vals).sum().real
        if i < horizon:
            tail = tail + gamma
            head = f_t @ head
            gamma = f_t @ gamma
    steady = steady_state(ops, profile)
    return PerformancePrediction(
        msd=steady.msd, emse=steady.emse,
        network_msd=steady.network_msd, network_emse=steady.network_emse,
        msd_curve=msd_curve, emse_curve=emse_curve,
        network_msd_curve=msd_curve.mean(axis=1),
        network_emse_curve=emse_curve.mean(axis=1),
    )
