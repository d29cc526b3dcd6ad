"""Space-time data generation for networks observing noisy regressors.

Each node k observes, at every iteration i,

    z_{k,i} = u_{k,i} + n_{k,i}          (noisy 1 x M regressor)
    d_k(i)  = u_{k,i} w_o + v_k(i)       (scalar output)

with u zero-mean Gaussian of covariance R_{u,k}, n white Gaussian of
variance sigma2_n_k per entry, v scalar Gaussian of variance sigma2_v_k,
all mutually independent across nodes, time, and variable types.

Randomness is split per (trial, node, variable-type) with counter-based
seed derivation, so trials can be generated independently and in parallel
without any stream coupling.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.random import SeedSequence, default_rng

TABLE1_PATH = Path(__file__).with_name("table1.csv")

# Regression-noise level of the complex-field preset, as a multiple of the
# heterogeneous power profile in table1.csv.  The factor keeps the network
# firmly in the noise-dominated regime the online variance estimator
# assumes (sigma2_n * |w_o|^2 >> sigma2_v at every node).
COMPLEX_NOISE_SCALE = 3.5

_VAR_U, _VAR_N, _VAR_V = 0, 1, 2


@dataclass(frozen=True)
class SystemProfile:
    """True parameters plus per-node signal and noise statistics."""

    w_o: np.ndarray
    regressor_cov: np.ndarray        # (N, M, M), Hermitian positive definite
    regression_noise_var: np.ndarray
    output_noise_var: np.ndarray
    field: str = "real"              # "real" or "complex"

    def __post_init__(self):
        w_o = np.asarray(self.w_o, dtype=complex).reshape(-1)
        cov = np.asarray(self.regressor_cov, dtype=complex)
        s2n = np.asarray(self.regression_noise_var, dtype=float).reshape(-1)
        s2v = np.asarray(self.output_noise_var, dtype=float).reshape(-1)
        object.__setattr__(self, "w_o", w_o)
        object.__setattr__(self, "regressor_cov", cov)
        object.__setattr__(self, "regression_noise_var", s2n)
        object.__setattr__(self, "output_noise_var", s2v)
        if self.field not in ("real", "complex"):
            raise ValueError("field must be 'real' or 'complex'")
        n, m = s2n.size, w_o.size
        if cov.shape != (n, m, m):
            raise ValueError(f"regressor_cov must have shape ({n}, {m}, {m})")
        if s2v.shape != (n,):
            raise ValueError("output_noise_var must have one entry per node")
        if (s2n < 0).any() or (s2v < 0).any():
            raise ValueError("noise variances must be nonnegative")
        for k in range(n):
            if not np.allclose(cov[k], cov[k].conj().T, atol=1e-12):
                raise ValueError(f"regressor covariance of node {k + 1} is not Hermitian")
            if np.linalg.eigvalsh(cov[k]).min() <= 0:
                raise ValueError(f"regressor covariance of node {k + 1} is not positive definite")
        if self.field == "real":
            for arr, name in ((w_o, "w_o"), (cov, "regressor_cov")):
                if np.abs(arr.imag).max() > 0:
                    raise ValueError(f"real-field profile has complex {name}")

    @property
    def num_nodes(self) -> int:
        return self.regression_noise_var.size

    @property
    def dim(self) -> int:
        return self.w_o.size

    @property
    def beta(self) -> float:
        """Fourth-moment factor: 2 for real Gaussian data, 1 for circular complex."""
        return 2.0 if self.field == "real" else 1.0

    def assumption2_ratio(self) -> np.ndarray:
        """Per-node sigma2_n * |w_o|^2 / sigma2_v, the noise-dominance margin."""
        energy = float(np.vdot(self.w_o, self.w_o).real)
        with np.errstate(divide="ignore"):
            return self.regression_noise_var * energy / self.output_noise_var


def load_table1(path: Path = TABLE1_PATH) -> dict[str, np.ndarray]:
    """Read the checked-in 20-node signal/noise power profile."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {name: np.array([float(r[name]) for r in rows])
            for name in ("output_noise_var", "regressor_power", "regression_noise_var")}
    return cols


def table1_profile() -> SystemProfile:
    """The 20-node real-field benchmark profile (M = 2, w_o = [1, 1]/sqrt(2)).

    Per-entry regressor power comes from the ``regressor_power`` column,
    so R_{u,k} = power_k * I_2.
    """
    t = load_table1()
    n = t["regressor_power"].size
    m = 2
    cov = t["regressor_power"][:, None, None] * np.eye(m)
    return SystemProfile(
        w_o=np.ones(m) / np.sqrt(m),
        regressor_cov=cov,
        regression_noise_var=t["regression_noise_var"],
        output_noise_var=t["output_noise_var"],
        field="real",
    )


def complex_profile() -> SystemProfile:
    """The 20-node circular-complex profile (M = 5, w_o = (2 + 2j) * ones).

    Regression-noise variances are the heterogeneous table1 profile scaled
    by ``COMPLEX_NOISE_SCALE``; the regressor covariance of every node is
    pinned to the 20x energy ratio Tr(R_{u,k}) = 20 * M * sigma2_n_k.
    """
    t = load_table1()
    m = 5
    s2n = COMPLEX_NOISE_SCALE * t["regression_noise_var"]
    cov = (20.0 * s2n)[:, None, None] * np.eye(m)
    return SystemProfile(
        w_o=(2.0 + 2.0j) * np.ones(m),
        regressor_cov=cov,
        regression_noise_var=s2n,
        output_noise_var=t["output_noise_var"],
        field="complex",
    )


def profile_to_dict(profile: SystemProfile) -> dict:
    def c2s(z):
        return [repr(float(z.real)), repr(float(z.imag))]

    return {
        "field": profile.field,
        "w_o": [c2s(z) for z in profile.w_o],
        "regressor_cov": [[[c2s(z) for z in row] for row in cov] for cov in profile.regressor_cov],
        "regression_noise_var": [repr(float(v)) for v in profile.regression_noise_var],
        "output_noise_var": [repr(float(v)) for v in profile.output_noise_var],
    }


def profile_from_dict(data: dict) -> SystemProfile:
    def s2c(pair):
        return complex(float(pair[0]), float(pair[1]))

    return SystemProfile(
        w_o=np.array([s2c(p) for p in data["w_o"]]),
        regressor_cov=np.array([[[s2c(p) for p in row] for row in cov]
                                for cov in data["regressor_cov"]]),
        regression_noise_var=np.array([float(v) for v in data["regression_noise_var"]]),
        output_noise_var=np.array([float(v) for v in data["output_noise_var"]]),
        field=data["field"],
    )


@dataclass(frozen=True)
class NodeObservation:
    """One node's measurements for one iteration.

    The latent (u, n, v) triple is retained for oracle-style diagnostics
    and tests only; estimation code must consume just ``z`` and ``d``.
    """

    z: np.ndarray
    d: complex
    _latent: tuple = None

    def latent(self):
        """Test-only accessor for the hidden (u, n, v) used to build (z, d)."""
        return self._latent


class ObservationBlock:
    """A contiguous run of iterations for the whole network, as arrays."""

    def __init__(self, z, d, u, n, v, w_o_active):
        self.z = z                    # (count, N, M)
        self.d = d                    # (count, N)
        self.u = u
        self.n = n
        self.v = v                    # (count, N)
        self.w_o_active = w_o_active  # (count, M) true parameter per iteration

    def __len__(self):
        return self.z.shape[0]

    def observation(self, i: int, k: int) -> NodeObservation:
        return NodeObservation(self.z[i, k], complex(self.d[i, k]),
                               _latent=(self.u[i, k], self.n[i, k], complex(self.v[i, k])))


class DataStream:
    """Deterministic observation source for one Monte-Carlo trial.

    The same (profile, seed, trial_key) always reproduces the identical
    sequence, regardless of how draws are batched.  Iterations are drawn
    monotonically; ``change_parameters`` switches the true parameter used
    in d from a future iteration onward (the regressor and noise streams
    are unaffected, so tracking experiments stay on the same sample path).
    """

    def __init__(self, profile: SystemProfile, seed: int, trial_key: tuple = ()):
        self.profile = profile
        self.seed = seed
        self.trial_key = tuple(trial_key)
        self.iteration = 0
        self._schedule = [(0, profile.w_o.copy())]
        n = profile.num_nodes
        self._gen = [
            [default_rng(SeedSequence(seed, spawn_key=(*self.trial_key, k, kind)))
             for kind in (_VAR_U, _VAR_N, _VAR_V)]
            for k in range(n)
        ]
        # coloring factors: u = white @ L^H gives E[u^H u] = L L^H = R_u
        self._chol = np.array([np.linalg.cholesky(profile.regressor_cov[k])
                               for k in range(n)])

    def change_parameters(self, new_w_o, at_iteration: int):
        new_w_o = np.asarray(new_w_o, dtype=complex).reshape(-1)
        if new_w_o.size != self.profile.dim:
            raise ValueError("new parameter vector has the wrong length")
        if at_iteration < self.iteration:
            raise ValueError("cannot change parameters for already-drawn iterations")
        self._schedule = [(i, w) for (i, w) in self._schedule if i < at_iteration]
        self._schedule.append((int(at_iteration), new_w_o))

    def w_o_at(self, iteration: int) -> np.ndarray:
        active = self._schedule[0][1]
        for start, w in self._schedule:
            if iteration >= start:
                active = w
        return active

    def _normals(self, gen, count, m):
        if self.profile.field == "complex":
            # one row of 2M normals per iteration keeps the per-iteration
            # stream layout independent of the batch size
            x = gen.normal(size=(count, 2 * m))
            return (x[:, :m] + 1j * x[:, m:]) / np.sqrt(2.0)
        return gen.normal(size=(count, m)).astype(complex)

    def draw_block(self, count: int) -> ObservationBlock:
        """Draw the next ``count`` iterations for all nodes."""
        profile = self.profile
        n, m = profile.num_nodes, profile.dim
        u = np.empty((count, n, m), dtype=complex)
        nn = np.empty((count, n, m), dtype=complex)
        v = np.empty((count, n), dtype=complex)
        for k in range(n):
            gu, gn, gv = self._gen[k]
            u[:, k, :] = self._normals(gu, count, m) @ self._chol[k].conj().T
            nn[:, k, :] = np.sqrt(profile.regression_noise_var[k]) * self._normals(gn, count, m)
            v[:, k] = np.sqrt(profile.output_noise_var[k]) * self._normals(gv, count, 1)[:, 0]
        start = self.iteration
        w_act = np.empty((count, m), dtype=complex)
        for i in range(count):
            w_act[i] = self.w_o_at(start + i)
        d = np.einsum("ikm,im->ik", u, w_act) + v
        self.iteration = start + count
        return ObservationBlock(u + nn, d, u, nn, v, w_act)

    def draw(self, i: int) -> list[NodeObservation]:
        """Draw iteration ``i`` (must be the next undrawn iteration)."""
        if i != self.iteration:
            raise ValueError(
                f"streams are sequential: next iteration is {self.iteration}, requested {i}"
            )
        block = self.draw_block(1)
        return [block.observation(0, k) for k in range(self.profile.num_nodes)]
