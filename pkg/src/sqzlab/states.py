"""Phase-space engine for N-mode Gaussian optical states.

Quadratures are ordered ``(x1, p1, ..., xN, pN)`` and normalized so that the
vacuum quadrature standard deviation is 1/2 (variance 1/4).  States and
transforms are immutable after construction and every operation is a pure
function returning a new value, so everything here is safe to share across
threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

#: Vacuum quadrature variance in the hbar = 1/2 convention.
VACUUM_VARIANCE = 0.25

_SYMMETRY_RTOL = 1e-12
_SYMPLECTIC_ATOL = 1e-10


class InvariantViolation(ValueError):
    """A numerical invariant of the phase-space model was broken.

    Raised when an input claims to be a valid Gaussian state or symplectic
    map but fails its defining test (asymmetric covariance, broken
    uncertainty relation, non-symplectic matrix, degenerate homodyne
    measurement).  The CLI maps this to exit code 3.
    """


def symplectic_form(n_modes: int) -> np.ndarray:
    """Standard symplectic form for the (x1, p1, ..., xN, pN) ordering."""
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), omega)


def rotation_matrix(theta: float) -> np.ndarray:
    """2x2 counterclockwise rotation of the (x, p) plane."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeeze_matrix(r: float) -> np.ndarray:
    """2x2 squeeze map (x, p) -> (x e^-r, p e^+r)."""
    return np.array([[np.exp(-r), 0.0], [0.0, np.exp(r)]])


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an N-mode Gaussian state.

    Attributes:
        n_modes: number of optical modes (>= 1).
        mean: length-2N quadrature mean, ordered (x1, p1, ..., xN, pN).
        cov: real symmetric 2N x 2N covariance matrix in the same ordering.
    """

    n_modes: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        # copy so marking the arrays read-only cannot freeze caller data
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        dim = 2 * self.n_modes
        if mean.shape != (dim,):
            raise ValueError(f"mean must have length {dim}, got {mean.shape}")
        if cov.shape != (dim, dim):
            raise ValueError(f"cov must be {dim}x{dim}, got {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("mean and cov must be finite")
        if not np.allclose(cov, cov.T, rtol=_SYMMETRY_RTOL, atol=_SYMMETRY_RTOL):
            raise InvariantViolation("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)  # suppress round-off drift
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def mode_mean(self, mode: int) -> np.ndarray:
        """(x, p) mean of one mode."""
        i = 2 * self._check_mode(mode)
        return self.mean[i:i + 2]

    def mode_cov(self, mode: int) -> np.ndarray:
        """2x2 covariance block of one mode."""
        i = 2 * self._check_mode(mode)
        return self.cov[i:i + 2, i:i + 2]

    def _check_mode(self, mode: int) -> int:
        if not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode} out of range for {self.n_modes} modes")
        return mode

    def to_dict(self) -> dict:
        """JSON-ready dict with the cov matrix flattened row-major."""
        return {
            "n_modes": self.n_modes,
            "mean": self.mean.tolist(),
            "cov": self.cov.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianState":
        n = int(data["n_modes"])
        cov = np.array(data["cov"], dtype=float).reshape(2 * n, 2 * n)
        return cls(n, np.array(data["mean"], dtype=float), cov)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GaussianState":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SymplecticTransform:
    """Linear phase-space map: mean -> S mean + d, cov -> S cov S^T.

    The matrix must satisfy the symplectic condition S Omega S^T = Omega
    elementwise to 1e-10; violating inputs raise ``InvariantViolation``.
    """

    matrix: np.ndarray
    displacement: np.ndarray = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise ValueError("matrix must be square with even dimension")
        disp = self.displacement
        if disp is None:
            disp = np.zeros(matrix.shape[0])
        disp = np.array(disp, dtype=float).reshape(-1)
        if disp.shape != (matrix.shape[0],):
            raise ValueError("displacement length must match matrix dimension")
        omega = symplectic_form(matrix.shape[0] // 2)
        if not np.allclose(matrix @ omega @ matrix.T, omega, atol=_SYMPLECTIC_ATOL, rtol=0):
            raise InvariantViolation("matrix is not symplectic")
        matrix.setflags(write=False)
        disp.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "displacement", disp)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2


@dataclass(frozen=True)
class HomodyneOutcome:
    """One homodyne reading: quadrature value at a given angle on a mode.

    The angle is reduced to [0, pi); angle 0 reads x, pi/2 reads p.
    """

    value: float
    angle: float
    mode: int

    def __post_init__(self):
        object.__setattr__(self, "angle", reduce_angle(self.angle))


def reduce_angle(angle: float) -> float:
    """Reduce a quadrature angle to [0, pi)."""
    reduced = float(angle) % np.pi
    if reduced >= np.pi:  # guard against rounding at the boundary
        reduced -= np.pi
    return reduced


def as_generator(rng_seed) -> np.random.Generator:
    """Coerce a seed to a Generator; objects with standard_normal pass through."""
    if hasattr(rng_seed, "standard_normal"):
        return rng_seed
    return np.random.default_rng(rng_seed)


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------

def make_vacuum(n_modes: int) -> GaussianState:
    """N-mode vacuum: zero mean, covariance (1/4) I."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    dim = 2 * n_modes
    return GaussianState(n_modes, np.zeros(dim), VACUUM_VARIANCE * np.eye(dim))


def make_coherent(mean_x: float, mean_p: float) -> GaussianState:
    """Single-mode coherent state: displaced vacuum."""
    return GaussianState(1, np.array([mean_x, mean_p]), VACUUM_VARIANCE * np.eye(2))


def make_squeezed_vacuum(r: float, angle: float = 0.0) -> GaussianState:
    """Single-mode squeezed vacuum.

    Args:
        r: squeezing parameter; the quadrature at ``angle`` has variance
            e^{-2r}/4 and its conjugate e^{+2r}/4.
        angle: orientation of the squeezed quadrature.
    """
    cov = VACUUM_VARIANCE * np.diag([np.exp(-2 * r), np.exp(2 * r)])
    rot = rotation_matrix(angle)
    return GaussianState(1, np.zeros(2), rot @ cov @ rot.T)


def tensor(*states: GaussianState) -> GaussianState:
    """Tensor product of Gaussian states (block-diagonal covariance)."""
    if not states:
        raise ValueError("tensor() needs at least one state")
    n = sum(s.n_modes for s in states)
    mean = np.concatenate([s.mean for s in states])
    cov = np.zeros((2 * n, 2 * n))
    offset = 0
    for s in states:
        d = 2 * s.n_modes
        cov[offset:offset + d, offset:offset + d] = s.cov
        offset += d
    return GaussianState(n, mean, cov)


# ---------------------------------------------------------------------------
# transform constructors
# ---------------------------------------------------------------------------

def identity_transform(n_modes: int) -> SymplecticTransform:
    return SymplecticTransform(np.eye(2 * n_modes), np.zeros(2 * n_modes))


def _embed(block: np.ndarray, mode: int, n_modes: int) -> np.ndarray:
    """Embed a 2x2 single-mode map into the N-mode identity."""
    mat = np.eye(2 * n_modes)
    i = 2 * mode
    mat[i:i + 2, i:i + 2] = block
    return mat


def beam_splitter(T: float, mode_a: int = 0, mode_b: int = 1,
                  n_modes: int | None = None) -> SymplecticTransform:
    """Beam splitter of transmittance T coupling two modes.

    Sign convention: the transmitted output on ``mode_a`` is
    sqrt(T) a + sqrt(1-T) b while the reflected output on ``mode_b`` is
    sqrt(T) b - sqrt(1-T) a, for both quadratures.

    Args:
        T: power transmittance, in [0, 1].
        mode_a: mode carrying the transmitted output.
        mode_b: mode carrying the reflected output.
        n_modes: total modes of the transform (default: just enough).
    """
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"transmittance must be in [0, 1], got {T}")
    if mode_a == mode_b:
        raise ValueError("beam splitter needs two distinct modes")
    if n_modes is None:
        n_modes = max(mode_a, mode_b) + 1
    t, rfl = np.sqrt(T), np.sqrt(1.0 - T)
    mat = np.eye(2 * n_modes)
    ia, ib = 2 * mode_a, 2 * mode_b
    for k in range(2):
        mat[ia + k, ia + k] = t
        mat[ia + k, ib + k] = rfl
        mat[ib + k, ia + k] = -rfl
        mat[ib + k, ib + k] = t
    return SymplecticTransform(mat, np.zeros(2 * n_modes))


def phase_rotation(theta: float, mode: int = 0, n_modes: int = 1) -> SymplecticTransform:
    """Counterclockwise rotation of one mode's (x, p) plane by theta."""
    return SymplecticTransform(_embed(rotation_matrix(theta), mode, n_modes),
                               np.zeros(2 * n_modes))


def squeeze(r: float, mode: int = 0, n_modes: int = 1) -> SymplecticTransform:
    """Squeezer mapping (x, p) -> (x e^-r, p e^+r) on one mode."""
    return SymplecticTransform(_embed(squeeze_matrix(r), mode, n_modes),
                               np.zeros(2 * n_modes))


def displacement(dx: float, dp: float, mode: int = 0, n_modes: int = 1) -> SymplecticTransform:
    """Pure phase-space displacement of one mode by (dx, dp)."""
    disp = np.zeros(2 * n_modes)
    disp[2 * mode] = dx
    disp[2 * mode + 1] = dp
    return SymplecticTransform(np.eye(2 * n_modes), disp)


# ---------------------------------------------------------------------------
# evolution, loss and measurement
# ---------------------------------------------------------------------------

def apply(transform: SymplecticTransform, state: GaussianState) -> GaussianState:
    """Apply a symplectic transform: mean -> S mean + d, cov -> S cov S^T."""
    if transform.n_modes != state.n_modes:
        raise ValueError(
            f"transform acts on {transform.n_modes} modes, state has {state.n_modes}")
    s = transform.matrix
    mean = s @ state.mean + transform.displacement
    cov = s @ state.cov @ s.T
    return GaussianState(state.n_modes, mean, 0.5 * (cov + cov.T))


def apply_loss(state: GaussianState, mode: int, eta: float) -> GaussianState:
    """Pure-loss channel of transmission eta on one mode (vacuum admixture).

    The mode's mean scales by sqrt(eta), its covariance block becomes
    eta C + (1 - eta)/4 I, and cross-covariances with the other modes scale
    by sqrt(eta).
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    state._check_mode(mode)
    i = 2 * mode
    root = np.sqrt(eta)
    mean = state.mean.copy()
    mean[i:i + 2] *= root
    cov = state.cov.copy()
    cov[i:i + 2, :] *= root
    cov[:, i:i + 2] *= root
    cov[i:i + 2, i:i + 2] = (eta * state.cov[i:i + 2, i:i + 2]
                             + (1.0 - eta) * VACUUM_VARIANCE * np.eye(2))
    return GaussianState(state.n_modes, mean, cov)


def marginal_moments(state: GaussianState, mode: int, angle: float) -> tuple[float, float]:
    """Mean and variance of the quadrature at ``angle`` on one mode."""
    u = np.array([np.cos(angle), np.sin(angle)])
    m = state.mode_mean(mode)
    c = state.mode_cov(mode)
    return float(u @ m), float(u @ c @ u)


def marginal_variance(state: GaussianState, mode: int, angle: float) -> float:
    """Variance of the quadrature at ``angle`` on one mode."""
    return marginal_moments(state, mode, angle)[1]


def partial_trace(state: GaussianState, keep: Sequence[int]) -> GaussianState:
    """Reduced state of the listed modes, in the order given."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must list at least one mode")
    for m in keep:
        state._check_mode(m)
    if len(set(keep)) != len(keep):
        raise ValueError("keep contains duplicate modes")
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in keep])
    return GaussianState(len(keep), state.mean[idx], state.cov[np.ix_(idx, idx)])


def homodyne_condition(state: GaussianState, mode: int, angle: float,
                       outcome: float) -> GaussianState:
    """State of the remaining modes conditioned on a homodyne reading.

    Measures the quadrature at ``angle`` on ``mode`` with result ``outcome``
    and returns the conditional Gaussian state of the other modes.  The
    conditional covariance is the Schur complement against the rank-1
    projector onto the measured direction (pseudo-inverse on the measured
    subspace) and does not depend on the outcome; the conditional mean is
    linear in (outcome - prior mean).

    Raises:
        InvariantViolation: if the measured quadrature variance is not
            positive (the conditioning is then degenerate).
        ValueError: if there is no remaining mode to return.
    """
    state._check_mode(mode)
    if state.n_modes < 2:
        raise ValueError("conditioning needs at least one unmeasured mode")
    u = np.array([np.cos(angle), np.sin(angle)])
    i = 2 * mode
    keep = [m for m in range(state.n_modes) if m != mode]
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in keep])

    var_meas = float(u @ state.cov[i:i + 2, i:i + 2] @ u)
    if var_meas <= 1e-15:
        raise InvariantViolation(
            "measured quadrature variance must be positive for conditioning")
    mean_meas = float(u @ state.mean[i:i + 2])
    cross = state.cov[np.ix_(idx, [i, i + 1])] @ u  # Cov(kept, measured quad)

    mean = state.mean[idx] + cross * ((outcome - mean_meas) / var_meas)
    cov = state.cov[np.ix_(idx, idx)] - np.outer(cross, cross) / var_meas
    return GaussianState(len(keep), mean, 0.5 * (cov + cov.T))


def homodyne_sample(state: GaussianState, mode: int, angle: float,
                    rng_seed) -> tuple[HomodyneOutcome, GaussianState]:
    """Draw one homodyne outcome and return it with the conditioned remainder.

    The outcome is drawn from the exact Gaussian marginal of the quadrature
    at ``angle`` (reduced to [0, pi) first).  Deterministic for a fixed
    ``rng_seed``; a ``numpy.random.Generator`` is also accepted.
    """
    rng = as_generator(rng_seed)
    theta = reduce_angle(angle)
    mean, var = marginal_moments(state, mode, theta)
    value = mean + np.sqrt(var) * rng.standard_normal()
    outcome = HomodyneOutcome(value=float(value), angle=theta, mode=mode)
    return outcome, homodyne_condition(state, mode, theta, outcome.value)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix (vacuum gives 1/4)."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    eigs = np.linalg.eigvals(1j * symplectic_form(n) @ cov)
    return np.sort(np.abs(eigs))[::2]  # each value appears twice


def check_physical(state: GaussianState, tol: float = 1e-9) -> None:
    """Raise ``InvariantViolation`` if the uncertainty relation is violated.

    Tests that every symplectic eigenvalue of the covariance matrix is at
    least 1/4 - tol, which is the positive-semidefiniteness of
    cov + (i/4) Omega in the hbar = 1/2 convention.
    """
    nu_min = symplectic_eigenvalues(state.cov).min()
    if nu_min < VACUUM_VARIANCE - tol:
        raise InvariantViolation(
            f"uncertainty relation violated: min symplectic eigenvalue {nu_min:.3e}")


def purity_determinant(state: GaussianState) -> float:
    """det(4 cov); equals 1 for pure states, > 1 for mixed ones."""
    return float(np.linalg.det(4.0 * state.cov))
