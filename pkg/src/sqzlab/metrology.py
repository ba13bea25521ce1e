"""Figures of merit: noise powers, Gaussian fidelity and analytic Wigner maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import VACUUM_VARIANCE, GaussianState, apply, squeeze
from .tomography import WignerGrid

_PURITY_TOL = 1e-6


def noise_power_db(variance: float) -> float:
    """Quadrature noise power in dB relative to the shot-noise limit."""
    if variance <= 0.0:
        raise ValueError(f"variance must be positive, got {variance}")
    return float(10.0 * np.log10(variance / VACUUM_VARIANCE))


def classical_limit_fidelity(T: float) -> float:
    """Fidelity of the vacuum-ancilla protocol output to the ideal target.

    Closed form sqrt(2T / (1 + T)) for vacuum-variance inputs; this is the
    benchmark the squeezed ancilla must beat.
    """
    if not 0.0 < T <= 1.0:
        raise ValueError(f"transmittance must be in (0, 1], got {T}")
    return float(np.sqrt(2.0 * T / (1.0 + T)))


def ideal_squeezed_target(state: GaussianState, r: float) -> GaussianState:
    """Exact unitary squeeze of a state's moments: (x, p) -> (x e^-r, p e^+r)."""
    if state.n_modes != 1:
        raise ValueError("target construction is defined for single-mode states")
    return apply(squeeze(r), state)


@dataclass(frozen=True)
class FidelityReport:
    """Gaussian fidelity and the factors it is built from.

    ``variance_factor`` is 1 / (2 sqrt((Vox + Vix)(Vop + Vip))) and
    ``mean_factor`` the Gaussian overlap of the means; their product is the
    fidelity.  Moments are echoed in the principal-axis frame of the ideal
    state, and ``axis_residual`` reports how far the actual covariance was
    from diagonal in that frame (relative to the geometric mean variance).
    """

    fidelity: float
    variance_factor: float
    mean_factor: float
    axis_residual: float
    ideal_mean: tuple[float, float]
    actual_mean: tuple[float, float]
    ideal_variances: tuple[float, float]
    actual_variances: tuple[float, float]


def fidelity_gaussian(ideal: GaussianState, actual: GaussianState,
                      axis_tol: float = 1e-6) -> FidelityReport:
    """Overlap of a pure Gaussian target with an achieved Gaussian state.

    Evaluates the diagonal-covariance fidelity formula

        F = exp(-dx^2 / (2 (Vox + Vix)) - dp^2 / (2 (Vop + Vip)))
            / (2 sqrt((Vox + Vix)(Vop + Vip)))

    in the principal-axis frame of the ideal state (hbar = 1/2 units).

    Args:
        ideal: pure single-mode Gaussian target.
        actual: achieved single-mode Gaussian state.
        axis_tol: largest tolerated off-diagonal covariance of ``actual`` in
            the ideal state's frame, relative to the geometric mean of its
            variances.  Pass a looser value for statistically estimated
            moments.

    Raises:
        ValueError: if ``ideal`` is not pure, or the covariances are not
            co-aligned within ``axis_tol`` (the residual is reported).
    """
    if ideal.n_modes != 1 or actual.n_modes != 1:
        raise ValueError("fidelity is defined for single-mode states")
    purity = np.linalg.det(4.0 * ideal.cov)
    if abs(purity - 1.0) > _PURITY_TOL:
        raise ValueError(f"ideal state must be pure, det(4 cov) = {purity:.6g}")

    # rotate both states to the ideal state's principal axes
    eigvals, eigvecs = np.linalg.eigh(ideal.cov)
    if np.linalg.det(eigvecs) < 0.0:
        eigvecs = eigvecs[:, ::-1]
        eigvals = eigvals[::-1]
    rot = eigvecs.T
    ideal_mean = rot @ ideal.mean
    actual_mean = rot @ actual.mean
    actual_cov = rot @ actual.cov @ rot.T

    v_ix, v_ip = float(eigvals[0]), float(eigvals[1])
    v_ox, v_op = float(actual_cov[0, 0]), float(actual_cov[1, 1])
    residual = abs(actual_cov[0, 1]) / np.sqrt(v_ox * v_op)
    if residual > axis_tol:
        raise ValueError(
            f"covariances are not co-aligned: relative off-diagonal residual "
            f"{residual:.3e} exceeds tolerance {axis_tol:.3e}")

    sum_x = v_ox + v_ix
    sum_p = v_op + v_ip
    variance_factor = 1.0 / (2.0 * np.sqrt(sum_x * sum_p))
    dx = actual_mean[0] - ideal_mean[0]
    dp = actual_mean[1] - ideal_mean[1]
    mean_factor = np.exp(-dx ** 2 / (2.0 * sum_x) - dp ** 2 / (2.0 * sum_p))
    return FidelityReport(
        fidelity=float(variance_factor * mean_factor),
        variance_factor=float(variance_factor),
        mean_factor=float(mean_factor),
        axis_residual=float(residual),
        ideal_mean=(float(ideal_mean[0]), float(ideal_mean[1])),
        actual_mean=(float(actual_mean[0]), float(actual_mean[1])),
        ideal_variances=(v_ix, v_ip),
        actual_variances=(v_ox, v_op),
    )


def analytic_wigner(state: GaussianState,
                    x_range: tuple[float, float],
                    p_range: tuple[float, float],
                    n_x: int = 81, n_p: int = 81) -> WignerGrid:
    """Exact Gaussian Wigner function on a rectangular grid.

    W(x, p) = exp(-(v - m)^T C^-1 (v - m) / 2) / (2 pi sqrt(det C)).

    Raises:
        ValueError: for multi-mode states or singular covariance.
    """
    if state.n_modes != 1:
        raise ValueError("analytic Wigner map is defined for single-mode states")
    det = np.linalg.det(state.cov)
    if det <= 0.0:
        raise ValueError("covariance matrix must be non-singular")
    inv = np.linalg.inv(state.cov)
    x = np.linspace(x_range[0], x_range[1], n_x)
    p = np.linspace(p_range[0], p_range[1], n_p)
    dx = x[:, None] - state.mean[0]
    dp = p[None, :] - state.mean[1]
    quad = (inv[0, 0] * dx ** 2 + 2.0 * inv[0, 1] * dx * dp + inv[1, 1] * dp ** 2)
    values = np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))
    return WignerGrid(x_range[0], x_range[1], p_range[0], p_range[1],
                      n_x, n_p, values)
