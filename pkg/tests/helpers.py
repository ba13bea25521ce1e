"""Shared oracles and state generators for the test suite.

The oracles here deliberately avoid the code paths they check: conditioning
is verified against a brute-force density slice on a grid, losses against
an explicit beam-splitter-plus-vacuum construction, and protocol outputs
against scalar closed forms derived directly from the beam-splitter
input-output relations.
"""

import numpy as np

from sqzlab.states import (
    GaussianState,
    apply,
    beam_splitter,
    make_squeezed_vacuum,
    make_vacuum,
    partial_trace,
    phase_rotation,
    tensor,
)

VAC = 0.25


def random_single_mode(rng, mean_scale=2.0, r_max=1.0, thermal_max=0.5):
    """Random valid single-mode Gaussian: rotated squeezed state plus
    isotropic thermal noise and a random displacement."""
    state = make_squeezed_vacuum(rng.uniform(0.0, r_max),
                                 angle=rng.uniform(0.0, np.pi))
    cov = state.cov + rng.uniform(0.0, thermal_max) * np.eye(2)
    mean = mean_scale * rng.standard_normal(2)
    return GaussianState(1, mean, cov)


def random_two_mode(rng):
    """Random correlated two-mode Gaussian built from local states, local
    rotations and a beam splitter."""
    a = random_single_mode(rng)
    b = random_single_mode(rng)
    state = tensor(a, b)
    state = apply(phase_rotation(rng.uniform(0, 2 * np.pi), 0, 2), state)
    state = apply(beam_splitter(rng.uniform(0.2, 0.8)), state)
    return state


def loss_via_beam_splitter(state, mode, eta):
    """Loss channel built explicitly: mix with a vacuum ancilla on a beam
    splitter of transmittance eta and trace the ancilla out."""
    n = state.n_modes
    extended = tensor(state, make_vacuum(1))
    extended = apply(beam_splitter(eta, mode_a=mode, mode_b=n, n_modes=n + 1),
                     extended)
    return partial_trace(extended, list(range(n)))


def grid_conditional_moments(state, mode, angle, outcome,
                             n_grid=801, span=6.0):
    """Brute-force conditional moments of a two-mode Gaussian.

    Evaluates the joint density of (x_keep, p_keep, u_meas) on an (x, p)
    grid with the measured quadrature pinned at ``outcome``, then computes
    the conditional mean and covariance by grid sums.  Only marginalization
    (row/column selection) is used, never the conditioning formula.
    """
    assert state.n_modes == 2
    keep = 1 - mode
    u = np.array([np.cos(angle), np.sin(angle)])
    # projection onto (x_keep, p_keep, measured quadrature)
    proj = np.zeros((3, 4))
    proj[0, 2 * keep] = 1.0
    proj[1, 2 * keep + 1] = 1.0
    proj[2, 2 * mode:2 * mode + 2] = u
    mean3 = proj @ state.mean
    cov3 = proj @ state.cov @ proj.T
    inv3 = np.linalg.inv(cov3)

    sx = np.sqrt(cov3[0, 0])
    sp = np.sqrt(cov3[1, 1])
    x = np.linspace(mean3[0] - span * sx, mean3[0] + span * sx, n_grid)
    p = np.linspace(mean3[1] - span * sp, mean3[1] + span * sp, n_grid)
    dx = (x - mean3[0])[:, None]
    dp = (p - mean3[1])[None, :]
    du = outcome - mean3[2]
    quad = (inv3[0, 0] * dx ** 2 + inv3[1, 1] * dp ** 2 + inv3[2, 2] * du ** 2
            + 2.0 * inv3[0, 1] * dx * dp + 2.0 * inv3[0, 2] * dx * du
            + 2.0 * inv3[1, 2] * dp * du)
    density = np.exp(-0.5 * quad)

    mass = density.sum()
    mx = (density * x[:, None]).sum() / mass
    mp = (density * p[None, :]).sum() / mass
    cxx = (density * (x[:, None] - mx) ** 2).sum() / mass
    cpp = (density * (p[None, :] - mp) ** 2).sum() / mass
    cxp = (density * (x[:, None] - mx) * (p[None, :] - mp)).sum() / mass
    return np.array([mx, mp]), np.array([[cxx, cxp], [cxp, cpp]])


def protocol_output_closed_form(T, r_a, v_x=VAC, v_p=VAC, c_xp=0.0,
                                eta_h=1.0, eta_det=1.0, eta_prop=1.0,
                                el_db=-np.inf, sigma_jit=0.0, eta_d=1.0,
                                eps=0.0):
    """Scalar closed form of the lossy squeezer output variances.

    Derived directly from the beam-splitter relations with the calibrated
    feedforward gain (1 + eps) sqrt(eta_d / eta_meas) g_nominal applied to
    the recorded outcome; independent of the matrix pipeline under test.
    """
    eta_m = eta_h * eta_det
    v_el = VAC * 10.0 ** (el_db / 10.0)
    v_ax = VAC * np.exp(-2.0 * r_a)
    v_ap = VAC * np.exp(2.0 * r_a)
    v_ax = eta_prop * v_ax + (1.0 - eta_prop) * VAC
    v_ap = eta_prop * v_ap + (1.0 - eta_prop) * VAC
    mid, gap = 0.5 * (v_ax + v_ap), 0.5 * (v_ap - v_ax)
    shrink = np.exp(-2.0 * sigma_jit ** 2)
    v_ax, v_ap = mid - gap * shrink, mid + gap * shrink

    g = -np.sqrt((1.0 - T) / T)
    out_x = eta_d * (T * v_x + (1.0 - T) * v_ax) + (1.0 - eta_d) * VAC
    meas_noise = (1.0 - eta_m) / eta_m * VAC + v_el / eta_m
    out_p = (eta_d * (v_p / T
                      + eps ** 2 * g ** 2 * (T * v_ap + (1.0 - T) * v_p)
                      + 2.0 * eps * (1.0 - T) / T * v_p)
             + (1.0 - eta_d) * VAC
             + (1.0 + eps) ** 2 * eta_d * g ** 2 * meas_noise)
    out_xp = c_xp  # sqrt(T) * (1/sqrt(T)) leaves the cross term unchanged
    return out_x, out_p, out_xp


def fidelity_closed_form(v_ox, v_op, T):
    """Closed-form fidelity of a zero-mean output against the ideal target of
    a vacuum-variance input."""
    v_ix = T * VAC
    v_ip = VAC / T
    return 1.0 / (2.0 * np.sqrt((v_ox + v_ix) * (v_op + v_ip)))
