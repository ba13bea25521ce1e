"""Single-mode Gaussian gate compiler.

Decomposes an arbitrary single-mode Gaussian unitary (2x2 symplectic matrix
plus displacement) into the demonstrated gate set: phase rotation, the
measurement-feedforward squeezer, and displacement.  Each emitted squeezer
carries its physical settings, the beam-splitter transmittance T = e^{-2r}
and the nominal feedforward gain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .metrology import ideal_squeezed_target
from .protocol import (
    ImperfectionModel,
    ProtocolConfig,
    db_to_nepers,
    nominal_gain,
    run_deterministic,
)
from .states import (
    GaussianState,
    InvariantViolation,
    apply,
    displacement,
    phase_rotation,
    rotation_matrix,
    squeeze_matrix,
)

_DET_TOL = 1e-10
_ZERO_GATE_TOL = 1e-12


@dataclass(frozen=True)
class Rotation:
    theta: float


@dataclass(frozen=True)
class Squeezer:
    """One squeezer instance with its physical settings."""

    r: float
    transmittance: float
    gain: float


@dataclass(frozen=True)
class Displacement:
    dx: float
    dp: float


Gate = Union[Rotation, Squeezer, Displacement]


@dataclass(frozen=True)
class GatePlan:
    """Ordered gate list whose recomposition equals the source transform."""

    gates: tuple[Gate, ...]

    def to_symplectic(self) -> tuple[np.ndarray, np.ndarray]:
        """Recompose the plan into (matrix, displacement)."""
        s = np.eye(2)
        d = np.zeros(2)
        for gate in self.gates:
            if isinstance(gate, Rotation):
                m = rotation_matrix(gate.theta)
            elif isinstance(gate, Squeezer):
                m = squeeze_matrix(gate.r)
            else:
                d = d + np.array([gate.dx, gate.dp])
                continue
            s = m @ s
            d = m @ d
        return s, d

    def to_records(self) -> list[dict]:
        """Tagged JSON records, one per gate."""
        records = []
        for gate in self.gates:
            if isinstance(gate, Rotation):
                records.append({"type": "rotation", "theta": gate.theta})
            elif isinstance(gate, Squeezer):
                records.append({"type": "squeezer", "r": gate.r,
                                "transmittance": gate.transmittance,
                                "gain": gate.gain})
            else:
                records.append({"type": "displacement", "dx": gate.dx,
                                "dp": gate.dp})
        return records

    @classmethod
    def from_records(cls, records: list[dict]) -> "GatePlan":
        gates: list[Gate] = []
        for rec in records:
            kind = rec["type"]
            if kind == "rotation":
                gates.append(Rotation(float(rec["theta"])))
            elif kind == "squeezer":
                gates.append(Squeezer(float(rec["r"]),
                                      float(rec["transmittance"]),
                                      float(rec["gain"])))
            elif kind == "displacement":
                gates.append(Displacement(float(rec["dx"]), float(rec["dp"])))
            else:
                raise ValueError(f"unknown gate type {kind!r}")
        return cls(tuple(gates))

    def to_json(self) -> str:
        return json.dumps(self.to_records())

    @classmethod
    def from_json(cls, text: str) -> "GatePlan":
        return cls.from_records(json.loads(text))


def _check_symplectic_2x2(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {s.shape}")
    if abs(np.linalg.det(s) - 1.0) > _DET_TOL:
        raise InvariantViolation(
            f"matrix is not symplectic: det = {np.linalg.det(s):.12g}")
    return s


def euler_decompose(s: np.ndarray) -> tuple[float, float, float]:
    """Euler form of a 2x2 symplectic: S = R(theta_post) Sq(r) R(theta_pre).

    Sq(r) = diag(e^-r, e^+r) with r >= 0; angles lie in (-pi, pi].  A
    degenerate input (r = 0) returns theta_pre = 0 with all rotation folded
    into theta_post, so the decomposition is deterministic.

    Raises:
        InvariantViolation: if det(S) differs from 1 beyond 1e-10.
    """
    s = _check_symplectic_2x2(s)
    u, sigma, vt = np.linalg.svd(s)
    if np.linalg.det(u) < 0.0:
        # det(u) and det(vt) are both -1 here; flip a matched column/row pair
        u = u.copy()
        vt = vt.copy()
        u[:, 1] *= -1.0
        vt[1, :] *= -1.0
    r = math.log(sigma[0])
    if r < _ZERO_GATE_TOL:
        return float(np.arctan2(s[1, 0], s[0, 0])), 0.0, 0.0
    # svd orders diag(e^+r, e^-r); conjugating by R(pi/2) swaps the axes
    quarter = rotation_matrix(np.pi / 2.0)
    post = u @ quarter
    pre = quarter.T @ vt
    theta_post = float(np.arctan2(post[1, 0], post[0, 0]))
    theta_pre = float(np.arctan2(pre[1, 0], pre[0, 0]))
    # R(pi) = -I commutes with the squeezer, so shifting both angles by pi
    # leaves S unchanged; pin theta_pre to (-pi/2, pi/2] so an already
    # diagonal S decomposes with zero rotations
    if theta_pre > np.pi / 2.0:
        theta_pre -= np.pi
        theta_post = theta_post - np.pi if theta_post > 0.0 else theta_post + np.pi
    elif theta_pre <= -np.pi / 2.0:
        theta_pre += np.pi
        theta_post = theta_post - np.pi if theta_post > 0.0 else theta_post + np.pi
    return theta_post, float(r), theta_pre


def plan_from_unitary(s: np.ndarray, d=(0.0, 0.0)) -> GatePlan:
    """Compile a single-mode Gaussian unitary into the physical gate set.

    Emits [rotation(theta_pre), squeezer(r, T = e^{-2r}, nominal gain),
    rotation(theta_post), displacement(d)] with zero-strength gates elided;
    the plan never contains more than one squeezer.
    """
    theta_post, r, theta_pre = euler_decompose(s)
    d = np.asarray(d, dtype=float).reshape(2)
    gates: list[Gate] = []
    if abs(theta_pre) > _ZERO_GATE_TOL:
        gates.append(Rotation(theta_pre))
    if r > _ZERO_GATE_TOL:
        transmittance = math.exp(-2.0 * r)
        gates.append(Squeezer(r, transmittance, nominal_gain(transmittance)))
    if abs(theta_post) > _ZERO_GATE_TOL:
        gates.append(Rotation(theta_post))
    if np.any(np.abs(d) > _ZERO_GATE_TOL):
        gates.append(Displacement(float(d[0]), float(d[1])))
    return GatePlan(tuple(gates))


def simulate_plan(plan: GatePlan, state: GaussianState,
                  ancilla_db: float = math.inf) -> GaussianState:
    """Execute a gate plan on a single-mode Gaussian state.

    Rotations and displacements are exact; each squeezer runs through the
    measurement-feedforward protocol with a lossless apparatus and an
    ancilla squeezed by ``ancilla_db``.  With an infinitely squeezed ancilla
    the result equals the target unitary's action on the moments.
    """
    if state.n_modes != 1:
        raise ValueError("gate plans act on single-mode states")
    if ancilla_db < 0.0:
        raise ValueError("ancilla_db must be >= 0 (or infinite)")
    for gate in plan.gates:
        if isinstance(gate, Rotation):
            state = apply(phase_rotation(gate.theta), state)
        elif isinstance(gate, Displacement):
            state = apply(displacement(gate.dx, gate.dp), state)
        elif math.isinf(ancilla_db):
            state = ideal_squeezed_target(state, gate.r)
        else:
            config = ProtocolConfig(transmittance=gate.transmittance,
                                    ancilla_squeezing=db_to_nepers(ancilla_db),
                                    gain=gate.gain)
            state = run_deterministic(config, ImperfectionModel.ideal(),
                                      state).output
    return state
