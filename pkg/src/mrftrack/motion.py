"""Interaction-free motion model: oriented Gaussian displacement per target.

A step draws (dx, dy, dtheta) from independent zero-mean normals, updates the
heading first, then displaces the position by the rotation of (dx, dy) at the
updated heading. The joint model factors over targets.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .geometry import JointParticle, TargetState, normalize_angle

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class MotionParams(NamedTuple):
    """Std-devs of the per-step displacement draws."""

    sigma_x: float = 5.0
    sigma_y: float = 3.0
    sigma_theta: float = 0.4

    def validate(self) -> "MotionParams":
        if not all(s > 0.0 and math.isfinite(s) for s in self):
            raise ValueError(f"motion std-devs must be positive, got {self}")
        return self


def step_pose(x: float, y: float, theta: float, dx: float, dy: float, dtheta: float):
    """Apply one displacement draw to a pose; rotation uses the updated heading."""
    th = normalize_angle(theta + dtheta)
    c, s = math.cos(th), math.sin(th)
    return x + c * dx - s * dy, y + s * dx + c * dy, th


def propagate_target(state, params: MotionParams, rng: np.random.Generator) -> TargetState:
    """Draw one motion step for a single target."""
    dx, dy, dth = rng.standard_normal(3)
    x, y, th = step_pose(
        float(state[0]),
        float(state[1]),
        float(state[2]),
        dx * params.sigma_x,
        dy * params.sigma_y,
        dth * params.sigma_theta,
    )
    return TargetState(x, y, th)


def propagate_array(states, params: MotionParams, rng: np.random.Generator) -> np.ndarray:
    """Vectorized propagate_target over a (k, 3) pose array.

    Draws consume the generator stream in the same order as k sequential
    propagate_target calls.
    """
    states = np.asarray(states, dtype=np.float64)
    draws = rng.standard_normal(states.shape)
    th = states[:, 2] + draws[:, 2] * params.sigma_theta
    th = (th + math.pi) % (2.0 * math.pi) - math.pi
    c = np.cos(th)
    s = np.sin(th)
    dx = draws[:, 0] * params.sigma_x
    dy = draws[:, 1] * params.sigma_y
    out = np.empty_like(states)
    out[:, 0] = states[:, 0] + c * dx - s * dy
    out[:, 1] = states[:, 1] + s * dx + c * dy
    out[:, 2] = th
    return out


def propagate_joint(particle: JointParticle, params: MotionParams, rng: np.random.Generator) -> JointParticle:
    """Propagate every target of a joint particle independently, order preserved."""
    return JointParticle.from_array(propagate_array(particle.to_array(), params, rng))


def displacement(next_state, prev_state) -> tuple[float, float, float]:
    """Invert the motion step: the (dx, dy, dtheta) that maps prev to next."""
    dth = normalize_angle(float(next_state[2]) - float(prev_state[2]))
    wx = float(next_state[0]) - float(prev_state[0])
    wy = float(next_state[1]) - float(prev_state[1])
    c, s = math.cos(float(next_state[2])), math.sin(float(next_state[2]))
    return c * wx + s * wy, -s * wx + c * wy, dth


def _norm_logpdf(v: float, sigma: float) -> float:
    z = v / sigma
    return -0.5 * z * z - math.log(sigma) - LOG_SQRT_2PI


def log_transition_density(next_state, prev_state, params: MotionParams) -> float:
    """Log density of one motion step from prev_state to next_state.

    Diagnostics and enumeration oracles only; the sampler's acceptance ratio
    never needs it because proposals are drawn from this same kernel.
    """
    dx, dy, dth = displacement(next_state, prev_state)
    return (
        _norm_logpdf(dx, params.sigma_x)
        + _norm_logpdf(dy, params.sigma_y)
        + _norm_logpdf(dth, params.sigma_theta)
    )
