"""1-D spring-mass crawler with a brute-force-recoverable optimal leg length.

Two point masses on a friction-asymmetric line: a body (the fixed payload)
and a foot, joined by an actuated spring whose stiffness k = kappa * t / L
is set by the leg morphology.  The controller modulates the spring's rest
length; because backward foot slip is damped much harder than forward slip,
periodic pumping ratchets the pair forward.

The built-in reference controller drives the spring at a fixed frequency,
so the score over leg length L peaks where the body-spring resonance meets
the drive -- an interior optimum that a grid sweep can certify and joint
training must recover.

Everything is deterministic and seed-independent: same (morphology, policy)
gives a bitwise-identical episode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..env_core import MorphologySpec
from ..policy_net import NetworkShape, forward_flat

_MODE_MLP = 0
_MODE_REFERENCE = 1

SENTINEL_SCORE = -1000.0


@njit(cache=True)
def _spring_step(xb, vb, xf, vf, action, rest_len, k, c_s, mb, mf, slide_c, grip_c, stroke, dt):
    """One semi-implicit Euler step; returns the new (xb, vb, xf, vf)."""
    a = min(1.0, max(-1.0, action))
    rest = rest_len + stroke * a       # fixed actuator throw, independent of L
    stretch = (xb - xf) - rest
    rel_v = vb - vf
    f_spring = -k * stretch - c_s * rel_v      # force on the body
    vb = vb + dt * (f_spring / mb)
    vf = vf + dt * (-f_spring / mf)
    # Ground friction is integrated implicitly (exact decay for viscous
    # drag), so the backward grip can be near-stiction without blowing up
    # the explicit update.
    if vf > 0.0:
        vf = vf / (1.0 + dt * slide_c / mf)    # cheap forward slide
    else:
        vf = vf / (1.0 + dt * grip_c / mf)     # hard backward grip
    xb = xb + dt * vb
    xf = xf + dt * vf
    return xb, vb, xf, vf


@njit(cache=True)
def _spring_obs(xb, vb, xf, vf, rest_len, phase, obs):
    obs[0] = ((xb - xf) - rest_len) / rest_len
    obs[1] = vb - vf
    obs[2] = np.sin(phase)
    obs[3] = np.cos(phase)


@njit(cache=True)
def _spring_episode(
    leg_len, leg_thick, weights, dims, mode,
    mb, rho, kappa, pad_mass, c_s, slide_c, grip_c, stroke, drive_hz, dt, n_steps,
):
    mf = pad_mass + rho * leg_len * leg_thick
    k = kappa * leg_thick / leg_len
    xb = leg_len
    xf = 0.0
    vb = 0.0
    vf = 0.0
    x_start = xb
    obs = np.empty(4, dtype=np.float64)
    two_pi = 2.0 * np.pi
    for step in range(n_steps):
        phase = two_pi * drive_hz * (step * dt)
        _spring_obs(xb, vb, xf, vf, leg_len, phase, obs)
        if mode == _MODE_REFERENCE:
            action = obs[2]
        else:
            action = forward_flat(weights, dims, obs)[0]
        xb, vb, xf, vf = _spring_step(
            xb, vb, xf, vf, action, leg_len, k, c_s, mb, mf, slide_c, grip_c, stroke, dt
        )
        if not (np.isfinite(xb) and np.isfinite(vb) and np.isfinite(xf) and np.isfinite(vf)):
            return SENTINEL_SCORE, step + 1
    return xb - x_start, n_steps


@dataclass(frozen=True)
class SpringMass1D:
    """Config-frozen crawler; see the module docstring for the model."""

    body_mass: float = 5.0            # payload, kg
    leg_density: float = 5.0          # rho, kg/m^2: leg mass = rho * L * t
    stiffness_const: float = 800.0    # kappa, N: k = kappa * t / L
    pad_mass: float = 0.5             # fixed foot hardware mass, kg
    original_length: float = 0.5      # m
    original_thickness: float = 0.1   # m
    spring_damping: float = 4.0       # N s/m on relative velocity
    slide_friction: float = 50.0       # N s/m, foot moving forward
    grip_friction: float = 4000.0      # N s/m, foot moving backward (near stiction)
    stroke: float = 0.1               # actuator throw on the rest length, m
    drive_hz: float = 1.2             # reference controller frequency
    dt: float = 0.01
    episode_steps: int = 1000
    control: str = "reference"        # "reference" | "mlp"
    hidden_dims: tuple[int, ...] = (8,)
    learnable_thickness: bool = False

    obs_dim = 4
    act_dim = 1

    def __post_init__(self) -> None:
        if self.control not in ("reference", "mlp"):
            raise ValueError(f"unknown control mode {self.control!r}")
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))

    # -- trainer-facing surface -------------------------------------------

    def morph_dim(self) -> int:
        return 2 if self.learnable_thickness else 1

    def default_morph_spec(self) -> MorphologySpec:
        if self.learnable_thickness:
            return MorphologySpec(
                names=("leg_length", "leg_thickness"),
                original=np.array([self.original_length, self.original_thickness]),
            )
        return MorphologySpec(
            names=("leg_length",), original=np.array([self.original_length])
        )

    def policy_shape(self) -> NetworkShape | None:
        if self.control == "mlp":
            return NetworkShape(self.obs_dim, self.hidden_dims, self.act_dim)
        return None

    def policy_param_count(self) -> int:
        shape = self.policy_shape()
        return 0 if shape is None else shape.parameter_count

    def leg_area(self, physical: np.ndarray) -> float:
        leg_len, leg_thick = self._leg_dims(physical)
        return float(leg_len * leg_thick)

    def _leg_dims(self, physical: np.ndarray) -> tuple[float, float]:
        physical = np.asarray(physical, dtype=np.float64)
        if physical.shape != (self.morph_dim(),):
            raise ValueError(
                f"expected {self.morph_dim()} morphology values, got {physical.shape}"
            )
        if self.learnable_thickness:
            return float(physical[0]), float(physical[1])
        return float(physical[0]), self.original_thickness

    def _kernel_consts(self) -> tuple:
        return (
            self.body_mass, self.leg_density, self.stiffness_const, self.pad_mass,
            self.spring_damping, self.slide_friction, self.grip_friction,
            self.stroke, self.drive_hz, self.dt, self.episode_steps,
        )

    def rollout_params(
        self, physical: np.ndarray, policy_params: np.ndarray, seed: int
    ) -> tuple[float, int]:
        """Fused episode from the raw policy segment (empty in reference mode)."""
        leg_len, leg_thick = self._leg_dims(physical)
        shape = self.policy_shape()
        if shape is None:
            if len(policy_params) != 0:
                raise ValueError("reference control takes no policy parameters")
            weights = np.empty(0, dtype=np.float64)
            dims = np.array([self.obs_dim, self.act_dim], dtype=np.int64)
            mode = _MODE_REFERENCE
        else:
            weights = np.ascontiguousarray(policy_params, dtype=np.float64)
            if weights.shape != (shape.parameter_count,):
                raise ValueError("policy segment length does not match network shape")
            dims = shape.dims_array()
            mode = _MODE_MLP
        score, steps = _spring_episode(
            leg_len, leg_thick, weights, dims, mode, *self._kernel_consts()
        )
        return float(score), int(steps)

    def rollout(self, physical: np.ndarray, policy, seed: int) -> tuple[float, int]:
        """Episode driven by an arbitrary policy callable (obs -> action).

        Slow path for probing and tests; shares the step kernel with
        rollout_params but computes actions in Python.
        """
        leg_len, leg_thick = self._leg_dims(physical)
        mf = self.pad_mass + self.leg_density * leg_len * leg_thick
        k = self.stiffness_const * leg_thick / leg_len
        xb, vb, xf, vf = leg_len, 0.0, 0.0, 0.0
        x_start = xb
        obs = np.empty(4, dtype=np.float64)
        for step in range(self.episode_steps):
            phase = 2.0 * np.pi * self.drive_hz * (step * self.dt)
            _spring_obs(xb, vb, xf, vf, leg_len, phase, obs)
            action = float(np.asarray(policy(obs)).reshape(-1)[0])
            xb, vb, xf, vf = _spring_step(
                xb, vb, xf, vf, action, leg_len, k, self.spring_damping,
                self.body_mass, mf, self.slide_friction, self.grip_friction,
                self.stroke, self.dt,
            )
            if not all(np.isfinite(v) for v in (xb, vb, xf, vf)):
                return SENTINEL_SCORE, step + 1
        return float(xb - x_start), self.episode_steps


def reference_policy(obs: np.ndarray) -> np.ndarray:
    """The built-in controller: drive the spring with the phase carried in obs."""
    return np.array([obs[2]])
