"""Deterministic planar one-leg hopper with learnable limb dimensions.

A point-mass torso rides a two-segment leg (hip and knee, torque
actuated).  Ground contact is a penalty spring-damper at the foot with
anisotropically capped viscous friction; contact forces act on the torso
and, through the leg Jacobian transpose, on the joints.  This sidesteps a
full articulated-inertia solve while keeping the load paths that make limb
lengths and thicknesses matter: longer segments extend stride and
workspace, thicker segments add carried mass and swing inertia.

Integration is semi-implicit Euler at a fixed timestep, with joint damping
folded in implicitly so strongly damped joints stay stable.  An episode is
a pure function of (morphology, policy weights, seed): flat ground ignores
the seed entirely; with terrain_bumps enabled the seed generates the bump
heights.  The default pose (leg straight down, foot at the static contact
equilibrium) is an exact fixed point of the integrator, so a zero-torque
policy stays put to the last bit.

Reward per step is torso forward displacement minus a small torque cost;
dropping the torso below fall_height ends the episode with a fall penalty.
A non-finite state aborts the episode with a large negative sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..env_core import MorphologySpec
from ..policy_net import NetworkShape, forward_flat

SENTINEL_SCORE = -1000.0

OBS_DIM = 8
ACT_DIM = 2


@njit(cache=True)
def _splitmix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def _terrain_heights(seed, n_cells, flat_cells, bump_height):
    """Per-seed bump heights on a fixed grid; the approach cells stay flat."""
    heights = np.zeros(n_cells, dtype=np.float64)
    state = _splitmix64(np.uint64(seed))
    for i in range(flat_cells, n_cells):
        state = _splitmix64(state)
        u = (state >> np.uint64(11)) * (1.0 / 9007199254740992.0)  # [0, 1)
        heights[i] = bump_height * u
    return heights


@njit(cache=True)
def _ground_height(x, heights, cell, x_origin):
    """Linear interpolation over the bump grid; flat beyond its ends."""
    if heights.shape[0] == 0:
        return 0.0
    u = (x - x_origin) / cell
    i = int(np.floor(u))
    if i < 0:
        return heights[0]
    if i >= heights.shape[0] - 1:
        return heights[heights.shape[0] - 1]
    frac = u - i
    return heights[i] * (1.0 - frac) + heights[i + 1] * frac


@njit(cache=True)
def _hopper_episode(
    morph, weights, dims, heights,
    dt, n_steps, torso_mass, gravity, leg_density,
    torque_max, torque_cost, joint_damping, motor_inertia,
    contact_k, contact_c, friction_c, friction_mu,
    limit_k, q1_lo, q1_hi, q2_lo, q2_hi,
    fall_height, fall_penalty, rate_scale,
    bump_cell, bump_origin, init_height_offset,
):
    len1 = morph[0]
    len2 = morph[1]
    thick1 = morph[2]
    thick2 = morph[3]
    m1 = leg_density * len1 * thick1
    m2 = leg_density * len2 * thick2
    m_tot = torso_mass + m1 + m2
    # Swing inertias: rod about its proximal end plus the distal segment as
    # a point mass at its centre; a fixed rotor inertia dominates so the
    # torque dynamics stay well-conditioned at the chosen timestep.
    inertia1 = motor_inertia + m1 * len1 * len1 / 3.0 + m2 * (len1 + 0.5 * len2) ** 2
    inertia2 = motor_inertia + m2 * len2 * len2 / 3.0

    # Start at the static contact equilibrium: leg straight down, contact
    # spring compressed exactly against total weight.  This pose is a fixed
    # point of the stepper for zero torque.
    pen0 = m_tot * gravity / contact_k
    x = 0.0
    z = len1 + len2 - pen0 + init_height_offset
    vx = 0.0
    vz = 0.0
    q1 = 0.0
    q2 = 0.0
    w1 = 0.0
    w2 = 0.0

    obs = np.empty(OBS_DIM, dtype=np.float64)
    score = 0.0
    for step in range(n_steps):
        s1 = np.sin(q1)
        c1 = np.cos(q1)
        s12 = np.sin(q1 + q2)
        c12 = np.cos(q1 + q2)
        foot_x = x + len1 * s1 + len2 * s12
        foot_z = z - len1 * c1 - len2 * c12
        # Jacobian of the foot point wrt (q1, q2)
        j1x = len1 * c1 + len2 * c12
        j1z = len1 * s1 + len2 * s12
        j2x = len2 * c12
        j2z = len2 * s12
        foot_vx = vx + j1x * w1 + j2x * w2
        foot_vz = vz + j1z * w1 + j2z * w2

        ground_z = _ground_height(foot_x, heights, bump_cell, bump_origin)
        pen = ground_z - foot_z
        if pen > 0.0:
            f_n = contact_k * pen - contact_c * foot_vz
            if f_n < 0.0:
                f_n = 0.0
            f_t = -friction_c * foot_vx
            cap = friction_mu * f_n
            if f_t > cap:
                f_t = cap
            elif f_t < -cap:
                f_t = -cap
            contact = 1.0
        else:
            f_n = 0.0
            f_t = 0.0
            contact = 0.0

        obs[0] = z
        obs[1] = vx
        obs[2] = vz
        obs[3] = q1
        obs[4] = q2
        obs[5] = rate_scale * w1
        obs[6] = rate_scale * w2
        obs[7] = contact
        act = forward_flat(weights, dims, obs)
        a1 = min(1.0, max(-1.0, act[0]))
        a2 = min(1.0, max(-1.0, act[1]))

        # torques: actuation + contact via J^T + gravity on the leg + soft limits
        tq1 = torque_max * a1 + j1x * f_t + j1z * f_n
        tq2 = torque_max * a2 + j2x * f_t + j2z * f_n
        tq1 += -gravity * (m1 * 0.5 * len1 * s1 + m2 * (len1 * s1 + 0.5 * len2 * s12))
        tq2 += -gravity * m2 * 0.5 * len2 * s12
        if q1 > q1_hi:
            tq1 += -limit_k * (q1 - q1_hi)
        elif q1 < q1_lo:
            tq1 += -limit_k * (q1 - q1_lo)
        if q2 > q2_hi:
            tq2 += -limit_k * (q2 - q2_hi)
        elif q2 < q2_lo:
            tq2 += -limit_k * (q2 - q2_lo)

        # semi-implicit Euler; joint damping handled implicitly
        w1 = (w1 + dt * tq1 / inertia1) / (1.0 + dt * joint_damping / inertia1)
        w2 = (w2 + dt * tq2 / inertia2) / (1.0 + dt * joint_damping / inertia2)
        q1 += dt * w1
        q2 += dt * w2
        vx += dt * (f_t / m_tot)
        vz += dt * (f_n / m_tot - gravity)
        x_prev = x
        x += dt * vx
        z += dt * vz

        score += (x - x_prev) - torque_cost * (np.abs(a1) + np.abs(a2))

        if not (
            np.isfinite(x) and np.isfinite(z) and np.isfinite(vx) and np.isfinite(vz)
            and np.isfinite(q1) and np.isfinite(q2)
            and np.isfinite(w1) and np.isfinite(w2)
        ):
            return SENTINEL_SCORE, step + 1
        if z < fall_height + _ground_height(x, heights, bump_cell, bump_origin):
            score += fall_penalty
            return score, step + 1
    return score, n_steps


@dataclass(frozen=True)
class PlanarHopper:
    """Config-frozen hopper; see the module docstring for the model."""

    torso_mass: float = 5.0
    gravity: float = 9.81
    leg_density: float = 5.0          # kg/m^2, segment mass = rho * L * t
    torque_max: float = 80.0          # N m at |action| = 1
    torque_cost: float = 0.001        # per unit of summed |action|
    joint_damping: float = 8.0        # N m s, implicit
    motor_inertia: float = 0.2        # kg m^2 reflected rotor inertia per joint
    contact_k: float = 2000.0         # N/m penalty spring
    contact_c: float = 150.0          # N s/m contact damping
    friction_c: float = 30.0          # N s/m tangential viscous friction
    friction_mu: float = 1.5          # Coulomb cap on |F_t| / F_n
    limit_k: float = 200.0            # N m/rad soft joint-limit spring
    q1_range: tuple[float, float] = (-1.2, 1.2)
    q2_range: tuple[float, float] = (-2.2, 0.3)
    fall_height: float = 0.1          # torso height ending the episode
    fall_penalty: float = -100.0
    rate_scale: float = 0.1           # joint-rate scaling in the observation
    original_l1: float = 0.25
    original_l2: float = 0.25
    original_t1: float = 0.04
    original_t2: float = 0.04
    hidden_dims: tuple[int, ...] = (16, 16)
    dt: float = 0.01
    episode_steps: int = 1000
    terrain_bumps: bool = False
    bump_height: float = 0.03
    bump_cell: float = 0.5
    n_cells: int = 128
    flat_cells: int = 4
    bump_origin: float = -2.0
    init_height_offset: float = 0.0

    obs_dim = OBS_DIM
    act_dim = ACT_DIM

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        object.__setattr__(self, "q1_range", tuple(self.q1_range))
        object.__setattr__(self, "q2_range", tuple(self.q2_range))

    # -- trainer-facing surface -------------------------------------------

    def morph_dim(self) -> int:
        return 4

    def default_morph_spec(self) -> MorphologySpec:
        return MorphologySpec(
            names=("leg1_length", "leg2_length", "leg1_thickness", "leg2_thickness"),
            original=np.array(
                [self.original_l1, self.original_l2, self.original_t1, self.original_t2]
            ),
        )

    def policy_shape(self) -> NetworkShape:
        return NetworkShape(self.obs_dim, self.hidden_dims, self.act_dim)

    def policy_param_count(self) -> int:
        return self.policy_shape().parameter_count

    def leg_area(self, physical: np.ndarray) -> float:
        physical = self._check_morph(physical)
        return float(physical[0] * physical[2] + physical[1] * physical[3])

    def _check_morph(self, physical: np.ndarray) -> np.ndarray:
        physical = np.asarray(physical, dtype=np.float64)
        if physical.shape != (4,):
            raise ValueError(f"expected 4 morphology values, got {physical.shape}")
        if np.any(physical <= 0.0):
            raise ValueError("morphology values must be > 0")
        return physical

    def _heights(self, seed: int) -> np.ndarray:
        if not self.terrain_bumps:
            return np.empty(0, dtype=np.float64)
        return _terrain_heights(
            np.uint64(seed), self.n_cells, self.flat_cells, self.bump_height
        )

    def _kernel_consts(self) -> tuple:
        return (
            self.dt, self.episode_steps, self.torso_mass, self.gravity,
            self.leg_density, self.torque_max, self.torque_cost,
            self.joint_damping, self.motor_inertia,
            self.contact_k, self.contact_c, self.friction_c, self.friction_mu,
            self.limit_k, self.q1_range[0], self.q1_range[1],
            self.q2_range[0], self.q2_range[1],
            self.fall_height, self.fall_penalty, self.rate_scale,
            self.bump_cell, self.bump_origin, self.init_height_offset,
        )

    def rollout_params(
        self, physical: np.ndarray, policy_params: np.ndarray, seed: int
    ) -> tuple[float, int]:
        """Fused episode: MLP weights in, (task_score, steps) out."""
        physical = self._check_morph(physical)
        shape = self.policy_shape()
        weights = np.ascontiguousarray(policy_params, dtype=np.float64)
        if weights.shape != (shape.parameter_count,):
            raise ValueError("policy segment length does not match network shape")
        score, steps = _hopper_episode(
            physical, weights, shape.dims_array(), self._heights(seed),
            *self._kernel_consts(),
        )
        return float(score), int(steps)

    def final_state(self, physical: np.ndarray, policy, seed: int) -> np.ndarray:
        """State (x, z, vx, vz, q1, q2, w1, w2) after a callback episode.

        Probe for integration studies (timestep convergence, settling).
        """
        *_, state = self._run_callback(physical, policy, seed)
        return state

    def rollout(self, physical: np.ndarray, policy, seed: int) -> tuple[float, int]:
        """Episode driven by an arbitrary policy callable (obs -> 2 actions).

        Python-stepped replica of the fused kernel for probing and tests.
        Keep any given study on one path: the two agree to float noise, not
        bitwise.
        """
        score, steps, _ = self._run_callback(physical, policy, seed)
        return score, steps

    def _run_callback(self, physical, policy, seed: int):
        physical = self._check_morph(physical)
        len1, len2, thick1, thick2 = physical
        heights = self._heights(seed)
        m1 = self.leg_density * len1 * thick1
        m2 = self.leg_density * len2 * thick2
        m_tot = self.torso_mass + m1 + m2
        inertia1 = self.motor_inertia + m1 * len1**2 / 3.0 + m2 * (len1 + 0.5 * len2) ** 2
        inertia2 = self.motor_inertia + m2 * len2**2 / 3.0
        pen0 = m_tot * self.gravity / self.contact_k
        x, z = 0.0, len1 + len2 - pen0 + self.init_height_offset
        vx = vz = q1 = q2 = w1 = w2 = 0.0
        q1_lo, q1_hi = self.q1_range
        q2_lo, q2_hi = self.q2_range
        dt = self.dt
        score = 0.0
        obs = np.empty(OBS_DIM, dtype=np.float64)
        for step in range(self.episode_steps):
            s1, c1 = np.sin(q1), np.cos(q1)
            s12, c12 = np.sin(q1 + q2), np.cos(q1 + q2)
            foot_x = x + len1 * s1 + len2 * s12
            foot_z = z - len1 * c1 - len2 * c12
            j1x, j1z = len1 * c1 + len2 * c12, len1 * s1 + len2 * s12
            j2x, j2z = len2 * c12, len2 * s12
            foot_vx = vx + j1x * w1 + j2x * w2
            foot_vz = vz + j1z * w1 + j2z * w2
            ground_z = _ground_height(foot_x, heights, self.bump_cell, self.bump_origin)
            pen = ground_z - foot_z
            if pen > 0.0:
                f_n = max(0.0, self.contact_k * pen - self.contact_c * foot_vz)
                cap = self.friction_mu * f_n
                f_t = min(cap, max(-cap, -self.friction_c * foot_vx))
                contact = 1.0
            else:
                f_n = f_t = 0.0
                contact = 0.0
            obs[:] = (z, vx, vz, q1, q2, self.rate_scale * w1, self.rate_scale * w2, contact)
            act = np.asarray(policy(obs), dtype=np.float64).reshape(-1)
            a1 = min(1.0, max(-1.0, float(act[0])))
            a2 = min(1.0, max(-1.0, float(act[1])))
            tq1 = self.torque_max * a1 + j1x * f_t + j1z * f_n
            tq2 = self.torque_max * a2 + j2x * f_t + j2z * f_n
            tq1 += -self.gravity * (m1 * 0.5 * len1 * s1 + m2 * (len1 * s1 + 0.5 * len2 * s12))
            tq2 += -self.gravity * m2 * 0.5 * len2 * s12
            if q1 > q1_hi:
                tq1 += -self.limit_k * (q1 - q1_hi)
            elif q1 < q1_lo:
                tq1 += -self.limit_k * (q1 - q1_lo)
            if q2 > q2_hi:
                tq2 += -self.limit_k * (q2 - q2_hi)
            elif q2 < q2_lo:
                tq2 += -self.limit_k * (q2 - q2_lo)
            w1 = (w1 + dt * tq1 / inertia1) / (1.0 + dt * self.joint_damping / inertia1)
            w2 = (w2 + dt * tq2 / inertia2) / (1.0 + dt * self.joint_damping / inertia2)
            q1 += dt * w1
            q2 += dt * w2
            vx += dt * (f_t / m_tot)
            vz += dt * (f_n / m_tot - self.gravity)
            x_prev = x
            x += dt * vx
            z += dt * vz
            score += (x - x_prev) - self.torque_cost * (abs(a1) + abs(a2))
            state = np.array([x, z, vx, vz, q1, q2, w1, w2])
            if not np.all(np.isfinite(state)):
                return SENTINEL_SCORE, step + 1, state
            if z < self.fall_height + _ground_height(x, heights, self.bump_cell, self.bump_origin):
                return score + self.fall_penalty, step + 1, state
        return score, self.episode_steps, np.array([x, z, vx, vz, q1, q2, w1, w2])
