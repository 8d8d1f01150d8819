"""Drone plant: reaction delay, acceleration limit, sensing noise.

The plant tracks the commanded velocity issued `t_delay` ago, changing its
velocity by at most a_max*dt per step (slew limiting, which realizes exact
constant-deceleration stops), and integrates position with the midpoint
rule. Gaussian noise corrupts only the *sensed* state; ground truth stays
clean.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvParams:
    """Environment / hardware realism knobs."""

    t_delay: float = 1.0          # command reaction delay, s
    a_max: float = 6.0            # acceleration limit, m/s^2
    pos_noise_sigma: float = 0.3  # sensed-position noise, m
    vel_noise_sigma: float = 0.2  # sensed-velocity noise, m/s
    comm_range: float = 80.0      # broadcast reception radius, m
    packet_loss_base: float = 0.05  # loss probability inside comm_range
    broadcast_hz: float = 10.0
    control_hz: float = 20.0
    physics_dt: float = 0.01      # s
    stale_timeout: float = 1.0    # drop neighbor views older than this, s

    def validate(self) -> list[str]:
        errs = []
        nonneg = [
            ("t_delay", self.t_delay),
            ("pos_noise_sigma", self.pos_noise_sigma),
            ("vel_noise_sigma", self.vel_noise_sigma),
        ]
        for name, value in nonneg:
            if value < 0.0:
                errs.append(f"{name} must be >= 0, got {value}")
        positive = [
            ("a_max", self.a_max),
            ("comm_range", self.comm_range),
            ("broadcast_hz", self.broadcast_hz),
            ("control_hz", self.control_hz),
            ("physics_dt", self.physics_dt),
            ("stale_timeout", self.stale_timeout),
        ]
        for name, value in positive:
            if not value > 0.0:
                errs.append(f"{name} must be > 0, got {value}")
        if not 0.0 <= self.packet_loss_base < 1.0:
            errs.append(f"packet_loss_base must be in [0, 1), got {self.packet_loss_base}")
        if self.physics_dt > 1.0 / self.control_hz + 1e-12:
            errs.append(
                f"physics_dt = {self.physics_dt} must not exceed the control period "
                f"{1.0 / self.control_hz}"
            )
        return errs

    @property
    def control_period(self) -> float:
        return 1.0 / self.control_hz

    @property
    def delay_ticks(self) -> int:
        """Reaction delay quantized to whole control periods."""
        return int(round(self.t_delay * self.control_hz))


class CommandBuffer:
    """Ring buffer of velocity commands, one slot per control tick.

    The command that the plant acts on at time t is the one issued at the
    latest control tick <= t - t_delay; before any command matures the
    plant holds the initial command (zeros: hover).
    """

    def __init__(self, n_agents: int, env: EnvParams, dim: int = 3):
        self.delay_ticks = env.delay_ticks
        self.size = self.delay_ticks + 2
        self._buf = np.zeros((self.size, n_agents, dim))
        self._last_tick = -1

    def push(self, tick: int, commands: np.ndarray) -> None:
        self._buf[tick % self.size] = commands
        self._last_tick = tick

    def active(self, tick_now: int) -> np.ndarray:
        """Command effective at control tick index `tick_now` (the command
        issued delay_ticks earlier)."""
        k = tick_now - self.delay_ticks
        if k < 0:
            return self._buf[self.size - 1] * 0.0
        k = min(k, self._last_tick)
        return self._buf[k % self.size]


def plant_step_arrays(pos: np.ndarray, vel: np.ndarray, cmd: np.ndarray,
                      a_max: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """One physics step for all agents: slew-limited velocity tracking plus
    midpoint position integration. Returns (new_pos, new_vel)."""
    err = cmd - vel
    en = np.linalg.norm(err, axis=-1, keepdims=True)
    step = a_max * dt
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(en > step, step / en, 1.0)
    new_vel = vel + err * scale
    new_pos = pos + 0.5 * (vel + new_vel) * dt
    return new_pos, new_vel


def step_plant(pos: np.ndarray, vel: np.ndarray, buffer: CommandBuffer,
               tick_now: int, env: EnvParams, dt: float,
               rng: np.random.Generator | None = None):
    """Single-agent (or whole-fleet) plant step against the delayed command.

    Returns (new_pos, new_vel, sensed_pos, sensed_vel); the sensed pair
    carries the Gaussian noise, ground truth does not.
    """
    cmd = buffer.active(tick_now)
    new_pos, new_vel = plant_step_arrays(pos, vel, cmd, env.a_max, dt)
    if rng is None:
        sensed_pos, sensed_vel = new_pos.copy(), new_vel.copy()
    else:
        sensed_pos = new_pos + env.pos_noise_sigma * rng.standard_normal(new_pos.shape)
        sensed_vel = new_vel + env.vel_noise_sigma * rng.standard_normal(new_vel.shape)
    return new_pos, new_vel, sensed_pos, sensed_vel
