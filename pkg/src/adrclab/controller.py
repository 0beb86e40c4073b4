"""Nonlinear state-error feedback laws and the linearizing control law.

The virtual control v acts on the disturbance-cancelled chain of integrators;
the actual plant input is u = v - xi_last/b0 where xi_last is the observer's
lumped-disturbance estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_EXP_ARG_MAX = 700.0  # exp saturates harmlessly above this


@dataclass(frozen=True)
class NlsefConfig:
    """fal-based error feedback v = kp*fal(e1) + kd*fal(e2).

    kp and kd default to 1 so the plain two-term sum is the default law.
    """

    alpha1: float
    delta1: float
    alpha2: float
    delta2: float
    kp: float = 1.0
    kd: float = 1.0

    def __post_init__(self):
        if not (0 < self.alpha1 <= 1 and 0 < self.alpha2 <= 1):
            raise ConfigError("fal exponents must lie in (0, 1]")
        if not (self.delta1 > 0 and self.delta2 > 0):
            raise ConfigError("fal thresholds must be positive")


@dataclass(frozen=True)
class InlsefConfig:
    """Sigmoid-scheduled power-law feedback with tanh output saturation."""

    k11: float
    k12: float
    k21: float
    k22: float
    mu1: float
    mu2: float
    alpha1: float
    alpha2: float
    delta: float

    def __post_init__(self):
        if min(self.k11, self.k12, self.k21, self.k22, self.mu1, self.mu2) < 0:
            raise ConfigError("gains and sharpness factors must be nonnegative")
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise ConfigError("exponents must be positive")
        if not self.delta > 0:
            raise ConfigError("saturation level delta must be positive")


def fal(e, alpha, delta):
    """Piecewise power-law error map, linear inside |e| <= delta.

    The small-error branch is e / delta^(1-alpha) so both branches meet at
    delta^alpha and the map is continuous and odd.
    """
    e = np.asarray(e, dtype=float)
    small = np.abs(e) <= delta
    out = np.where(small, e / delta ** (1.0 - alpha), np.abs(e) ** alpha * np.sign(e))
    return out if out.ndim else float(out)


def nlsef(e1, e2, cfg: NlsefConfig):
    """v = kp*fal(e1, alpha1, delta1) + kd*fal(e2, alpha2, delta2)."""
    return cfg.kp * fal(e1, cfg.alpha1, cfg.delta1) + cfg.kd * fal(e2, cfg.alpha2, cfg.delta2)


def inlsef(e1, e2, cfg: InlsefConfig):
    """Saturated sum of two sigmoid-scheduled power-law terms."""
    v1 = _scheduled_term(e1, cfg.k11, cfg.k12, cfg.mu1, cfg.alpha1)
    v2 = _scheduled_term(e2, cfg.k21, cfg.k22, cfg.mu2, cfg.alpha2)
    return cfg.delta * np.tanh((v1 + v2) / cfg.delta)


def _scheduled_term(e, k_base, k_sched, mu, alpha):
    gain = k_base + k_sched / (1.0 + np.exp(min(mu * e * e, _EXP_ARG_MAX)))
    return gain * abs(e) ** alpha * np.sign(e)


def aiofl_law(v, xi_hat_last, b0):
    """Linearizing control u = v - xi_hat_last / b0."""
    if b0 == 0:
        raise ConfigError("b0 must be nonzero")
    return v - xi_hat_last / b0


def control(e1, e2, cfg):
    """Dispatch the virtual control on the config type."""
    if isinstance(cfg, NlsefConfig):
        return nlsef(e1, e2, cfg)
    if isinstance(cfg, InlsefConfig):
        return inlsef(e1, e2, cfg)
    raise ConfigError(f"unsupported controller config {type(cfg).__name__}")
