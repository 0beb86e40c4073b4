"""Tracking differentiators: transient-profile generators.

Both variants integrate a second-order system whose state (r1, r2) tracks the
raw reference and its derivative.  The classic form is the time-optimal relay
differentiator with acceleration limit R; the improved form replaces the relay
with a saturating tanh drive plus linear damping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

CLASSIC = "classic"
IMPROVED = "improved"


@dataclass(frozen=True)
class TdConfig:
    """Differentiator configuration.

    classic uses only R.  improved uses (a, b, c, rho_td) and the
    `normalized` switch: when False the tanh argument is the verbatim
    b*r1 - (1-a)*r, whose equilibrium gain (1-a)/b rescales the profile;
    when True the argument is r1 - r so constants are tracked exactly.
    """

    variant: str = CLASSIC
    R: float = 100.0
    a: float = 0.5
    b: float = 1.0
    c: float = 1.0
    rho_td: float = 1.0
    normalized: bool = True

    def __post_init__(self):
        if self.variant == CLASSIC:
            if not self.R > 0:
                raise ConfigError("R must be positive")
        elif self.variant == IMPROVED:
            if not (0 < self.a < 1):
                raise ConfigError("a must lie in (0, 1)")
            if not (self.b > 0 and self.c > 0 and self.rho_td > 0):
                raise ConfigError("b, c, rho_td must be positive")
        else:
            raise ConfigError(f"unknown differentiator variant {self.variant!r}")


def td_derivative(state, r, cfg: TdConfig) -> np.ndarray:
    """Classic relay differentiator: dr2 = -R*sign(r1 - r + r2|r2|/(2R))."""
    if cfg.variant != CLASSIC:
        raise ConfigError("td_derivative requires the classic variant")
    r1, r2 = state[0], state[1]
    arg = r1 - r + r2 * abs(r2) / (2.0 * cfg.R)
    return np.array([r2, -cfg.R * np.sign(arg)])


def itd_derivative(state, r, cfg: TdConfig) -> np.ndarray:
    """Improved differentiator with tanh drive and linear damping."""
    if cfg.variant != IMPROVED:
        raise ConfigError("itd_derivative requires the improved variant")
    r1, r2 = state[0], state[1]
    rho = cfg.rho_td
    if cfg.normalized:
        arg = (r1 - r) / cfg.c
    else:
        arg = (cfg.b * r1 - (1.0 - cfg.a) * r) / cfg.c
    return np.array([r2, -rho * rho * np.tanh(arg) - rho * r2])


def differentiator_derivative(state, r, cfg: TdConfig) -> np.ndarray:
    """Dispatch on cfg.variant."""
    if cfg.variant == CLASSIC:
        return td_derivative(state, r, cfg)
    return itd_derivative(state, r, cfg)
