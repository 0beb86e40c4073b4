"""Single-link flexible-joint manipulator dynamics and relative-degree checking.

State layout is x = (theta, alpha, theta_dot, alpha_dot): hub angle, joint
deflection [rad] and their rates [rad/s].  The measured output is the total
tip angle y = theta + alpha.  The model is affine in both the motor voltage u
and the disturbance torque tau_d, so the input and disturbance directions are
constant vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericError


@dataclass(frozen=True)
class PlantParams:
    """Physical constants of the flexible-joint manipulator.

    Ks: link stiffness [N*m/rad]
    Jh: hub inertia [kg*m^2]
    m:  link mass [kg]
    g:  gravitational acceleration [m/s^2] (negative, z-up convention)
    h:  hub height [m]
    Km: motor constant [V*s/rad]
    Kg: gear ratio [-]
    Jl: load inertia [kg*m^2]
    Rm: motor armature resistance [Ohm]
    """

    Ks: float
    Jh: float
    m: float
    g: float
    h: float
    Km: float
    Kg: float
    Jl: float
    Rm: float

    def __post_init__(self):
        for name in ("Jh", "Jl", "Rm", "Kg"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)}")


def slfjm_default_params() -> PlantParams:
    """Nominal parameter set of the benchmark manipulator."""
    return PlantParams(
        Ks=1.61,
        Jh=0.0021,
        m=0.403,
        g=-9.81,
        h=0.06,
        Km=0.00767,
        Kg=70.0,
        Jl=0.0059,
        Rm=2.6,
    )


def input_field(p: PlantParams) -> np.ndarray:
    """Constant input direction b: motor voltage enters the two rate equations."""
    b3 = p.Km * p.Kg / (p.Rm * p.Jh)
    return np.array([0.0, 0.0, b3, -b3])


def disturbance_field(p: PlantParams) -> np.ndarray:
    """Constant disturbance-torque direction b_d."""
    return np.array([0.0, 0.0, 1.0 / p.Jh, -1.0 / p.Jh])


def drift(x: np.ndarray, p: PlantParams) -> np.ndarray:
    """Unforced dynamics f(x).  Broadcasts over leading axes of x."""
    x = np.asarray(x)
    ks_h = p.Ks / p.Jh
    ks_l = p.Ks / p.Jl
    damp = p.Km**2 * p.Kg**2 / (p.Rm * p.Jh)
    grav = p.m * p.g * p.h / p.Jl
    x1, x2, x3, x4 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    f3 = ks_h * x2 - damp * x3
    f4 = -ks_h * x2 - ks_l * x2 + damp * x3 + grav * np.sin(x1 + x2)
    return np.stack([x3, x4, f3, f4], axis=-1)


def slfjm_dynamics(x, u, tau_d, p: PlantParams) -> np.ndarray:
    """State derivative f(x) + b*u + b_d*tau_d.

    x may be a single 4-vector or an array of states with trailing axis 4;
    u and tau_d broadcast accordingly.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 4:
        raise InvalidInputError(f"state must have 4 components, got shape {x.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u)) and np.all(np.isfinite(tau_d))):
        raise InvalidInputError("non-finite component in state, input or disturbance")
    dx = drift(x, p)
    dx = dx + np.multiply.outer(np.asarray(u), input_field(p))
    dx = dx + np.multiply.outer(np.asarray(tau_d), disturbance_field(p))
    return dx


def output(x) -> np.ndarray:
    """Measured output y = theta + alpha."""
    x = np.asarray(x)
    return x[..., 0] + x[..., 1]


# ---------------------------------------------------------------------------
# Numeric relative-degree check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelativeDegreeReport:
    """Result of the numeric input-output relative-degree probe.

    rho:               detected relative degree
    residuals:         per-order max |L_g L_f^i h| over the sampled states,
                       for i = 0 .. rho-1 (the last entry is the live one)
    final_coefficient: mean value of L_g L_f^(rho-1) h over the samples
    """

    rho: int
    residuals: tuple[float, ...]
    final_coefficient: float


def _lie_derivative_along_drift(phi, f, eps):
    """Return x -> L_f phi(x) via Richardson-refined central differences.

    The perturbation is taken along f(x) itself, so the quotient directly
    yields the directional derivative grad(phi) . f.
    """

    def lf_phi(x):
        fx = f(x)

        def central(e):
            return (phi(x + e * fx) - phi(x - e * fx)) / (2.0 * e)

        d1 = central(eps)
        d2 = central(eps / 2.0)
        return (4.0 * d2 - d1) / 3.0

    return lf_phi


def _input_derivative(phi, x, g):
    """Directional derivative grad(phi) . g via an imaginary perturbation.

    A pure central difference stacked on top of the nested L_f differences
    loses too many digits for the zero-residual orders; the imaginary-step
    form keeps full precision because no near-equal reals are subtracted.
    """
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return np.zeros(np.asarray(x).shape[:-1])
    eps = 1e-100
    xc = np.asarray(x, dtype=complex) + 1j * eps * (g / gnorm)
    return np.imag(phi(xc)) / eps * gnorm


def check_relative_degree(p: PlantParams, samples, tol: float = 1e-6) -> RelativeDegreeReport:
    """Probe L_g L_f^i h numerically at the given states.

    Walks i = 0, 1, ... and reports rho as the first order at which the
    max |L_g L_f^i h| over the samples exceeds tol.  The inner Lie chain
    uses step 1e-5 central differences with one Richardson refinement.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise InvalidInputError("samples must be non-empty")
    if x.shape[-1] != 4:
        raise InvalidInputError("samples must be 4-component states")
    if not tol > 0:
        raise InvalidInputError("tol must be positive")

    eps = 1e-5
    if np.max(np.abs(x)) + eps == np.max(np.abs(x)) and np.max(np.abs(x)) > 0:
        raise NumericError("finite-difference step underflows at these sample magnitudes")

    f = lambda z: drift(z, p)
    g = input_field(p)
    n = x.shape[-1]

    phi = output
    residuals = []
    for order in range(n):
        lg_vals = _input_derivative(phi, x, g)
        residual = float(np.max(np.abs(lg_vals)))
        residuals.append(residual)
        if residual > tol:
            return RelativeDegreeReport(
                rho=order + 1,
                residuals=tuple(residuals),
                final_coefficient=float(np.mean(lg_vals)),
            )
        phi = _lie_derivative_along_drift(phi, f, eps)

    raise NumericError(
        f"no order up to {n - 1} has |L_g L_f^i h| above tol={tol:g}; "
        "the input may not reach the output"
    )
