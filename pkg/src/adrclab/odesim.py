"""Closed-loop integration of plant, observer and differentiator.

The combined state is one ODE of dimension 11: plant x in R^4, observer
estimate in R^5, transient profile (r1, r2) in R^2.  Integration is fixed-step
RK4 by default; an adaptive embedded RK45 is available for noise-free runs.
Measurement noise is sample-and-hold per integration step and enters the
observer through the measured output only.

The inner loop works on plain floats (the state is small enough that numpy
per-call overhead dominates otherwise); tests pin its arithmetic against the
public component functions.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .controller import InlsefConfig, NlsefConfig
from .differentiator import CLASSIC, TdConfig
from .errors import ConfigError, DivergenceError, InvalidInputError
from .observer import LINEAR, ObserverConfig
from .plant import PlantParams

DIVERGENCE_LIMIT = 1e9

INERTIA_SCALE = "inertia_scale"
DISTURBANCE_STEP = "disturbance_step"

CSV_HEADER = "t,r,r1,r2,y,y_meas,u,v,xi1,xi2,xi3,xi4,xi5,x1,x2,x3,x4"

_EXP_ARG_MAX = 700.0


@dataclass(frozen=True)
class Reference:
    """Sinusoid amplitude*sin(omega*t) plus a constant offset."""

    amplitude: float = 0.0
    omega: float = 0.0
    constant: float = 0.0

    def __call__(self, t):
        return self.constant + self.amplitude * np.sin(self.omega * t)


@dataclass(frozen=True)
class Event:
    """Timed scenario event: load-inertia scale factor or disturbance step [N*m]."""

    time: float
    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in (INERTIA_SCALE, DISTURBANCE_STEP):
            raise ConfigError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian measurement noise, fully determined by the seed."""

    mean: float = 0.0
    variance: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.variance < 0:
            raise ConfigError("noise variance must be nonnegative")


@dataclass(frozen=True)
class Scenario:
    reference: Reference
    tf: float = 20.0
    dt: float = 1e-4
    sample_dt: float = 1e-3
    events: tuple = ()
    noise: NoiseSpec | None = None

    def __post_init__(self):
        if not (0 < self.dt <= self.sample_dt <= self.tf):
            raise ConfigError("need 0 < dt <= sample_dt <= tf")
        for ratio in (self.sample_dt / self.dt, self.tf / self.sample_dt):
            if abs(ratio - round(ratio)) > 1e-6:
                raise ConfigError("sample_dt must divide tf and be a multiple of dt")
        for e in self.events:
            if not (0.0 <= e.time <= self.tf):
                raise ConfigError(f"event time {e.time} outside [0, tf]")


@dataclass
class RunRecord:
    """Uniformly sampled closed-loop time series.

    xi has shape (N, 5) holding the observer estimates, x has shape (N, 4)
    holding the plant state.  Arrays are frozen after construction.
    """

    t: np.ndarray
    r: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    y: np.ndarray
    y_meas: np.ndarray
    u: np.ndarray
    v: np.ndarray
    xi: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        for arr in (self.t, self.r, self.r1, self.r2, self.y, self.y_meas,
                    self.u, self.v, self.xi, self.x):
            arr.setflags(write=False)

    def __len__(self):
        return self.t.size

    def to_csv(self, path_or_buffer):
        data = np.column_stack([
            self.t, self.r, self.r1, self.r2, self.y, self.y_meas,
            self.u, self.v, self.xi, self.x,
        ])
        if hasattr(path_or_buffer, "write"):
            np.savetxt(path_or_buffer, data, fmt="%.17g", delimiter=",",
                       header=CSV_HEADER, comments="")
        else:
            with open(path_or_buffer, "w", newline="\n") as fh:
                np.savetxt(fh, data, fmt="%.17g", delimiter=",",
                           header=CSV_HEADER, comments="")

    def to_csv_bytes(self) -> bytes:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue().encode()

    @classmethod
    def from_csv(cls, path) -> "RunRecord":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise InvalidInputError(f"unexpected CSV header: {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        return cls(t=data[:, 0], r=data[:, 1], r1=data[:, 2], r2=data[:, 3],
                   y=data[:, 4], y_meas=data[:, 5], u=data[:, 6], v=data[:, 7],
                   xi=data[:, 8:13], x=data[:, 13:17])


# ---------------------------------------------------------------------------
# Integrators
# ---------------------------------------------------------------------------

def rk4_step(f, t, x, h):
    """One classical 4th-order Runge-Kutta step."""
    if not h > 0:
        raise InvalidInputError("step size must be positive")
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, x + (0.5 * h) * k2)
    k4 = f(t + h, x + h * k3)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise DivergenceError(t)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def rk45_integrate(f, t0, x, t1, rtol=1e-8, atol=1e-10, h0=None, min_step=1e-6):
    """Adaptive Dormand-Prince integration of x from t0 to t1.

    Steps below min_step are accepted regardless of the error estimate so
    that discontinuous right-hand sides (the relay differentiator in sliding
    mode) cannot stall the integration; smooth configurations never hit the
    floor.
    """
    t = t0
    h = h0 if h0 is not None else (t1 - t0) / 100.0
    while t < t1 - 1e-14:
        h = min(h, t1 - t)
        ks = []
        for i in range(7):
            xi = x.copy()
            for aij, kj in zip(_DP_A[i], ks):
                xi += h * aij * kj
            ks.append(f(t + _DP_C[i] * h, xi))
        ks = np.array(ks)
        x5 = x + h * (_DP_B5 @ ks)
        x4 = x + h * (_DP_B4 @ ks)
        if not np.all(np.isfinite(x5)):
            raise DivergenceError(t)
        scale = atol + rtol * np.maximum(np.abs(x), np.abs(x5))
        err = np.sqrt(np.mean(((x5 - x4) / scale) ** 2))
        if err <= 1.0 or h <= min_step:
            t += h
            x = x5
        factor = 0.9 * (1.0 / max(err, 1e-10)) ** 0.2
        h *= min(5.0, max(0.2, factor))
        h = max(h, min_step)
    return x


# ---------------------------------------------------------------------------
# Scenario machinery
# ---------------------------------------------------------------------------

def noise_sample(rng, spec: NoiseSpec) -> float:
    """One Gaussian draw; the sequence is fully determined by the generator state."""
    if spec.variance == 0.0:
        return spec.mean
    return spec.mean + math.sqrt(spec.variance) * rng.standard_normal()


def apply_event(p: PlantParams, e: Event):
    """Apply a scenario event to the plant.

    Returns (params, disturbance_level); disturbance_level is None for pure
    parameter events and the torque amplitude [N*m] for disturbance steps.
    """
    if e.kind == INERTIA_SCALE:
        if not e.value > 0:
            raise InvalidInputError("inertia scale factor must be positive")
        return replace(p, Jl=p.Jl * e.value), None
    return p, e.value


def _sign(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def _make_rhs(params: PlantParams, obs: ObserverConfig, ctrl, td: TdConfig,
              reference: Reference):
    """Build the combined 11-state derivative on plain floats.

    Expands the same closed forms as the public component functions
    (plant.slfjm_dynamics, observer derivatives, controller laws, the
    differentiators); tests pin the equivalence.
    """
    ks_h = params.Ks / params.Jh
    ks_l = params.Ks / params.Jl
    damp = params.Km**2 * params.Kg**2 / (params.Rm * params.Jh)
    grav = params.m * params.g * params.h / params.Jl
    b_u = params.Km * params.Kg / (params.Rm * params.Jh)
    b_tau = 1.0 / params.Jh

    b1, b2, b3, b4, b5 = (float(b) for b in obs.gains)
    b0 = obs.b0
    linear_obs = obs.variant == LINEAR
    ka, kb, g_al, g_be = obs.k_alpha, obs.k_beta, obs.alpha, obs.beta

    use_nlsef = isinstance(ctrl, NlsefConfig)
    if use_nlsef:
        al1, de1, al2, de2 = ctrl.alpha1, ctrl.delta1, ctrl.alpha2, ctrl.delta2
        lin1 = de1 ** (1.0 - al1)
        lin2 = de2 ** (1.0 - al2)
        kp, kd = ctrl.kp, ctrl.kd
    else:
        k11, k12, k21, k22 = ctrl.k11, ctrl.k12, ctrl.k21, ctrl.k22
        mu1, mu2, ia1, ia2, delta = ctrl.mu1, ctrl.mu2, ctrl.alpha1, ctrl.alpha2, ctrl.delta

    classic_td = td.variant == CLASSIC
    R = td.R
    td_a, td_b, td_c, td_rho = td.a, td.b, td.c, td.rho_td
    td_norm = td.normalized

    ref_amp, ref_om, ref_c = reference.amplitude, reference.omega, reference.constant

    def rhs(t, z, tau, noise):
        x1, x2, x3, x4, xi1, xi2, xi3, xi4, xi5, r1, r2 = z
        r = ref_c + ref_amp * math.sin(ref_om * t)
        e1 = r1 - xi1
        e2 = r2 - xi2
        if use_nlsef:
            ae1 = abs(e1)
            f1 = e1 / lin1 if ae1 <= de1 else ae1**al1 * _sign(e1)
            ae2 = abs(e2)
            f2 = e2 / lin2 if ae2 <= de2 else ae2**al2 * _sign(e2)
            v = kp * f1 + kd * f2
        else:
            g1 = k11 + k12 / (1.0 + math.exp(min(mu1 * e1 * e1, _EXP_ARG_MAX)))
            g2 = k21 + k22 / (1.0 + math.exp(min(mu2 * e2 * e2, _EXP_ARG_MAX)))
            v1 = g1 * abs(e1)**ia1 * _sign(e1)
            v2 = g2 * abs(e2)**ia2 * _sign(e2)
            v = delta * math.tanh((v1 + v2) / delta)
        u = v - xi5 / b0
        e = x1 + x2 + noise - xi1
        if linear_obs:
            inn = e
        else:
            ae = abs(e)
            inn = ka * ae**g_al * _sign(e) + kb * ae**g_be * e
        bu = b_u * u
        btau = b_tau * tau
        if classic_td:
            dr2 = -R * _sign(r1 - r + r2 * abs(r2) / (2.0 * R))
        else:
            arg = (r1 - r) / td_c if td_norm else (td_b * r1 - (1.0 - td_a) * r) / td_c
            dr2 = -td_rho * td_rho * math.tanh(arg) - td_rho * r2
        return (
            x3,
            x4,
            ks_h * x2 - damp * x3 + bu + btau,
            -ks_h * x2 - ks_l * x2 + damp * x3 + grav * math.sin(x1 + x2) - bu - btau,
            xi2 + b1 * inn,
            xi3 + b2 * inn,
            xi4 + b3 * inn,
            xi5 + b4 * inn + b0 * u,
            b5 * inn,
            r2,
            dr2,
        ), u, v

    return rhs


def _rk4_fast(rhs, t, z, h, tau, noise):
    """Classical RK4 on a plain float tuple; raises DivergenceError on overflow."""
    n = len(z)
    h2 = 0.5 * h
    try:
        k1, _, _ = rhs(t, z, tau, noise)
        k2, _, _ = rhs(t + h2, tuple(z[i] + h2 * k1[i] for i in range(n)), tau, noise)
        k3, _, _ = rhs(t + h2, tuple(z[i] + h2 * k2[i] for i in range(n)), tau, noise)
        k4, _, _ = rhs(t + h, tuple(z[i] + h * k3[i] for i in range(n)), tau, noise)
    except (OverflowError, ValueError):
        raise DivergenceError(t) from None
    h6 = h / 6.0
    out = tuple(z[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) for i in range(n))
    for stage in (k1, k2, k3, k4):
        for val in stage:
            if not math.isfinite(val):
                raise DivergenceError(t)
    return out


def run_closed_loop(scenario: Scenario, plant: PlantParams, observer: ObserverConfig,
                    controller, differentiator: TdConfig, method: str = "rk4",
                    rtol: float = 1e-8, atol: float = 1e-10) -> RunRecord:
    """Integrate the closed loop and return the sampled record.

    The observer consumes the measured output (true output plus the held
    noise sample of the current step) and the applied input; the controller
    acts on the first two estimate errors only; the plant input is the
    linearizing law u = v - xi5/b0.  Raises DivergenceError with the partial
    record attached if any state magnitude exceeds 1e9.
    """
    if observer.rho != 4:
        raise ConfigError("closed loop requires an observer with rho = 4")
    if not isinstance(controller, (NlsefConfig, InlsefConfig)):
        raise ConfigError(f"unsupported controller config {type(controller).__name__}")
    if method not in ("rk4", "rk45"):
        raise ConfigError(f"unknown integration method {method!r}")
    noise_spec = scenario.noise
    noisy = noise_spec is not None and noise_spec.variance > 0.0
    if method == "rk45" and noisy:
        raise ConfigError("rk45 is available for noise-free scenarios only")

    dt = scenario.dt
    steps = int(round(scenario.tf / dt))
    ratio = int(round(scenario.sample_dt / dt))
    n_rows = steps // ratio + 1

    rng = np.random.default_rng(noise_spec.seed) if noise_spec is not None else None

    params = plant
    tau = 0.0
    pending = sorted(scenario.events, key=lambda e: e.time)
    rhs = _make_rhs(params, observer, controller, differentiator, scenario.reference)

    data = np.zeros((n_rows, 17))

    def log_row(k, t, z, held_noise, rhs_now, tau_now):
        _, u, v = rhs_now(t, z, tau_now, held_noise)
        row = data[k]
        row[0] = t
        row[1] = scenario.reference(t)
        row[2] = z[9]
        row[3] = z[10]
        row[4] = z[0] + z[1]
        row[5] = z[0] + z[1] + held_noise
        row[6] = u
        row[7] = v
        row[8:13] = z[4:9]
        row[13:17] = z[0:4]

    def partial(n_logged):
        d = data[:n_logged]
        return RunRecord(
            t=d[:, 0].copy(), r=d[:, 1].copy(), r1=d[:, 2].copy(), r2=d[:, 3].copy(),
            y=d[:, 4].copy(), y_meas=d[:, 5].copy(), u=d[:, 6].copy(), v=d[:, 7].copy(),
            xi=d[:, 8:13].copy(), x=d[:, 13:17].copy(),
        )

    if method == "rk45":
        return _run_rk45(scenario, plant, observer, controller, differentiator,
                         rtol, atol, n_rows, log_row, partial)

    z = (0.0,) * 11
    row = 0
    held_noise = 0.0
    for k in range(steps):
        t = k * dt
        while pending and t >= pending[0].time - 1e-12:
            params, level = apply_event(params, pending.pop(0))
            if level is not None:
                tau = level
            rhs = _make_rhs(params, observer, controller, differentiator,
                            scenario.reference)
        if noise_spec is not None:
            held_noise = noise_sample(rng, noise_spec)
        if k % ratio == 0:
            log_row(row, row * scenario.sample_dt, z, held_noise, rhs, tau)
            row += 1
        try:
            z = _rk4_fast(rhs, t, z, dt, tau, held_noise)
        except DivergenceError:
            raise DivergenceError(t, partial(row)) from None
        for val in z:
            if not (-DIVERGENCE_LIMIT <= val <= DIVERGENCE_LIMIT):
                raise DivergenceError(t + dt, partial(row))

    log_row(row, row * scenario.sample_dt, z, held_noise, rhs, tau)
    return partial(row + 1)


def _run_rk45(scenario, plant, observer, controller, differentiator, rtol, atol,
              n_rows, log_row, partial):
    """Adaptive path: integrate between sample/event breakpoints."""
    params = plant
    tau = 0.0
    pending = sorted(scenario.events, key=lambda e: e.time)
    rhs = _make_rhs(params, observer, controller, differentiator, scenario.reference)
    noise = scenario.noise.mean if scenario.noise is not None else 0.0

    def advance(z, t_from, t_to):
        f = lambda a, b: np.array(rhs(a, tuple(b), tau, noise)[0])
        return rk45_integrate(f, t_from, z, t_to, rtol, atol)

    sample_times = np.arange(n_rows) * scenario.sample_dt
    z = np.zeros(11)
    t = 0.0
    row = 0
    for t_next in sample_times:
        while pending and pending[0].time <= t + 1e-12:
            params, level = apply_event(params, pending.pop(0))
            if level is not None:
                tau = level
            rhs = _make_rhs(params, observer, controller, differentiator,
                            scenario.reference)
        while pending and t < pending[0].time < t_next - 1e-12:
            ev_t = pending[0].time
            try:
                z = advance(z, t, ev_t)
            except DivergenceError as exc:
                raise DivergenceError(exc.time, partial(row)) from None
            t = ev_t
            params, level = apply_event(params, pending.pop(0))
            if level is not None:
                tau = level
            rhs = _make_rhs(params, observer, controller, differentiator,
                            scenario.reference)
        if t_next > t:
            try:
                z = advance(z, t, t_next)
            except DivergenceError as exc:
                raise DivergenceError(exc.time, partial(row)) from None
            t = t_next
        if np.max(np.abs(z)) > DIVERGENCE_LIMIT:
            raise DivergenceError(t, partial(row))
        log_row(row, t, tuple(z), noise, rhs, tau)
        row += 1
    return partial(row)
