"""Shared fixtures and small simulators used across the test modules."""

import numpy as np

import adrclab as a


def demo_leso_setup():
    """A well-damped linear-observer loop that tracks a unit sinusoid.

    Used by happy-path tests that need bounded dynamics; the gains were
    placed by eigenvalue analysis of the linearized closed loop.
    """
    obs = a.ObserverConfig(omega0=40.0, a=a.binomial_coefficients(5), b0=23000.0)
    ctl = a.NlsefConfig(alpha1=1.0, delta1=1.0, alpha2=1.0, delta2=1.0, kp=8.0, kd=0.9)
    td = a.TdConfig(variant="classic", R=500.0)
    return a.slfjm_default_params(), obs, ctl, td


def demo_inleso_setup():
    """Smooth nonlinear-observer counterpart (safe for adaptive integration)."""
    obs = a.ObserverConfig(omega0=40.0, a=a.binomial_coefficients(5), b0=23000.0,
                           variant="improved_nonlinear", k_alpha=0.05, k_beta=1.0,
                           alpha=0.5, beta=1.0)
    ctl = a.InlsefConfig(k11=8.0, k12=0.0, k21=0.9, k22=0.0, mu1=1.0, mu2=1.0,
                         alpha1=1.0, alpha2=1.0, delta=50.0)
    td = a.TdConfig(variant="improved", a=0.5, b=1.0, c=0.1, rho_td=30.0, normalized=True)
    return a.slfjm_default_params(), obs, ctl, td


def unit_sine_scenario(tf=8.0, dt=1e-4, sample_dt=1e-3, amplitude=1.0):
    return a.Scenario(reference=a.Reference(amplitude=amplitude, omega=2.0),
                      tf=tf, dt=dt, sample_dt=sample_dt)


def simulate_chain_with_leso(omega0, a_coeffs=None, tf=10.0, dt=1e-3):
    """Ideal 4-integrator chain driven by the injected disturbance sin(t),
    observed by a linear extended state observer with u = 0.

    Returns (t, err) where err[:, i] = true state i minus its estimate; the
    fifth column compares sin(t) against the lumped-disturbance estimate.
    """
    coeffs = a_coeffs if a_coeffs is not None else a.binomial_coefficients(5)
    cfg = a.ObserverConfig(omega0=omega0, a=coeffs, b0=1.0)

    def rhs(t, z):
        chain, est = z[:4], z[4:]
        dchain = np.array([chain[1], chain[2], chain[3], np.sin(t)])
        dest = a.leso_derivative(est, chain[0], 0.0, cfg)
        return np.concatenate([dchain, dest])

    n = int(round(tf / dt))
    z = np.zeros(9)
    ts = np.empty(n)
    errs = np.empty((n, 5))
    for k in range(n):
        z = a.rk4_step(rhs, k * dt, z, dt)
        t = (k + 1) * dt
        ts[k] = t
        errs[k, :4] = z[:4] - z[4:8]
        errs[k, 4] = np.sin(t) - z[8]
    return ts, errs


def integrate_td(cfg, reference_fn, tf, dt=1e-4, state=(0.0, 0.0)):
    """Integrate a differentiator alone against a reference signal."""
    from adrclab.differentiator import differentiator_derivative

    z = np.array(state, dtype=float)
    rhs = lambda t, s: differentiator_derivative(s, reference_fn(t), cfg)
    for k in range(int(round(tf / dt))):
        z = a.rk4_step(rhs, k * dt, z, dt)
    return z
