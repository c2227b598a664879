"""Radial leapfrog solver for u_tt = u_rr + (N-1)/r u_r + |u|^(p-1) u.

Explicit second-order leapfrog in velocity (Verlet) form, so a step maps
(u, ut) -> (u, ut) directly; the u-sequence is identical to three-level
leapfrog with the nonlinearity at the current level.  dt = cfl*dr away from
blow-up; once the amplitude makes the local ODE time scale
(kappa/max|u|)^((p-1)/2) ~ T-t smaller than that, the step is capped at a
fixed fraction of it, which also makes consecutive steps advance s by a
fixed ~amp_safety, exactly what the similarity resampling needs.

Frames are archived at (approximately) uniform spacing in s using the
amplitude-based proxy for T-t, and the accumulated time uses compensated
summation so frame times stay meaningful down to T-t ~ 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Exponents, PhysicalState, RadialGrid, kappa_value
from .ode import BlowupFit, FitError, fit_blowup, ode_exact


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    e: Exponents
    grid: RadialGrid
    cfl: float = 0.45
    u_cap: float = 1e8
    amp_safety: float = 0.02
    max_steps: int = 2_000_000
    store_ds: float = 0.02
    family: str = "ode_plateau"   # ode_plateau | plateau | gaussian | ode_constant | zero
    T: float = 1.0                # seeded ODE blow-up time (plateau families)
    core_frac: float = 1.15       # plateau: exact-ODE core out to core_frac*T
    taper_frac: float = 1.4       # plateau: data vanishes beyond taper_frac*T
    amplitude: float = 5.0        # gaussian/plateau amplitude
    width: float = 0.35           # gaussian width
    fit_amp_min: float = 1e3

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must be in (0,1), got {self.cfl}")


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def plateau_profile(r, r1, r2):
    """1 on [0, r1], 0 beyond r2, quintic smoothstep between."""
    return 1.0 - _smoothstep((r - r1) / (r2 - r1))


def initial_state(cfg: SolverConfig) -> PhysicalState:
    r = cfg.grid.nodes
    if cfg.family == "zero":
        return PhysicalState(0.0, np.zeros_like(r), np.zeros_like(r))
    if cfg.family == "ode_constant":
        u0, u1 = ode_exact(cfg.e, cfg.T, 0.0)
        return PhysicalState(0.0, np.full_like(r, u0), np.full_like(r, u1))
    if cfg.family == "ode_plateau":
        if cfg.grid.r_max <= cfg.taper_frac * cfg.T:
            raise ValueError("grid too small: need r_max > taper_frac*T")
        u0, u1 = ode_exact(cfg.e, cfg.T, 0.0)
        chi = plateau_profile(r, cfg.core_frac * cfg.T, cfg.taper_frac * cfg.T)
        return PhysicalState(0.0, u0 * chi, u1 * chi)
    if cfg.family == "plateau":
        chi = plateau_profile(r, cfg.core_frac * cfg.T, cfg.taper_frac * cfg.T)
        return PhysicalState(0.0, cfg.amplitude * chi, np.zeros_like(r))
    if cfg.family == "gaussian":
        u = cfg.amplitude * np.exp(-((r / cfg.width) ** 2))
        return PhysicalState(0.0, u, np.zeros_like(r))
    raise ValueError(f"unknown initial-data family '{cfg.family}'")


def _accel(u: np.ndarray, dr: float, N: int, p: float) -> np.ndarray:
    """Laplacian + nonlinearity; origin by the symmetric limit N*u_rr."""
    a = np.empty_like(u)
    a[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dr ** 2
    r = np.arange(1, u.size - 1) * dr
    a[1:-1] += (N - 1.0) / r * (u[2:] - u[:-2]) / (2.0 * dr)
    a[0] = N * 2.0 * (u[1] - u[0]) / dr ** 2
    a[-1] = 0.0
    return a + np.abs(u) ** (p - 1.0) * u


def step(state: PhysicalState, cfg: SolverConfig, dt: float | None = None) -> PhysicalState:
    """One leapfrog (velocity form) step; homogeneous Dirichlet outer boundary."""
    dr = cfg.grid.dr
    if dt is None:
        dt = cfg.cfl * dr
    e = cfg.e
    a0 = _accel(state.u, dr, e.N, e.p)
    u1 = state.u + dt * state.ut + 0.5 * dt * dt * a0
    u1[-1] = 0.0
    a1 = _accel(u1, dr, e.N, e.p)
    ut1 = state.ut + 0.5 * dt * (a0 + a1)
    ut1[-1] = 0.0
    amax = float(np.max(np.abs(u1)))
    # stay far from the float range so |u|^p never overflows silently
    if not np.isfinite(amax) or amax > 1e40:
        raise SolverError(
            "amplitude overflow before the cap triggered; u_cap must stop the run first")
    return PhysicalState(state.t + dt, u1, ut1)


@dataclass
class Trajectory:
    """Archived frames plus the per-step center amplitude series."""

    e: Exponents
    grid: RadialGrid
    frames_t: np.ndarray
    frames_u: np.ndarray          # (n_frames, nr)
    frames_ut: np.ndarray
    center_t: np.ndarray
    center_u: np.ndarray
    max_u: np.ndarray
    status: str                   # 'blowup' | 'no-blowup'
    T_est: float | None = None
    fit: BlowupFit | None = None
    blowup_center: np.ndarray | None = None

    def sample_state(self, t: float) -> PhysicalState:
        """Cubic (4-point Lagrange in t) interpolation of the stored frames."""
        ft = self.frames_t
        if not ft[0] <= t <= ft[-1]:
            raise ValueError(f"t={t} outside stored range [{ft[0]}, {ft[-1]}]")
        i = int(np.searchsorted(ft, t))
        i0 = min(max(i - 2, 0), ft.size - 4)
        tt = ft[i0:i0 + 4]
        u = np.zeros(self.grid.nr)
        ut = np.zeros(self.grid.nr)
        for j in range(4):
            lam = 1.0
            for m in range(4):
                if m != j:
                    lam *= (t - tt[m]) / (tt[j] - tt[m])
            u += lam * self.frames_u[i0 + j]
            ut += lam * self.frames_ut[i0 + j]
        return PhysicalState(t, u, ut)

    @property
    def s_max_covered(self) -> float:
        if self.T_est is None:
            raise ValueError("no blow-up time estimate")
        return -math.log(max(self.T_est - self.frames_t[-1], 1e-300))


def run_until_blowup(cfg: SolverConfig) -> Trajectory:
    """March until max|u| >= u_cap (or the step budget runs out).

    The blow-up time is fitted from the center-value series restricted to
    the asymptotic window [fit_amp_min, u_cap].
    """
    e = cfg.e
    dr = cfg.grid.dr
    dt_spatial = cfg.cfl * dr
    k = kappa_value(e.p)
    pow_ = (e.p - 1.0) / 2.0

    state = initial_state(cfg)
    t_hi, t_lo = 0.0, 0.0          # compensated time accumulator

    frames_t, frames_u, frames_ut = [0.0], [state.u.copy()], [state.ut.copy()]
    center_t, center_u, max_u = [0.0], [float(state.u[0])], [float(np.max(np.abs(state.u)))]
    s_accum = 0.0
    status = "no-blowup"

    for _ in range(cfg.max_steps):
        amax = max_u[-1]
        dt = dt_spatial
        if amax > k:
            dt = min(dt, cfg.amp_safety * (k / amax) ** pow_)
            if dt < 1e-306:
                raise SolverError("time step underflow; lower u_cap")
        state = step(state, cfg, dt)
        # Kahan update of t
        y = dt - t_lo
        t_new = t_hi + y
        t_lo = (t_new - t_hi) - y
        t_hi = t_new
        state.t = t_hi

        amax = float(np.max(np.abs(state.u)))
        center_t.append(t_hi)
        center_u.append(float(state.u[0]))
        max_u.append(amax)

        tau_proxy = (k / max(amax, k)) ** pow_
        s_accum += dt / tau_proxy
        hit_cap = amax >= cfg.u_cap
        if s_accum >= cfg.store_ds or hit_cap:
            frames_t.append(t_hi)
            frames_u.append(state.u.copy())
            frames_ut.append(state.ut.copy())
            s_accum = 0.0
        if hit_cap:
            status = "blowup"
            break

    traj = Trajectory(e=e, grid=cfg.grid,
                      frames_t=np.array(frames_t),
                      frames_u=np.array(frames_u),
                      frames_ut=np.array(frames_ut),
                      center_t=np.array(center_t),
                      center_u=np.array(center_u),
                      max_u=np.array(max_u),
                      status=status)
    if status == "blowup":
        amp_min = min(cfg.fit_amp_min, cfg.u_cap / 100.0)
        # keep the fit clear of float64 exhaustion in T-t: beyond the
        # amplitude where T-t ~ 1e-11 * t, log(T-t) is ulp-noise dominated
        tau_floor = 1e-11 * max(t_hi, 1.0)
        amp_hi = min(cfg.u_cap * 1.01, k * tau_floor ** (-e.two_over_pm1))
        amp_hi = max(amp_hi, 100.0 * amp_min)
        try:
            fit = fit_blowup(traj.center_t, np.abs(traj.center_u),
                             amp_window=(amp_min, amp_hi))
            traj.fit = fit
            traj.T_est = fit.T_est
        except FitError:
            # center did not reach the window; fall back to the max series
            fit = fit_blowup(traj.center_t, traj.max_u,
                             amp_window=(amp_min, amp_hi))
            traj.fit = fit
            traj.T_est = fit.T_est
        traj.blowup_center = np.zeros(e.N)
    return traj
