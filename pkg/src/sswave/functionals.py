"""Scalar functionals of a similarity profile, and the Lyapunov ladders.

Per-snapshot functionals (all integrals over the unit ball, g1 denoting
(p+1)/(p-1)^2 and rho_eps = (1-|y|^2)^eps):

    E0   = int 1/2 ws^2 + 1/2(|gw|^2 - (y.gw)^2) + g1 w^2 - |w|^(p+1)/(p+1)
    E    = E0 + alpha int w ws - (alpha N/2) int w^2,      F0 = e^(2 alpha s) E
    E_eps, J_eps, G_eps, N_eps                      (weight rho_eps)
    I_eps, L_eps = N_(1/2+eps) + (1/2+eps) I_eps    (weight rho_eps/sqrt(1-|y|^2))
    M    = E_e0 + N_e0 - c J_e0 + (6/5) c int w^2 |y|^2 rho/(1-|y|^2)
           + c alpha int w^2 rho,   c = 2/(p-1) + 2/5,  e0 = 3/5

Series-level objects: the ladder F_k = s^(k/18) F0 + (k/18) int_s^inf
tau^((k-18)/18) F0 dtau, the weighted tails U_k, and the companions
scriptF_k = s^((k-18)/18) e^(2 alpha s) M + sigma_k U_k.  Tails beyond the
sampled horizon are estimated from the last sample's e^(2 alpha s) decay and
recorded as metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import Exponents, FunctionalSeries
from .quadrature import RuleTable, surface_area
from .similarity import SimilaritySnapshot


def _g1(e: Exponents) -> float:
    return (e.p + 1.0) / (e.p - 1.0) ** 2


def E0(snap: SimilaritySnapshot, rules: RuleTable, e: Exponents) -> float:
    ns = snap.on(rules.plain)
    wts = rules.plain.weights
    vals = (0.5 * ns.ws ** 2 + 0.5 * (ns.g2 - ns.ydg ** 2)
            + _g1(e) * ns.w ** 2 - np.abs(ns.w) ** (e.p + 1.0) / (e.p + 1.0))
    return float(np.sum(wts * vals))


def E_and_F0(snap: SimilaritySnapshot, rules: RuleTable, e: Exponents):
    ns = snap.on(rules.plain)
    wts = rules.plain.weights
    E = (E0(snap, rules, e)
         + e.alpha * float(np.sum(wts * ns.w * ns.ws))
         - 0.5 * e.alpha * e.N * float(np.sum(wts * ns.w ** 2)))
    return E, math.exp(2.0 * e.alpha * snap.s) * E


def F0(snap: SimilaritySnapshot, rules: RuleTable, e: Exponents) -> float:
    return E_and_F0(snap, rules, e)[1]


def J0(snap: SimilaritySnapshot, rules: RuleTable, e: Exponents) -> float:
    """alpha int w ws - (alpha N / 2) int w^2 (plain measure)."""
    ns = snap.on(rules.plain)
    wts = rules.plain.weights
    return (e.alpha * float(np.sum(wts * ns.w * ns.ws))
            - 0.5 * e.alpha * e.N * float(np.sum(wts * ns.w ** 2)))


def E_eps(snap, rules, e: Exponents, eps: float) -> float:
    ns = snap.on(rules.rule(eps))
    wts = rules.rule(eps).weights
    vals = (0.5 * ns.ws ** 2 + 0.5 * (ns.g2 - ns.ydg ** 2)
            + _g1(e) * ns.w ** 2 - np.abs(ns.w) ** (e.p + 1.0) / (e.p + 1.0))
    return float(np.sum(wts * vals))


def J_eps(snap, rules, e: Exponents, eps: float) -> float:
    ns = snap.on(rules.rule(eps))
    wts = rules.rule(eps).weights
    return float(np.sum(wts * (-ns.w * ns.ws - (0.5 * e.N + e.alpha) * ns.w ** 2)))


def G_eps(snap, rules, e: Exponents, eps: float) -> float:
    ns = snap.on(rules.rule(eps))
    wts = rules.rule(eps).weights
    vals = (ns.g2 - np.abs(ns.w) ** (e.p + 1.0) - (ns.ws + ns.ydg) ** 2
            + 2.0 * _g1(e) * ns.w ** 2)
    return float(np.sum(wts * vals))


def N_eps(snap, rules, e: Exponents, eps: float) -> float:
    ns = snap.on(rules.rule(eps))
    wts = rules.rule(eps).weights
    return float(np.sum(wts * (ns.ydg * ns.ws + ns.ydg ** 2)))


def I_eps(snap, rules, e: Exponents, eps: float) -> float:
    """Singular-weight functional; the rule is built in rho_eps/sqrt(1-|y|^2)."""
    mu = rules.rule(eps - 0.5)
    ns = snap.on(mu)
    return float(np.sum(mu.weights * (-ns.w * (ns.ws + 2.0 * ns.ydg)
                                      - 0.5 * e.N * ns.w ** 2)))


def L_eps(snap, rules, e: Exponents, eps: float) -> float:
    return N_eps(snap, rules, e, 0.5 + eps) + (0.5 + eps) * I_eps(snap, rules, e, eps)


def singular_Lp1(snap, rules, e: Exponents, eps: float) -> float:
    mu = rules.rule(eps - 0.5)
    ns = snap.on(mu)
    return float(np.sum(mu.weights * np.abs(ns.w) ** (e.p + 1.0)))


def M_func(snap, rules, e: Exponents, eps0: float = 0.6) -> float:
    c = e.two_over_pm1 + 0.4
    lo = rules.rule(eps0 - 1.0)
    ns_lo = snap.on(lo)
    ns = snap.on(rules.rule(eps0))
    wts = rules.rule(eps0).weights
    A = float(np.sum(lo.weights * ns_lo.w ** 2 * ns_lo.r2))
    W3 = float(np.sum(wts * ns.w ** 2))
    return (E_eps(snap, rules, e, eps0) + N_eps(snap, rules, e, eps0)
            - c * J_eps(snap, rules, e, eps0) + 1.2 * c * A + c * e.alpha * W3)


def m_bound_denominator(snap, rules, e: Exponents, eps0: float = 0.6) -> float:
    """int (ws^2 + |gw|^2 + w^2 + |w|^(p+1)) rho, the |M| bound's right side."""
    ns = snap.on(rules.rule(eps0))
    wts = rules.rule(eps0).weights
    return float(np.sum(wts * (ns.ws ** 2 + ns.g2 + ns.w ** 2
                               + np.abs(ns.w) ** (e.p + 1.0))))


def h_norm(snap, rules) -> float:
    """Squared norm of the natural energy space on the ball."""
    ns = snap.on(rules.plain)
    wts = rules.plain.weights
    return float(np.sum(wts * (ns.ws ** 2 + ns.g2 - ns.ydg ** 2 + ns.w ** 2)))


FUNCTIONAL_NAMES = ("E0", "E", "F0", "E_eps", "J_eps", "G_eps", "N_eps",
                    "I_eps", "L_eps", "M", "U1", "F1", "Uk", "Fk",
                    "scriptF1", "scriptFk", "singularLp1")


@dataclass(frozen=True)
class FunctionalSpec:
    """Named functional selector: which functional, at which eps and k.

    The singular first component of L_eps always runs at exponent 1/2+eps,
    and the M/U/F companions pin eps0 = 3/5 (overridable).
    """

    name: str
    eps: float = 0.6
    k: int = 1
    sigma: float = 1.0
    eps0_fixed: float = 0.6

    def __post_init__(self):
        if self.name not in FUNCTIONAL_NAMES:
            raise ValueError(f"unknown functional '{self.name}', "
                             f"expected one of {FUNCTIONAL_NAMES}")
        if self.eps <= 0 or self.eps0_fixed <= 0:
            raise ValueError("weight exponents must be positive")
        if self.k < 0:
            raise ValueError("ladder index must be >= 0")


def evaluate_series(spec: FunctionalSpec, snaps, rules, e: Exponents,
                    enforce_span: bool = False) -> FunctionalSeries:
    """Evaluate one named functional over a snapshot series."""
    per_snapshot = {
        "E0": lambda sn: E0(sn, rules, e),
        "E": lambda sn: E_and_F0(sn, rules, e)[0],
        "F0": lambda sn: F0(sn, rules, e),
        "E_eps": lambda sn: E_eps(sn, rules, e, spec.eps),
        "J_eps": lambda sn: J_eps(sn, rules, e, spec.eps),
        "G_eps": lambda sn: G_eps(sn, rules, e, spec.eps),
        "N_eps": lambda sn: N_eps(sn, rules, e, spec.eps),
        "I_eps": lambda sn: I_eps(sn, rules, e, spec.eps),
        "L_eps": lambda sn: L_eps(sn, rules, e, spec.eps),
        "M": lambda sn: M_func(sn, rules, e, spec.eps0_fixed),
        "singularLp1": lambda sn: singular_Lp1(sn, rules, e, spec.eps),
    }
    if spec.name in per_snapshot:
        return series_of(snaps, per_snapshot[spec.name], spec.name)
    k = 1 if spec.name in ("F1", "U1", "scriptF1") else max(spec.k, 1)
    fam = f_family(snaps, rules, e, k, spec.sigma, enforce_span=enforce_span)
    prefix = spec.name.rstrip("1k")  # F | U | scriptF
    return fam[f"{prefix}{k}"]


# ---------------------------------------------------------------------------
# series assembly

def series_of(snaps, fn, name: str) -> FunctionalSeries:
    s = np.array([sn.s for sn in snaps])
    vals = np.array([fn(sn) for sn in snaps])
    return FunctionalSeries(name=name, s=s, values=vals)


def f0_series(snaps, rules, e: Exponents) -> FunctionalSeries:
    return series_of(snaps, lambda sn: F0(sn, rules, e), "F0")


def m_series(snaps, rules, e: Exponents) -> FunctionalSeries:
    return series_of(snaps, lambda sn: M_func(sn, rules, e), "M")


def exp_tail_factor(gamma: float, alpha: float, s_max: float) -> float:
    """int_smax^inf tau^gamma e^(2 alpha (tau - smax)) dtau by quadrature."""
    val, _ = quad(lambda x: (s_max + x) ** gamma * math.exp(2.0 * alpha * x),
                  0.0, np.inf)
    return float(val)


def _tail_series(s: np.ndarray, integrand: np.ndarray, gamma: float,
                 alpha: float):
    """int_s^smax tau^gamma f(tau) dtau (trapezoid, cumulative from the right)
    plus the e^(2 alpha) tail estimate/bound beyond smax."""
    g = s ** gamma * integrand
    inner = np.zeros_like(s)
    for i in range(s.size - 2, -1, -1):
        inner[i] = inner[i + 1] + 0.5 * (g[i] + g[i + 1]) * (s[i + 1] - s[i])
    fac = exp_tail_factor(gamma, alpha, s[-1])
    tail_est = integrand[-1] * fac
    tail_bound = abs(integrand[-1]) * fac
    return inner, tail_est, tail_bound


def required_span(e: Exponents) -> float:
    return 2.5 / abs(e.alpha)


def f_ladder(f0: FunctionalSeries, k: int, e: Exponents,
             enforce_span: bool = True) -> FunctionalSeries:
    """F_k = s^(k/18) F0 + (k/18) int_s^inf tau^((k-18)/18) F0 dtau.

    The integral is truncated at the sampled horizon; the remainder is
    estimated from F0(s_max) e^(2 alpha (tau - s_max)) decay and both added
    to the value and recorded in tail metadata.
    """
    if k < 1:
        raise ValueError("ladder index k must be >= 1")
    s, vals = f0.s, f0.values
    span = s[-1] - s[0]
    if enforce_span and span < required_span(e):
        raise ValueError(
            f"series spans {span:.3f} in s but the tail needs s_max >= "
            f"{s[0] + required_span(e):.3f} (e^(2 alpha s) domination)")
    gamma = (k - 18.0) / 18.0
    inner, tail_est, tail_bound = _tail_series(s, vals, gamma, e.alpha)
    F = s ** (k / 18.0) * vals + (k / 18.0) * (inner + tail_est)
    return FunctionalSeries(
        name=f"F{k}", s=s, values=F,
        tail_bound=np.full_like(s, (k / 18.0) * tail_bound),
        meta={"k": k, "s_max": float(s[-1])})


def u_integrand_series(snaps, rules, e: Exponents, eps0: float = 0.6) -> FunctionalSeries:
    """int |w|^(p+1) rho/(1-|y|^2) + int w^2 rho, the U-ladder integrand."""
    lo = rules.rule(eps0 - 1.0)
    r = rules.rule(eps0)

    def fn(sn):
        ns_lo = sn.on(lo)
        ns = sn.on(r)
        return (float(np.sum(lo.weights * np.abs(ns_lo.w) ** (e.p + 1.0)))
                + float(np.sum(r.weights * ns.w ** 2)))

    return series_of(snaps, fn, "U_integrand")


def u_series(uint: FunctionalSeries, k: int, e: Exponents) -> FunctionalSeries:
    """U_k = int_s^inf tau^((k-18)/18) e^(2 alpha tau) (U integrand) dtau.

    Beyond the sampled horizon the slowly varying integrand is frozen at its
    last value and the full kernel tau^gamma e^(2 alpha tau) is integrated out.
    """
    gamma = (k - 18.0) / 18.0
    s = uint.s
    g = s ** gamma * np.exp(2.0 * e.alpha * s) * uint.values
    inner = np.zeros_like(s)
    for i in range(s.size - 2, -1, -1):
        inner[i] = inner[i + 1] + 0.5 * (g[i] + g[i + 1]) * (s[i + 1] - s[i])
    kern, _ = quad(lambda x: (s[-1] + x) ** gamma
                   * math.exp(2.0 * e.alpha * (s[-1] + x)), 0.0, np.inf)
    tail_est = uint.values[-1] * kern
    tail_bound = abs(uint.values[-1]) * kern
    return FunctionalSeries(
        name=f"U{k}", s=s, values=inner + tail_est,
        tail_bound=np.full_like(s, tail_bound),
        meta={"k": k, "s_max": float(s[-1])})


def script_f_series(mser: FunctionalSeries, user: FunctionalSeries, k: int,
                    sigma: float, e: Exponents) -> FunctionalSeries:
    if not np.array_equal(mser.s, user.s):
        raise ValueError("M and U series must share the s grid")
    gamma = (k - 18.0) / 18.0
    P = mser.s ** gamma * np.exp(2.0 * e.alpha * mser.s) * mser.values
    vals = P + sigma * user.values
    return FunctionalSeries(name=f"scriptF{k}", s=mser.s, values=vals,
                            tail_bound=None if user.tail_bound is None
                            else sigma * user.tail_bound,
                            meta={"k": k, "sigma": sigma})


def f_family(snaps, rules, e: Exponents, k: int, sigma: float = 1.0,
             enforce_span: bool = True) -> dict:
    """The spec's combined ladder builder: F_k plus scriptF_k and parts."""
    f0 = f0_series(snaps, rules, e)
    out = {"F0": f0, "M": m_series(snaps, rules, e)}
    uint = u_integrand_series(snaps, rules, e)
    if k >= 1:
        out[f"F{k}"] = f_ladder(f0, k, e, enforce_span=enforce_span)
        out[f"U{k}"] = u_series(uint, k, e)
        out[f"scriptF{k}"] = script_f_series(out["M"], out[f"U{k}"], k, sigma, e)
    return out


# ---------------------------------------------------------------------------
# physical-space quantities near the blow-up surface

def _radial_integral(vals: np.ndarray, grid, R: float, N: int) -> float:
    """int_0^R vals(r) r^(N-1) dr on the grid, trapezoid + partial last cell.

    The partial cell keeps the r^(N-1) factor exact (sub-sampled) and only
    linearises vals, so small R << dr is not overestimated.
    """
    r = grid.nodes
    R = min(R, r[-1])
    f = vals * r ** (N - 1.0)
    i = int(np.searchsorted(r, R))
    if i == 0:
        return 0.0
    total = float(np.trapezoid(f[:i], r[:i]))
    if i < r.size and R > r[i - 1]:
        r0, r1 = r[i - 1], r[i]
        rs = np.linspace(r0, R, 5)
        vi = vals[i - 1] + (vals[i] - vals[i - 1]) * (rs - r0) / (r1 - r0)
        total += float(np.trapezoid(vi * rs ** (N - 1.0), rs))
    return total


@dataclass
class TheoremReport:
    series: dict
    sup: dict
    meta: dict


def theorem_quantities(traj, e: Exponents, T0: float, q: float,
                       n_times: int = 40, tau_hi_frac: float = 0.45) -> TheoremReport:
    """Log-weighted cone quantities monitored near the blow-up surface.

    Returns series (indexed by s = -log(T0 - t)) of
      cone_gradient: |log tau|^q int_t^((t+T0)/2) int_{B(0,T0-x)} (|grad u|^2+u_t^2)
      boundary_energy: |log tau|^q (tau/2) int_{B(0,tau)} (weighted energy terms)
      scaled_l2: |log tau|^q tau^(-(p-1)N/(p+3)) int_{B(0,tau)} u^2
      lower_bound: the scaling-invariant norm combination with its empirical floor
    plus suprema and a power fit of scaled_l2 after removing the log weight.
    Radial center x0 = 0 only (the solver evolves radial data).
    """
    if traj.status != "blowup":
        raise ValueError("theorem quantities need a blow-up trajectory")
    if q < 0:
        raise ValueError("q must be >= 0")
    N, p = e.N, e.p
    sa = surface_area(N)
    ft = traj.frames_t
    taus = T0 - ft
    good = taus > 0
    ft, taus = ft[good], taus[good]
    fu = traj.frames_u[good]
    fut = traj.frames_ut[good]
    dr = traj.grid.dr

    # per-frame gradient cache and the cone energy G(t) = int_{B(0,T0-t)}(...)
    fur = np.gradient(fu, dr, axis=1)
    Gt = np.array([sa * _radial_integral(fur[i] ** 2 + fut[i] ** 2, traj.grid,
                                         taus[i], N)
                   for i in range(ft.size)])

    # stay a few cells above the grid scale: the cone integral is meaningless
    # once the ball radius drops below the mesh
    tau_lo = max(taus[-1] * 4.0, 10.0 * dr)
    tau_hi = taus[0] * tau_hi_frac if taus[0] * tau_hi_frac > tau_lo else taus[2]
    if tau_hi > traj.grid.r_max:
        raise ValueError(f"cone of radius {tau_hi} exits the grid "
                         f"(r_max={traj.grid.r_max})")
    targets = np.geomspace(tau_hi, tau_lo, n_times)
    idx = np.unique(np.searchsorted(-taus, -targets))
    idx = idx[idx < ft.size - 1]

    logw = np.abs(np.log(taus[idx])) ** q
    exps_l2 = -(p - 1.0) * N / (p + 3.0)

    cone, bound_e, sl2, lower = [], [], [], []
    for j, i in enumerate(idx):
        t_i, tau_i = ft[i], taus[i]
        # (i) time integral over [t, (t+T0)/2] of the cone gradient energy
        t_half = 0.5 * (t_i + T0)
        sel = (ft >= t_i) & (ft <= t_half)
        cone.append(logw[j] * float(np.trapezoid(Gt[sel], ft[sel])))
        # (ii) boundary-energy expression on B(0, tau)
        vals = (fur[i] ** 2 * (1.0 - np.minimum(traj.grid.nodes / tau_i, 1.0) ** 2)
                + fut[i] ** 2 - np.abs(fu[i]) ** (p + 1.0) / (p + 1.0))
        bound_e.append(logw[j] * 0.5 * tau_i * sa
                       * _radial_integral(vals, traj.grid, tau_i, N))
        # (iii) scaled L2 norm
        l2 = sa * _radial_integral(fu[i] ** 2, traj.grid, tau_i, N)
        sl2.append(logw[j] * tau_i ** exps_l2 * l2)
        # (iv) lower-bound combination
        nu = math.sqrt(l2)
        nut = math.sqrt(sa * _radial_integral(fut[i] ** 2, traj.grid, tau_i, N))
        nur = math.sqrt(sa * _radial_integral(fur[i] ** 2, traj.grid, tau_i, N))
        lower.append(tau_i ** (e.two_over_pm1 - 0.5 * N) * nu
                     + tau_i ** (e.two_over_pm1 + 1.0 - 0.5 * N) * (nut + nur))

    s = -np.log(taus[idx])
    series = {
        "cone_gradient": FunctionalSeries("cone_gradient", s, np.array(cone)),
        "boundary_energy": FunctionalSeries("boundary_energy", s, np.array(bound_e)),
        "scaled_l2": FunctionalSeries("scaled_l2", s, np.array(sl2)),
        "lower_bound": FunctionalSeries("lower_bound", s, np.array(lower)),
    }
    sup = {k: float(np.max(np.abs(v.values))) for k, v in series.items()}

    # slope of the pure power part of (iii): remove the known log weight
    tau_sel = taus[idx]
    pure = np.array(sl2) / np.where(logw > 0, logw, 1.0)
    if np.all(pure > 0):
        slope = float(np.polyfit(np.log(tau_sel), np.log(pure), 1)[0])
    else:
        slope = 0.0
    expected = 4.0 * (N / (p + 3.0) - 1.0 / (p - 1.0))
    meta = {"q": q, "power_fit_slope": slope, "expected_power": expected,
            "lower_bound_floor": float(np.min(lower))}
    return TheoremReport(series=series, sup=sup, meta=meta)
