"""Self-similar change of variables, and closed-form test fields on the ball.

Two sources of profiles on the unit ball:

* the transform of a physical trajectory,
      w(y, s) = tau^(2/(p-1)) u(x0 + y tau, t),   tau = T0 - t,  s = -log tau,
  with ds w obtained from the chain rule
      ds w = -(2/(p-1)) w + tau^(2/(p-1)+1) (dt u - y . grad_x u);
  the chain-rule formula is validated against a finite-difference-in-s
  oracle in the test suite before anything downstream trusts it;

* static test fields w = (1-|y|^2)^a q(y) with polynomial q (optionally
  carrying a planar angular mode via the harmonic factor Re((y1+i y2)^m)),
  whose gradient, Hessian and the Pohozaev divergence
      div(rho_eps grad w - rho_eps (y.grad w) y)
        = rho_eps (Lap w - y^T H y - (N+1+2 eps) y.grad w)
  are evaluated in closed form, so identity checks carry no numerical
  differentiation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .core import Exponents
from .quadrature import BallQuadrature, SphereRule, grad_decompose


# ---------------------------------------------------------------------------
# polynomial machinery

class PolyField:
    """Multivariate polynomial sum_k c_k y^k with closed-form derivatives."""

    def __init__(self, N: int, coeffs: dict):
        self.N = N
        self.coeffs = {tuple(int(i) for i in k): float(c)
                       for k, c in coeffs.items() if c != 0.0}
        for k in self.coeffs:
            if len(k) != N or any(i < 0 for i in k):
                raise ValueError(f"bad multi-index {k} for N={N}")

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.coeffs), default=0)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[0])
        for k, c in self.coeffs.items():
            term = np.full(pts.shape[0], c)
            for d, kd in enumerate(k):
                if kd:
                    term = term * pts[:, d] ** kd
            out += term
        return out

    def grad(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.zeros_like(pts)
        for k, c in self.coeffs.items():
            for d, kd in enumerate(k):
                if kd == 0:
                    continue
                term = np.full(pts.shape[0], c * kd)
                for d2, kd2 in enumerate(k):
                    e = kd2 - 1 if d2 == d else kd2
                    if e:
                        term = term * pts[:, d2] ** e
                out[:, d] += term
        return out

    def hess(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        K, N = pts.shape
        out = np.zeros((K, N, N))
        for k, c in self.coeffs.items():
            for d1 in range(N):
                if k[d1] == 0:
                    continue
                for d2 in range(N):
                    kk = list(k)
                    kk[d1] -= 1
                    if kk[d2] == 0:
                        continue
                    fac = c * k[d1] * kk[d2]
                    kk[d2] -= 1
                    term = np.full(K, fac)
                    for d3, e in enumerate(kk):
                        if e:
                            term = term * pts[:, d3] ** e
                    out[:, d1, d2] += term
        return out

    def times(self, other: "PolyField") -> "PolyField":
        coeffs: dict = {}
        for k1, c1 in self.coeffs.items():
            for k2, c2 in other.coeffs.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                coeffs[k] = coeffs.get(k, 0.0) + c1 * c2
        return PolyField(self.N, coeffs)


def harmonic_poly(m: int) -> PolyField:
    """Re((y1 + i y2)^m) as a planar polynomial; r^m cos(m theta)."""
    coeffs = {}
    for j in range(0, m + 1, 2):
        coeffs[(m - j, j)] = math.comb(m, j) * (-1.0) ** (j // 2)
    if m == 0:
        coeffs = {(0, 0): 1.0}
    return PolyField(2, coeffs)


class WeightedPoly:
    """w(y) = (1-|y|^2)^a q(y) with analytic gradient and Hessian.

    Values (and with a >= 1, gradients) extend continuously to |y| = 1;
    Hessians are only requested at interior nodes.
    """

    def __init__(self, N: int, a: float, poly: PolyField):
        if a < 0:
            raise ValueError(f"boundary exponent must be >= 0, got a={a}")
        self.N = N
        self.a = float(a)
        self.poly = poly

    def value(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        om = 1.0 - np.sum(pts ** 2, axis=1)
        P = np.ones_like(om) if self.a == 0.0 else np.clip(om, 0.0, None) ** self.a
        return P * self.poly(pts)

    def grad(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        om = 1.0 - np.sum(pts ** 2, axis=1)
        q = self.poly(pts)
        gq = self.poly.grad(pts)
        a = self.a
        if a == 0.0:
            return gq
        P = om ** a
        return P[:, None] * gq - (2.0 * a) * (om ** (a - 1.0) * q)[:, None] * pts

    def hess(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        K, N = pts.shape
        om = 1.0 - np.sum(pts ** 2, axis=1)
        q = self.poly(pts)
        gq = self.poly.grad(pts)
        Hq = self.poly.hess(pts)
        a = self.a
        if a == 0.0:
            return Hq
        P = om ** a
        Pm1 = om ** (a - 1.0)
        eye = np.eye(N)
        out = P[:, None, None] * Hq
        out -= (2.0 * a) * Pm1[:, None, None] * (
            pts[:, :, None] * gq[:, None, :] + gq[:, :, None] * pts[:, None, :]
            + q[:, None, None] * eye[None, :, :])
        if a != 1.0:
            Pm2 = om ** (a - 2.0)
            out += (4.0 * a * (a - 1.0)) * (Pm2 * q)[:, None, None] * (
                pts[:, :, None] * pts[:, None, :])
        return out


# ---------------------------------------------------------------------------
# snapshots

@dataclass
class NodeSample:
    """Snapshot fields sampled at one rule's nodes."""

    points: np.ndarray
    w: np.ndarray
    ws: np.ndarray
    grad: np.ndarray
    grad_r: np.ndarray
    grad_theta: np.ndarray

    @property
    def r2(self) -> np.ndarray:
        return np.sum(self.points ** 2, axis=1)

    @property
    def ydg(self) -> np.ndarray:
        return np.sum(self.points * self.grad, axis=1)

    @property
    def g2(self) -> np.ndarray:
        return np.sum(self.grad ** 2, axis=1)

    @property
    def gr2(self) -> np.ndarray:
        return np.sum(self.grad_r ** 2, axis=1)

    @property
    def gth2(self) -> np.ndarray:
        return np.sum(self.grad_theta ** 2, axis=1)


class SimilaritySnapshot:
    """Profile (w, ds w, grad w) on the unit ball at similarity time s.

    Carries samples on a primary rule plus (when available) an evaluator so
    the same profile can be resampled on rules built for other weight
    exponents; samples are cached per rule.
    """

    def __init__(self, s: float, x0, T0: float, rule: BallQuadrature,
                 w: np.ndarray, ws: np.ndarray, grad: np.ndarray,
                 evaluator=None):
        self.s = float(s)
        self.x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if self.x0.size == 1 and rule.N > 1:
            x0v = np.zeros(rule.N)
            x0v[0] = self.x0[0]
            self.x0 = x0v
        self.T0 = float(T0)
        self.rule = rule
        grad_r, grad_theta = grad_decompose(rule.points, grad)
        self._samples = {id(rule): NodeSample(rule.points, w, ws, grad,
                                              grad_r, grad_theta)}
        self.evaluator = evaluator

    @property
    def base(self) -> NodeSample:
        return self._samples[id(self.rule)]

    @property
    def w(self):
        return self.base.w

    @property
    def ws(self):
        return self.base.ws

    @property
    def grad(self):
        return self.base.grad

    @property
    def grad_r(self):
        return self.base.grad_r

    @property
    def grad_theta(self):
        return self.base.grad_theta

    def on(self, rule: BallQuadrature) -> NodeSample:
        key = id(rule)
        if key not in self._samples:
            if self.evaluator is None:
                raise ValueError(
                    "snapshot has no evaluator; it can only be used on its own rule")
            w, ws, grad = self.evaluator.fields(rule.points)
            grad_r, grad_theta = grad_decompose(rule.points, grad)
            self._samples[key] = NodeSample(rule.points, w, ws, grad,
                                            grad_r, grad_theta)
        return self._samples[key]

    def boundary(self, sph: SphereRule):
        """(w, ds w) traces on |y| = 1."""
        if self.evaluator is None:
            raise ValueError("snapshot has no evaluator; no boundary trace")
        return self.evaluator.trace(sph.points)


# ---------------------------------------------------------------------------
# static test fields

@dataclass
class TestField:
    """w = (1-|y|^2)^a q(y), optionally with a planar cos(m theta) mode.

    The angular mode folds the harmonic polynomial r^m cos(m theta) into q,
    keeping everything polynomial (hence smooth at the origin).  An optional
    second component plays the role of ds w for static lemma checks.
    """

    N: int
    a: float
    poly: PolyField
    m: int = 0
    ws_a: float = 0.0
    ws_poly: PolyField | None = None

    __test__ = False  # not a pytest class, despite the name

    def __post_init__(self):
        if self.poly.degree > 6:
            raise ValueError(f"polynomial degree {self.poly.degree} > 6")
        if self.m and self.N != 2:
            raise ValueError("angular modes are planar (N = 2) only")

    def parts(self):
        q = self.poly.times(harmonic_poly(self.m)) if self.m else self.poly
        w_part = WeightedPoly(self.N, self.a, q)
        ws_part = (WeightedPoly(self.N, self.ws_a, self.ws_poly)
                   if self.ws_poly is not None else None)
        return w_part, ws_part


class StaticSnapshot(SimilaritySnapshot):
    """Snapshot backed by closed forms; also exposes Hessian-level data."""

    def __init__(self, tf: TestField, rule: BallQuadrature, s: float = 0.0,
                 x0=0.0, T0: float = 1.0):
        self.field_spec = tf
        self.w_part, self.ws_part = tf.parts()
        pts = rule.points
        w = self.w_part.value(pts)
        grad = self.w_part.grad(pts)
        ws = self.ws_part.value(pts) if self.ws_part else np.zeros_like(w)
        super().__init__(s=s, x0=x0, T0=T0, rule=rule, w=w, ws=ws, grad=grad,
                         evaluator=self)

    # evaluator protocol
    def fields(self, pts: np.ndarray):
        w = self.w_part.value(pts)
        grad = self.w_part.grad(pts)
        ws = self.ws_part.value(pts) if self.ws_part else np.zeros_like(w)
        return w, ws, grad

    def trace(self, pts: np.ndarray):
        w = self.w_part.value(pts)
        ws = self.ws_part.value(pts) if self.ws_part else np.zeros_like(w)
        return w, ws

    def at_s(self, s: float) -> "StaticSnapshot":
        other = StaticSnapshot.__new__(StaticSnapshot)
        other.__dict__.update(self.__dict__)
        other.s = float(s)
        return other

    def hess(self, pts: np.ndarray) -> np.ndarray:
        return self.w_part.hess(pts)

    def ws_grad(self, pts: np.ndarray) -> np.ndarray:
        if self.ws_part is None:
            return np.zeros_like(np.atleast_2d(pts), dtype=float)
        return self.ws_part.grad(pts)

    def pohozaev_div_over_rho(self, pts: np.ndarray, eps: float) -> np.ndarray:
        """div(rho_eps grad w - rho_eps (y.grad w) y) / rho_eps, analytically.

        Equals Lap w - y^T H y - (N+1+2 eps) y.grad w; the 1/(1-|y|^2)
        factor from grad rho_eps cancels exactly against the multiplier
        structure, so no boundary-singular term ever appears.
        """
        pts = np.atleast_2d(pts)
        H = self.hess(pts)
        grad = self.w_part.grad(pts)
        lap = np.trace(H, axis1=1, axis2=2)
        yHy = np.einsum("ki,kij,kj->k", pts, H, pts)
        ydg = np.sum(pts * grad, axis=1)
        return lap - yHy - (self.field_spec.N + 1.0 + 2.0 * eps) * ydg

    def eq_rhs(self, pts: np.ndarray, e: Exponents) -> np.ndarray:
        """What d2s w would be if (w, ds w) evolved under the profile equation.

        Used by the frozen-flow oracle that certifies every d/ds identity
        independently of any PDE solve.
        """
        pts = np.atleast_2d(pts)
        w = self.w_part.value(pts)
        grad = self.w_part.grad(pts)
        H = self.hess(pts)
        ws = self.ws_part.value(pts) if self.ws_part else np.zeros_like(w)
        ws_grad = self.ws_grad(pts)
        lap = np.trace(H, axis1=1, axis2=2)
        yHy = np.einsum("ki,kij,kj->k", pts, H, pts)
        ydg = np.sum(pts * grad, axis=1)
        ydgs = np.sum(pts * ws_grad, axis=1)
        p, N, al = e.p, e.N, e.alpha
        g1 = (p + 1.0) / (p - 1.0) ** 2
        return (lap - yHy - (N + 1.0 + 2.0 * al) * ydg
                - 2.0 * g1 * w + np.abs(w) ** (p - 1.0) * w
                - (N + 2.0 * al) * ws - 2.0 * ydgs)


def make_test_field(tf: TestField, rule: BallQuadrature, s: float = 0.0) -> StaticSnapshot:
    """Instantiate a test field as a snapshot with analytic derivatives."""
    if rule.N != tf.N:
        raise ValueError(f"rule dimension {rule.N} != field dimension {tf.N}")
    return StaticSnapshot(tf, rule, s=s)


def constant_field(N: int, value: float) -> TestField:
    return TestField(N=N, a=0.0, poly=PolyField(N, {(0,) * N: value}))


# ---------------------------------------------------------------------------
# transform of physical data

class _TransformEvaluator:
    """Evaluate (w, ds w, grad w) from radial (u, ut) splines at one time."""

    def __init__(self, e: Exponents, x0: np.ndarray, tau: float,
                 u_spline, ut_spline):
        self.e = e
        self.x0 = x0
        self.tau = tau
        self.u_spline = u_spline
        self.ur_spline = u_spline.derivative()
        self.ut_spline = ut_spline

    def _phys(self, pts: np.ndarray):
        X = self.x0[None, :] + self.tau * np.atleast_2d(pts)
        R = np.sqrt(np.sum(X ** 2, axis=1))
        return X, R

    def fields(self, pts: np.ndarray):
        pts = np.atleast_2d(pts)
        X, R = self._phys(pts)
        e = self.e
        lam = self.tau ** e.two_over_pm1
        uval = self.u_spline(R)
        urval = self.ur_spline(R)
        utval = self.ut_spline(R)
        # grad_x u = u_r(R) X / R; u_r(0) = 0 for smooth radial data
        coef = np.divide(urval, R, out=np.zeros_like(R), where=R > 1e-300)
        gradx = coef[:, None] * X
        w = lam * uval
        grad = (lam * self.tau) * gradx
        ydgx = np.sum(pts * gradx, axis=1)
        ws = -e.two_over_pm1 * w + (lam * self.tau) * (utval - ydgx)
        return w, ws, grad

    def trace(self, pts: np.ndarray):
        w, ws, _ = self.fields(pts)
        return w, ws


def to_similarity(state, grid, e: Exponents, x0, T0: float,
                  rule: BallQuadrature) -> SimilaritySnapshot:
    """Transform one PhysicalState into a SimilaritySnapshot.

    Requires t < T0 and the closed ball {x0 + y tau : |y| <= 1} inside the
    radial grid.  Radial cubic splines carry the off-node evaluation; the
    left end is clamped to u_r(0) = 0 (smooth even data).
    """
    tau = T0 - state.t
    if tau <= 0:
        raise ValueError(f"state time t={state.t} is not before T0={T0}")
    x0v = np.zeros(e.N)
    x0flat = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0flat.size == 1:
        x0v[0] = x0flat[0]
    elif x0flat.size == e.N:
        x0v = x0flat.astype(float)
    else:
        raise ValueError(f"x0 must be scalar or length {e.N}")
    if np.sqrt(np.sum(x0v ** 2)) + tau > grid.r_max * (1.0 + 1e-12):
        raise ValueError(
            f"similarity ball of radius {tau} at |x0|={np.linalg.norm(x0v)} "
            f"exits the grid (r_max={grid.r_max})")
    u_spline = CubicSpline(grid.nodes, state.u, bc_type=((1, 0.0), "not-a-knot"))
    ut_spline = CubicSpline(grid.nodes, state.ut, bc_type=((1, 0.0), "not-a-knot"))
    ev = _TransformEvaluator(e, x0v, tau, u_spline, ut_spline)
    w, ws, grad = ev.fields(rule.points)
    return SimilaritySnapshot(s=-math.log(tau), x0=x0v, T0=T0, rule=rule,
                              w=w, ws=ws, grad=grad, evaluator=ev)


def trajectory_to_w(traj, e: Exponents, x0, T0: float, s_grid,
                    rule: BallQuadrature) -> list[SimilaritySnapshot]:
    """Time-interpolated snapshots at the requested s values.

    Every T0 - e^(-s) must be bracketed by stored trajectory frames
    (cubic interpolation in t); otherwise the uncovered s is reported.
    """
    out = []
    for s in np.atleast_1d(np.asarray(s_grid, dtype=float)):
        t = T0 - math.exp(-s)
        try:
            state = traj.sample_state(t)
        except ValueError as exc:
            raise ValueError(f"s={s} requires t={t}, outside coverage: {exc}") from exc
        out.append(to_similarity(state, traj.grid, e, x0, T0, rule))
    return out


def inverse_map(snap: SimilaritySnapshot, e: Exponents):
    """u values on the ball image reconstructed from the snapshot."""
    tau = math.exp(-snap.s)
    return tau ** (-e.two_over_pm1) * snap.w
