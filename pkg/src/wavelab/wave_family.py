"""Periodic traveling waves of the generalized BBM equation by quadrature.

A wave with speed ``c`` and integration constants ``(a, E)`` satisfies

    (c/2) u_x**2 + V(u; a, c) = E,    V(u) = F(u) - (c-1)/2 u**2 - a u,

so it oscillates in a well of the effective potential ``V`` between two
simple turning points ``u_minus < u_plus``.  Period, mass, momentum and the
classical action are one-dimensional integrals over ``[u_minus, u_plus]``
with inverse square-root endpoint singularities; the substitution
``u = u_minus + (u_plus - u_minus) sin(theta)**2`` removes both, leaving a
smooth integrand for Gauss-Legendre quadrature.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .errors import (
    ClosureFailure,
    DegenerateTurningPoint,
    NoBracket,
    NoOrbit,
    QuadratureNoConvergence,
    StencilCrossesSeparatrix,
    WaveLabError,
)

PARAM_NAMES = ("a", "E", "c")
FUNCTIONAL_NAMES = ("T", "M", "P")

QUAD_RTOL = 1e-10
QUAD_NMIN = 32
QUAD_NMAX = 2**14
ODE_RTOL = 1e-12
DEGENERACY_TOL = 1e-8
FD_REL_STEP = 1e-5
FD_SHRINK_TRIES = 3
FD_CONSISTENCY = 1e-3
FD_JUMP = 0.1


# --------------------------------------------------------------------------
# nonlinearities


def _power(u, k):
    return np.power(u, k) if k != 0 else np.ones_like(np.asarray(u, dtype=float))


def _pow_f(u, p, s):
    return s * _power(u, p + 1)


def _pow_df(u, p, s):
    return s * (p + 1) * _power(u, p)


def _pow_d2f(u, p, s):
    return s * (p + 1) * p * _power(u, p - 1)


def _pow_F(u, p, s):
    return s * _power(u, p + 2) / (p + 2)


@dataclass(frozen=True)
class Nonlinearity:
    """Evaluators for ``f``, ``f'``, ``f''`` and the antiderivative ``F`` with F(0)=0.

    All callables must accept numpy arrays.  Use module-level functions or
    ``functools.partial`` objects if the instance has to cross a process
    boundary.
    """

    f: Callable
    df: Callable
    d2f: Callable
    F: Callable
    label: str = "custom"
    F_coeffs: tuple | None = None  # ascending coefficients when F is a polynomial

    def check(self, samples=None, h=1e-6, tol=1e-6) -> float:
        """Return max |F'(u) - f(u)| by central differences; raise if F(0) != 0."""
        if float(self.F(np.array(0.0))) != 0.0:
            raise ValueError(f"{self.label}: F(0) must vanish")
        u = np.linspace(-1.5, 1.5, 31) if samples is None else np.asarray(samples, float)
        fd = (self.F(u + h) - self.F(u - h)) / (2 * h)
        err = float(np.max(np.abs(fd - self.f(u)) / (1 + np.abs(self.f(u)))))
        if err > tol:
            raise ValueError(f"{self.label}: F is not an antiderivative of f ({err:.2e})")
        return err


def power_law(p: float, normalized: bool = False) -> Nonlinearity:
    """``f(u) = u**(p+1)``, or ``u**(p+1)/(p+1)`` when ``normalized``."""
    s = 1.0 / (p + 1) if normalized else 1.0
    tag = f"u^{p + 1:g}/{p + 1:g}" if normalized else f"u^{p + 1:g}"
    coeffs = None
    if float(p).is_integer() and p >= 0:
        coeffs = tuple([0.0] * (int(p) + 2) + [s / (p + 2)])
    return Nonlinearity(
        f=functools.partial(_pow_f, p=p, s=s),
        df=functools.partial(_pow_df, p=p, s=s),
        d2f=functools.partial(_pow_d2f, p=p, s=s),
        F=functools.partial(_pow_F, p=p, s=s),
        label=tag,
        F_coeffs=coeffs,
    )


def bbm() -> Nonlinearity:
    return power_law(1)


def mbbm() -> Nonlinearity:
    return power_law(2)


# --------------------------------------------------------------------------
# parameters and potential


@dataclass(frozen=True)
class WaveParams:
    a: float
    E: float
    c: float
    branch_hint: float

    def __post_init__(self):
        if not self.c > 1:
            raise NoOrbit(f"wave speed must exceed 1, got c={self.c}")

    def replace(self, **kw) -> "WaveParams":
        d = dict(a=self.a, E=self.E, c=self.c, branch_hint=self.branch_hint)
        d.update(kw)
        return WaveParams(**d)

    def get(self, name: str) -> float:
        return getattr(self, name)


def eval_potential(u, params: WaveParams, nl: Nonlinearity):
    c = params.c
    return nl.F(u) - 0.5 * (c - 1) * u * u - params.a * u


def potential_prime(u, params: WaveParams, nl: Nonlinearity):
    return nl.f(u) - (params.c - 1) * u - params.a


def potential_second(u, params: WaveParams, nl: Nonlinearity):
    return nl.df(u) - (params.c - 1)


# --------------------------------------------------------------------------
# turning points


@dataclass(frozen=True)
class TurningPoints:
    u_minus: float
    u_plus: float
    v_prime_at_minus: float
    v_prime_at_plus: float
    simple: tuple = (True, True)

    @property
    def width(self) -> float:
        return self.u_plus - self.u_minus


def _first_sign_change(g, dg, start, direction, w0, w_cap, npts=256):
    """Locate the first root of ``g`` leaving ``start`` in ``direction``.

    Besides sampled sign changes, every sampled interval where ``dg``
    changes sign has its interior extremum checked, so a forbidden gap
    narrower than the sample spacing is not stepped over.
    """
    width = w0
    while width <= w_cap:
        grid = start + direction * np.linspace(0.0, width, npts + 1)
        vals = g(grid)
        bad = np.nonzero(~(vals > 0))[0]
        last = bad[0] if bad.size else grid.size
        slope = dg(grid[:last])
        for i in np.nonzero(slope[:-1] * slope[1:] < 0)[0]:
            lo, hi = sorted((grid[i], grid[i + 1]))
            uc = brentq(dg, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
            if not g(uc) > 0:
                a, b = sorted((grid[i], uc))
                return uc if g(uc) == 0 else brentq(g, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
        if bad.size:
            k = bad[0]
            lo, hi = grid[k - 1], grid[k]
            if vals[k] == 0:
                return hi
            return brentq(g, min(lo, hi), max(lo, hi), xtol=1e-15, rtol=1e-15, maxiter=200)
        width *= 2.0
    raise NoBracket(f"no turning point within {w_cap:g} of u={start:g}")


def _polish(g, dg, r):
    for _ in range(3):
        d = dg(r)
        if d == 0:
            break
        step = g(r) / d
        if not np.isfinite(step) or abs(g(r - step)) > abs(g(r)):
            break
        r -= step
    return r


def find_turning_points(params: WaveParams, nl: Nonlinearity, w_cap: float = 1e6) -> TurningPoints:
    """Consecutive simple roots of ``E - V`` bracketing ``params.branch_hint``."""

    def g(u):
        return params.E - eval_potential(u, params, nl)

    def dg(u):
        return -potential_prime(u, params, nl)

    hint = float(params.branch_hint)
    scale = max(1.0, abs(hint))
    g0 = float(g(hint))
    if not g0 > 0:
        vp = abs(float(potential_prime(hint, params, nl)))
        if abs(g0) <= DEGENERACY_TOL * max(1.0, abs(params.E)) and vp <= DEGENERACY_TOL * scale:
            raise DegenerateTurningPoint(
                f"E={params.E:g} sits at a critical level of V at u={hint:g}; the orbit is an equilibrium"
            )
        raise NoOrbit(f"branch_hint u={hint:g} is not classically allowed (E - V = {g0:.3e})")

    w0 = 1e-2 * scale
    um = _polish(g, dg, _first_sign_change(g, dg, hint, -1.0, w0, w_cap))
    up = _polish(g, dg, _first_sign_change(g, dg, hint, +1.0, w0, w_cap))
    vm = float(potential_prime(um, params, nl))
    vp = float(potential_prime(up, params, nl))

    tol = DEGENERACY_TOL * max(1.0, abs(params.E), up - um)
    simple = (abs(vm) > tol, abs(vp) > tol)
    if not all(simple):
        raise DegenerateTurningPoint(
            f"turning point with |V'| below {tol:.1e} (V'(u-)={vm:.3e}, V'(u+)={vp:.3e}); orbit at separatrix"
        )
    probe = um + (up - um) * np.linspace(0.02, 0.98, 49)
    if np.any(g(probe) <= 0):
        raise NoOrbit("E - V changes sign inside the bracket")
    return TurningPoints(float(um), float(up), vm, vp, simple)


# --------------------------------------------------------------------------
# conserved quantities


@dataclass(frozen=True)
class ConservedSet:
    T: float
    M: float
    P: float
    K: float
    mu2: float
    err: dict = field(default_factory=dict)
    n_nodes: int = 0
    turning: TurningPoints | None = None


@functools.lru_cache(maxsize=32)
def _theta_rule(n: int):
    x, w = roots_legendre(n)
    theta = 0.25 * np.pi * (x + 1.0)
    return theta, 0.25 * np.pi * w


def reduced_radicand(u, params: WaveParams, nl: Nonlinearity, tp: TurningPoints):
    """G(u) with E - V(u) = (u - u_minus)(u_plus - u) G(u); positive on the orbit.

    For polynomial F the two roots are divided out exactly (synthetic
    division), which keeps G accurate right up to the turning points.
    """
    u = np.asarray(u, dtype=float)
    if nl.F_coeffs is not None:
        r = -np.array(nl.F_coeffs, dtype=float)
        r = np.pad(r, (0, max(0, 3 - r.size)))
        r[0] += params.E
        r[1] += params.a
        r[2] += 0.5 * (params.c - 1)
        # R(u) / ((u - u_minus)(u - u_plus)) = -G(u); numpy wants descending order
        q, _ = np.polydiv(r[::-1], np.poly([tp.u_minus, tp.u_plus]))
        return -np.polyval(q, u)
    R = params.E - eval_potential(u, params, nl)
    return R / ((u - tp.u_minus) * (tp.u_plus - u))


def _orbit_sums(params, nl, tp, n):
    theta, w = _theta_rule(n)
    s, co = np.sin(theta), np.cos(theta)
    L = tp.u_plus - tp.u_minus
    u = tp.u_minus + L * s * s
    G = reduced_radicand(u, params, nl, tp)
    if np.any(G <= 0):
        raise NoOrbit("E - V is not positive between the turning points")
    rg = np.sqrt(G)
    inv = 2.0 / rg                          # du / sqrt(E - V)
    sq = 2.0 * L * L * (s * co) ** 2 * rg    # sqrt(E - V) du
    i0 = w @ inv
    i1 = w @ (u * inv)
    i2 = w @ (u * u * inv)
    sr = w @ sq
    c = params.c
    T = np.sqrt(2 * c) * i0
    M = np.sqrt(2 * c) * i1
    P = np.sqrt(c / 2) * i2 + np.sqrt(2 / c) * sr
    K = 2 * np.sqrt(2 / c) * sr
    return np.array([T, M, P, K, 2.0 * i2])


def conserved_set(params: WaveParams, nl: Nonlinearity, n: int | None = None,
                  rtol: float = QUAD_RTOL, nmax: int = QUAD_NMAX) -> ConservedSet:
    """Period, mass, momentum and action of the wave selected by ``params``.

    With ``n`` given, a single fixed-order rule is used (needed for finite
    differences, where the node count must not change across the stencil).
    """
    tp = find_turning_points(params, nl)
    umax = max(abs(tp.u_minus), abs(tp.u_plus), 1.0)
    if n is not None:
        q = _orbit_sums(params, nl, tp, n)
        return ConservedSet(*map(float, q), err={}, n_nodes=n, turning=tp)

    k = QUAD_NMIN
    prev = _orbit_sums(params, nl, tp, k)
    while True:
        k *= 2
        if k > nmax:
            raise QuadratureNoConvergence(f"quadrature did not settle with {nmax} nodes")
        cur = _orbit_sums(params, nl, tp, k)
        T = abs(cur[0])
        scale = np.array([T, T * umax, T * umax**2, abs(cur[3]), T * umax**2])
        delta = np.abs(cur - prev)
        if np.all(delta <= rtol * np.maximum(np.abs(cur), scale)):
            names = ("T", "M", "P", "K", "mu2")
            return ConservedSet(*map(float, cur), err=dict(zip(names, map(float, delta))),
                                n_nodes=k, turning=tp)
        prev = cur


# --------------------------------------------------------------------------
# gradients


@dataclass(frozen=True)
class GradientTable:
    """Partials of (T, M, P) (rows) with respect to (a, E, c) (columns)."""

    values: np.ndarray
    method: str = "finite_difference"
    base: ConservedSet | None = None
    steps: tuple = ()
    c: float = float("nan")

    def get(self, g: str, x: str) -> float:
        return float(self.values[FUNCTIONAL_NAMES.index(g), PARAM_NAMES.index(x)])

    def __getattr__(self, name):
        # T_a, M_E, P_c, ...
        if len(name) == 3 and name[1] == "_" and name[0] in "TMP" and name[2] in "aEc":
            return self.get(name[0], name[2])
        raise AttributeError(name)

    def _pairs(self):
        T = self.base.T if self.base is not None else float("nan")
        c = self.c
        return {
            "T_a-M_E": (self.T_a, self.M_E),
            "T_c-P_E": (self.T_c, self.P_E),
            "M_c-P_a": (self.M_c, self.P_a),
            "T_c-(2P_E+T/c)": (self.T_c, 2 * self.P_E + T / c),
            "M_c-(2P_a+T/c)": (self.M_c, 2 * self.P_a + T / c),
        }

    @property
    def residuals(self) -> dict:
        """Identity residuals; the first three follow from grad K, the last two are the alternatives."""
        return {k: lhs - rhs for k, (lhs, rhs) in self._pairs().items()}

    def relative_residuals(self) -> dict:
        out = {}
        for k, (lhs, rhs) in self._pairs().items():
            out[k] = abs(lhs - rhs) / max(abs(lhs), abs(rhs), abs(self.T_E))
        return out


def _stencil_value(params, nl, n, hint, base_tp):
    try:
        cs = conserved_set(params.replace(branch_hint=hint), nl, n=n)
    except WaveLabError as exc:
        raise StencilCrossesSeparatrix(f"stencil point {params} lost its orbit: {exc}") from exc
    tp = cs.turning
    jump = max(abs(tp.u_minus - base_tp.u_minus), abs(tp.u_plus - base_tp.u_plus))
    if jump > FD_JUMP * base_tp.width:
        raise StencilCrossesSeparatrix(f"stencil point {params} sits on another orbit family")
    return np.array([cs.T, cs.M, cs.P])


def gradient_table(params: WaveParams, nl: Nonlinearity, rel_step: float = FD_REL_STEP,
                   method: str = "finite_difference", nodes: int | None = None) -> GradientTable:
    """Central differences with one Richardson level in each of a, E, c.

    Every stencil point uses the same fixed rule, ``nodes`` points (default
    twice the adaptive count of the base point).  A step is cut tenfold, at
    most FD_SHRINK_TRIES times, when a stencil point leaves the orbit family
    or the two Richardson levels disagree by more than FD_CONSISTENCY.
    """
    if method != "finite_difference":
        raise NotImplementedError(f"gradient method {method!r}")
    base = conserved_set(params, nl)
    n = nodes or 2 * base.n_nodes
    tp = base.turning
    hint = 0.5 * (tp.u_minus + tp.u_plus)
    jac = np.empty((3, 3))
    steps = []
    for j, name in enumerate(PARAM_NAMES):
        x = params.get(name)
        h = rel_step * max(1.0, abs(x))

        def d(hh):
            fp = _stencil_value(params.replace(**{name: x + hh}), nl, n, hint, tp)
            fm = _stencil_value(params.replace(**{name: x - hh}), nl, n, hint, tp)
            return (fp - fm) / (2 * hh)

        # near a separatrix the stencil may leave the family; shrink before giving up
        for attempt in range(FD_SHRINK_TRIES + 1):
            try:
                coarse, fine = d(h), d(h / 2)
                spread = np.linalg.norm(fine - coarse) / max(np.linalg.norm(fine), 1e-300)
                if spread > FD_CONSISTENCY:
                    raise StencilCrossesSeparatrix(
                        f"finite differences in {name} do not settle (spread {spread:.1e} at step {h:.1e})")
                jac[:, j] = (4 * fine - coarse) / 3
                break
            except StencilCrossesSeparatrix:
                if attempt == FD_SHRINK_TRIES:
                    raise
                h *= 0.1
        steps.append(h)
    return GradientTable(jac, method, base, tuple(steps), params.c)


# --------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class Profile:
    x: np.ndarray
    u: np.ndarray
    ux: np.ndarray
    period: float
    closure: float

    def rows(self):
        return list(zip(self.x.tolist(), self.u.tolist(), self.ux.tolist()))


def _profile_rhs(params, nl):
    c = params.c

    def rhs(x, y):
        return np.array([y[1], -potential_prime(y[0], params, nl) / c])

    return rhs


def integrate_profile(params: WaveParams, nl: Nonlinearity, x_end: float, tp: TurningPoints | None = None,
                      rtol: float = ODE_RTOL, t_eval=None, events=None):
    tp = tp or find_turning_points(params, nl)
    scale = max(1.0, tp.width)
    return solve_ivp(_profile_rhs(params, nl), (0.0, x_end), [tp.u_minus, 0.0], method="DOP853",
                     rtol=rtol, atol=1e-14 * scale, t_eval=t_eval, events=events, dense_output=t_eval is None)


def sample_profile(params: WaveParams, nl: Nonlinearity, n: int, cs: ConservedSet | None = None) -> Profile:
    """Integrate c u_xx = -V'(u) from (u_minus, 0) over one period; n equispaced samples on [0, T)."""
    cs = cs or conserved_set(params, nl)
    tp = cs.turning
    T = cs.T
    x = T * np.arange(n) / n
    sol = integrate_profile(params, nl, T, tp, t_eval=np.append(x, T))
    if not sol.success:
        raise ClosureFailure(sol.message)
    uT, uxT = sol.y[0, -1], sol.y[1, -1]
    closure = abs(uT - tp.u_minus) + abs(uxT)
    if closure > 1e-8 * max(1.0, tp.width):
        raise ClosureFailure(f"orbit does not close after one quadrature period (mismatch {closure:.2e})")
    return Profile(x, sol.y[0, :-1].copy(), sol.y[1, :-1].copy(), T, float(closure))


def ode_return_time(params: WaveParams, nl: Nonlinearity, cs: ConservedSet | None = None) -> float:
    """Period measured as the first return of u_x to zero from below."""
    cs = cs or conserved_set(params, nl)

    def back(x, y):
        return y[1]

    back.direction = 1.0
    sol = integrate_profile(params, nl, 1.5 * cs.T, cs.turning, events=back)
    hits = sol.t_events[0]
    hits = hits[hits > 0.5 * cs.T]
    if hits.size == 0:
        raise ClosureFailure("orbit did not return within 1.5 quadrature periods")
    return float(hits[0])


def parameter_derivative_profiles(params: WaveParams, nl: Nonlinearity, n: int,
                                  cs: ConservedSet | None = None):
    """Sensitivities (u_p, u_px) for p in (a, E, c) on the n-point grid of ``sample_profile``.

    The wave is normalised by u(0) = u_minus(a, E, c), u_x(0) = 0, so each
    sensitivity starts from d u_minus / dp and zero slope.

    Returns ``(profile, up, upx)`` with ``up``/``upx`` of shape (3, n).
    """
    cs = cs or conserved_set(params, nl)
    tp = cs.turning
    c, um = params.c, tp.u_minus
    vm = potential_prime(um, params, nl)
    d_um = np.array([um / vm, 1.0 / vm, um * um / (2 * vm)])

    def rhs(x, y):
        u, ux = y[0], y[1]
        vp = potential_prime(u, params, nl)
        vpp = potential_second(u, params, nl)
        s, sx = y[2:5], y[5:8]
        force = np.array([1.0, 0.0, u + vp / c])
        return np.concatenate(([ux, -vp / c], sx, (-vpp * s + force) / c))

    x = cs.T * np.arange(n) / n
    y0 = np.concatenate(([um, 0.0], d_um, np.zeros(3)))
    scale = max(1.0, tp.width)
    sol = solve_ivp(rhs, (0.0, cs.T), y0, method="DOP853", rtol=ODE_RTOL, atol=1e-14 * scale,
                    t_eval=np.append(x, cs.T))
    if not sol.success:
        raise ClosureFailure(sol.message)
    closure = abs(sol.y[0, -1] - um) + abs(sol.y[1, -1])
    prof = Profile(x, sol.y[0, :-1].copy(), sol.y[1, :-1].copy(), cs.T, float(closure))
    return prof, sol.y[2:5, :-1].copy(), sol.y[5:8, :-1].copy()
