"""Monodromy matrix and periodic Evans function of the linearised gBBM problem.

The eigenvalue problem  d_x L v = mu (1 - d_x^2) v,  L = -c d_x^2 + (c-1) - f'(u),
is written as the first-order system Phi_x = H(x, mu) Phi on one period of
the wave; the monodromy is M(mu) = Phi(T; mu) and the Evans function is
D(mu, lambda) = det(M(mu) - lambda I).

The wave profile is integrated together with the variational system, and
many values of mu are advanced in a single ODE solve.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ContourNotResolved, IntegrationFailure, NoStabilization
from .wave_family import ODE_RTOL, ConservedSet, Nonlinearity, WaveParams, conserved_set, potential_prime

CONTOUR_SCALE = 0.25
CONTOUR_NODES = 32
CONTOUR_TOL = 1e-8


@functools.lru_cache(maxsize=64)
def _base(params: WaveParams, nl: Nonlinearity) -> ConservedSet:
    return conserved_set(params, nl)


def coefficient_matrix(x_u, x_ux, mu, params: WaveParams, nl: Nonlinearity) -> np.ndarray:
    """H(x, mu) at a profile point (u, u_x)."""
    c = params.c
    return np.array([
        [0, 1, 0],
        [0, 0, 1],
        [-(mu + x_ux * nl.d2f(x_u)) / c, (c - 1 - nl.df(x_u)) / c, mu / c],
    ], dtype=complex)


def monodromy_batch(params: WaveParams, nl: Nonlinearity, mus, inverse: bool = False,
                    rtol: float = ODE_RTOL, cs: ConservedSet | None = None):
    """M(mu) for every mu in ``mus``; shape (N, 3, 3).

    With ``inverse`` the adjoint system Psi_x = -Psi H is integrated as well
    and ``(M, M_inv)`` is returned, giving M(mu)^-1 without inverting a
    possibly ill-conditioned matrix.
    """
    cs = cs or _base(params, nl)
    mus = np.atleast_1d(np.asarray(mus, dtype=complex))
    nmu = mus.size
    c = params.c
    T = cs.T
    um = cs.turning.u_minus
    blocks = 2 if inverse else 1
    eye = np.broadcast_to(np.eye(3, dtype=complex), (blocks * nmu, 3, 3)).reshape(-1)
    y0 = np.concatenate(([um, 0.0], eye)).astype(complex)
    mc = mus / c

    def rhs(x, y):
        u, ux = y[0].real, y[1].real
        h31 = -(mus + ux * nl.d2f(u)) / c
        h32 = (c - 1 - nl.df(u)) / c
        phi = y[2:2 + 9 * nmu].reshape(nmu, 3, 3)
        dphi = np.empty_like(phi)
        dphi[:, 0, :] = phi[:, 1, :]
        dphi[:, 1, :] = phi[:, 2, :]
        dphi[:, 2, :] = h31[:, None] * phi[:, 0, :] + h32 * phi[:, 1, :] + mc[:, None] * phi[:, 2, :]
        out = [np.array([ux, -potential_prime(u, params, nl) / c], dtype=complex), dphi.reshape(-1)]
        if inverse:
            psi = y[2 + 9 * nmu:].reshape(nmu, 3, 3)
            dpsi = np.empty_like(psi)
            dpsi[:, :, 0] = -psi[:, :, 2] * h31[:, None]
            dpsi[:, :, 1] = -psi[:, :, 0] - h32 * psi[:, :, 2]
            dpsi[:, :, 2] = -psi[:, :, 1] - mc[:, None] * psi[:, :, 2]
            out.append(dpsi.reshape(-1))
        return np.concatenate(out)

    sol = solve_ivp(rhs, (0.0, T), y0, method="DOP853", rtol=rtol, atol=1e-14, t_eval=[T])
    if not sol.success:
        raise IntegrationFailure(sol.message)
    yT = sol.y[:, -1]
    M = yT[2:2 + 9 * nmu].reshape(nmu, 3, 3)
    if inverse:
        return M, yT[2 + 9 * nmu:].reshape(nmu, 3, 3)
    return M


@dataclass(frozen=True)
class MonodromyMatrix:
    mu: complex
    mat: np.ndarray
    integ_tol: float
    period: float
    c: float

    @property
    def abel_residual(self) -> float:
        ref = np.exp(self.mu * self.period / self.c)
        return float(abs(np.linalg.det(self.mat) - ref) / abs(ref))


def monodromy(params: WaveParams, nl: Nonlinearity, mu: complex) -> MonodromyMatrix:
    cs = _base(params, nl)
    M = monodromy_batch(params, nl, [mu], cs=cs)[0]
    return MonodromyMatrix(complex(mu), M, ODE_RTOL, cs.T, params.c)


def evans_from_matrix(M: np.ndarray, lam) -> complex:
    M = np.asarray(M)
    return np.linalg.det(M - lam * np.eye(3))


def evans(params: WaveParams, nl: Nonlinearity, mu: complex, lam: complex) -> complex:
    """D(mu, lambda) = det(M(mu) - lambda I)."""
    return complex(evans_from_matrix(monodromy(params, nl, mu).mat, lam))


def second_symmetric(M: np.ndarray):
    """Sum of principal 2x2 minors (works on stacks of matrices)."""
    tr = np.trace(M, axis1=-2, axis2=-1)
    tr2 = np.trace(M @ M, axis1=-2, axis2=-1)
    return 0.5 * (tr * tr - tr2)


@dataclass(frozen=True)
class EvansCoefficients:
    mu: complex
    a_mu: complex
    b_mu: complex
    symmetry_residual: float


def evans_coeffs(params: WaveParams, nl: Nonlinearity, mu: complex) -> EvansCoefficients:
    """a(mu) = tr M(mu) and b(mu) from D = -l^3 + a l^2 + b l + e^{mu T/c}.

    The residual compares b(mu) with -e^{mu T/c} a(-mu) (one extra solve at -mu).
    """
    cs = _base(params, nl)
    M = monodromy_batch(params, nl, [mu, -mu], cs=cs)
    a = np.trace(M[0])
    b = -second_symmetric(M[0])
    pred = -np.exp(mu * cs.T / params.c) * np.trace(M[1])
    res = abs(b - pred) / max(abs(b), abs(pred), 1e-300)
    return EvansCoefficients(complex(mu), complex(a), complex(b), float(res))


# --------------------------------------------------------------------------
# Taylor data at mu = 0


@dataclass(frozen=True)
class OriginDerivatives:
    d_taylor: tuple          # Taylor coefficients d_0..d_3 of D(mu, 1)
    d3_evans: float          # third mu-derivative of D(mu, 1) at 0
    a_prime: float
    a_second: float
    tr_m2: float             # trace of M_mumu(0), equal to a''(0)
    b_prime: float           # derivatives of -e2(M(mu) - I)
    b_second: float
    contour_radius: float
    n_nodes: int
    lower_order_ratios: tuple = field(default=())
    period: float = float("nan")
    c: float = float("nan")

    @property
    def cubic_coefficient(self) -> float:
        return self.d_taylor[3]

    @property
    def a_prime_residual(self) -> float:
        tc = self.period / self.c
        return abs(self.a_prime - tc) / tc

    @property
    def b_second_residual(self) -> float:
        """|b''(0) - (a''(0) - (T/c)^2)| relative to a''(0)."""
        tc = self.period / self.c
        return abs(self.b_second - (self.a_second - tc * tc)) / max(abs(self.a_second), tc * tc)


def _taylor(values: np.ndarray, radius: float, kmax: int) -> np.ndarray:
    n = values.size
    coeffs = np.fft.fft(values) / n
    return coeffs[: kmax + 1] / radius ** np.arange(kmax + 1)


def origin_derivatives(params: WaveParams, nl: Nonlinearity, radius: float | None = None,
                       n: int = CONTOUR_NODES, nmax: int = 256) -> OriginDerivatives:
    """Cauchy-integral Taylor coefficients of D(mu,1), tr M(mu) and e2(M(mu)-I) at mu=0.

    The trapezoid rule on |mu| = r is spectrally accurate for these entire
    functions; the node count is doubled until d_3, a'(0) and a''(0) are
    stable to CONTOUR_TOL.
    """
    cs = _base(params, nl)
    tc = cs.T / params.c
    r = radius if radius is not None else CONTOUR_SCALE / tc

    def sample(r, n):
        nodes = r * np.exp(2j * np.pi * np.arange(n) / n)
        M = monodromy_batch(params, nl, nodes, cs=cs)
        N = M - np.eye(3)
        dvals = np.linalg.det(N)
        avals = np.trace(M, axis1=1, axis2=2)
        bvals = -second_symmetric(N)
        return dvals, avals, bvals

    for _ in range(4):
        prev = None
        k = n
        while k <= nmax:
            dv, av, bv = sample(r, k)
            dco = _taylor(dv, r, 3)
            aco_full = np.fft.fft(av) / k
            aco = aco_full[:3] / r ** np.arange(3)
            bco = _taylor(bv, r, 2)
            key = np.array([dco[3], aco[1], aco[2]])
            if prev is not None and np.all(np.abs(key - prev) <= CONTOUR_TOL * np.abs(key)):
                break
            prev = key
            k *= 2
        else:
            raise ContourNotResolved(f"contour coefficients did not settle with {nmax} nodes")
        scaled = np.abs(aco_full[: k // 2]) * 1.0
        tail = scaled[k // 4:].max() / scaled.max()
        if tail <= 0.1:
            break
        r *= 0.5
    else:
        raise ContourNotResolved("Taylor tail of tr M(mu) stays large after radius halving")

    d = dco.real
    top = abs(d[3]) * r**3
    ratios = tuple(float(abs(dco[j]) * r**j / top) for j in range(3))
    return OriginDerivatives(
        d_taylor=tuple(float(x) for x in d),
        d3_evans=float(6 * d[3]),
        a_prime=float(aco[1].real),
        a_second=float(2 * aco[2].real),
        tr_m2=float(2 * aco[2].real),
        b_prime=float(bco[1].real),
        b_second=float(2 * bco[2].real),
        contour_radius=float(r),
        n_nodes=int(k),
        lower_order_ratios=ratios,
        period=cs.T,
        c=params.c,
    )


# --------------------------------------------------------------------------
# large real mu


def evans_at_one_real(params: WaveParams, nl: Nonlinearity, mus) -> np.ndarray:
    """D(mu, 1) for real mu, robust when M(mu) has exponentially large entries.

    Uses det(M - I) = det M (1 - tr M^-1) + tr M - 1 with det M = e^{mu T/c}
    and M^-1 integrated directly, avoiding cancellation in the 2x2 minors.
    """
    cs = _base(params, nl)
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    out = np.empty(mus.size)
    for i, mu in enumerate(mus):
        M, Minv = monodromy_batch(params, nl, [mu], inverse=True, cs=cs)
        det = np.exp(mu * cs.T / params.c)
        out[i] = (det * (1 - np.trace(Minv[0])) + np.trace(M[0]) - 1).real
    return out


def sign_at_infinity(params: WaveParams, nl: Nonlinearity, kmax: int = 9, return_values: bool = False):
    """Sign of D(mu, 1) as real mu -> +infinity.

    Evaluates mu = 2^k c/T until three consecutive values share a sign and
    grow in magnitude.
    """
    cs = _base(params, nl)
    unit = params.c / cs.T
    vals, mus = [], []
    for k in range(kmax + 1):
        mu = 2.0**k * unit
        mus.append(mu)
        vals.append(evans_at_one_real(params, nl, [mu])[0])
        if len(vals) >= 3:
            v = vals[-3:]
            if np.sign(v[0]) == np.sign(v[1]) == np.sign(v[2]) != 0 and abs(v[0]) < abs(v[1]) < abs(v[2]):
                s = int(np.sign(v[2]))
                return (s, np.array(mus), np.array(vals)) if return_values else s
    raise NoStabilization(f"sign of D(mu,1) did not stabilise up to mu={mus[-1]:.3g}: {vals}")


# --------------------------------------------------------------------------
# structured evaluation near the origin


@dataclass(frozen=True)
class TraceSeries:
    """Taylor series of a(mu) = tr M(mu) about 0 with a(0) = 3 and a'(0) = T/c imposed.

    D(mu, lambda) is rebuilt from a(mu) and a(-mu) through the cubic
    structure, which keeps the O(kappa^3) size of D near (0, 1) free of the
    O(1) rounding left by a direct determinant.
    """

    coeffs: np.ndarray
    radius: float
    tau: float

    def a(self, mu):
        return np.polyval(self.coeffs[::-1], mu)

    def evans(self, mu, lam):
        """D(mu, lam) expanded about lam = 1 with the O(1) and O(mu) cancellations done exactly."""
        mu = np.asarray(mu, dtype=complex)
        lam = np.asarray(lam, dtype=complex)
        k = np.arange(self.coeffs.size)
        odd3 = np.where((k % 2 == 1) & (k >= 3), self.coeffs, 0.0)
        high = np.where(k >= 2, self.coeffs * (2 - (-1.0) ** k), 0.0)
        alpha = np.polyval(np.where(k >= 1, self.coeffs, 0.0)[::-1], mu)
        alpha_m = np.polyval(np.where(k >= 1, self.coeffs, 0.0)[::-1], -mu)
        z = mu * self.tau
        eps = np.expm1(z)
        eps2 = _expm1_minus_linear(z)
        c0 = 2 * np.polyval(odd3[::-1], mu) - 2 * eps2 - eps * alpha_m
        c1 = np.polyval(high[::-1], mu) - 3 * eps2 - eps * alpha_m
        nu = lam - 1.0
        return c0 + nu * (c1 + nu * (alpha - nu))

    def valid(self, mu) -> bool:
        return abs(mu) <= 0.25 * self.radius


def _expm1_minus_linear(z):
    """e^z - 1 - z without cancellation for small |z|."""
    z = np.asarray(z, dtype=complex)
    out = np.expm1(z) - z
    small = np.abs(z) < 0.5
    if np.any(small):
        zs = z[small] if z.ndim else z
        term = zs * zs / 2
        acc = term.copy()
        for j in range(3, 30):
            term = term * zs / j
            acc = acc + term
        if z.ndim:
            out[small] = acc
        else:
            out = acc
    return out


@functools.lru_cache(maxsize=32)
def trace_series(params: WaveParams, nl: Nonlinearity, n: int = 64, scale: float = CONTOUR_SCALE) -> TraceSeries:
    cs = _base(params, nl)
    tau = cs.T / params.c
    r = scale / tau
    nodes = r * np.exp(2j * np.pi * np.arange(n) / n)
    M = monodromy_batch(params, nl, nodes, cs=cs)
    av = np.trace(M, axis1=1, axis2=2)
    coeffs = (np.fft.fft(av) / n).real[: n // 2] / r ** np.arange(n // 2)
    coeffs[0], coeffs[1] = 3.0, tau
    return TraceSeries(coeffs, r, tau)


def evans_local(params: WaveParams, nl: Nonlinearity, mus, lam) -> np.ndarray:
    """D(mu, lam) for an array of mu, from the trace series inside its disc and directly outside."""
    mus = np.atleast_1d(np.asarray(mus, dtype=complex))
    ser = trace_series(params, nl)
    out = np.empty(mus.size, dtype=complex)
    inside = np.abs(mus) <= 0.25 * ser.radius
    if inside.any():
        out[inside] = ser.evans(mus[inside], lam)
    if (~inside).any():
        M = monodromy_batch(params, nl, mus[~inside])
        out[~inside] = np.linalg.det(M - lam * np.eye(3))
    return out
