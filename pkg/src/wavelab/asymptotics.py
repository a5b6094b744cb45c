"""Closed-form limits for power-law nonlinearities and the mBBM Picard-Fuchs system.

Contents:

* the scaling symmetry that maps every power-law wave to the c = 2 family,
* the solitary-limit momentum derivative dP/dc and the critical speed c0(p),
* the 7x7 Picard-Fuchs system for the singular moments of mBBM at a = 0,
  with a Hadamard finite-part quadrature as the independent check,
* sequences of dnoidal waves approaching the separatrix.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import SingularSystem, WaveLabError
from .evans import origin_derivatives
from .indices import bracket3, delta_from
from .wave_family import (
    Nonlinearity,
    WaveParams,
    conserved_set,
    find_turning_points,
    gradient_table,
    integrate_profile,
    mbbm,
    power_law,
    reduced_radicand,
    sample_profile,
)

CRITICAL_TOL = 1e-9
PF_COND_MAX = 1e12
DISC_NORMALIZATION = -4.0   # standard discriminant / determinant of the printed Sylvester matrix


class Verdict(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    CRITICAL = "critical"


@dataclass(frozen=True)
class PowerLaw:
    """f(u) = u^{p+1} ("plain") or u^{p+1}/(p+1) ("normalized")."""

    p: float
    convention: str = "plain"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"power p must be >= 1, got {self.p}")
        if self.convention not in ("plain", "normalized"):
            raise ValueError(f"unknown convention {self.convention!r}")

    def nonlinearity(self) -> Nonlinearity:
        return power_law(self.p, normalized=self.convention == "normalized")

    def well_minimum(self, c: float) -> float:
        """Location of the dnoidal well minimum of V at a = 0."""
        s = (c - 1) if self.convention == "plain" else (c - 1) * (self.p + 1)
        return s ** (1 / self.p)


# --------------------------------------------------------------------------
# scaling symmetry


SCALING_CONVENTIONS = ("shifted", "printed")


@dataclass(frozen=True)
class ScalingMap:
    """u(x; a, E, c) = (c-1)^{1/p} v(sqrt((c-1)/c) x; a', E').

    ``shifted`` divides a, E by (c-1)^{1+1/p}, (c-1)^{1+2/p}; ``printed``
    uses c^{1+1/p}, c^{1+2/p}.  v is the c = 2 wave read at a rescaled
    coordinate, v(s) = w(sqrt(2) s; a', E').
    """

    a_v: float
    E_v: float
    c: float
    law: PowerLaw
    convention: str = "shifted"
    v_hint: float = 1.0

    @property
    def amplitude(self) -> float:
        return (self.c - 1) ** (1 / self.law.p)

    @property
    def stretch(self) -> float:
        return math.sqrt((self.c - 1) / self.c)

    def params(self) -> WaveParams:
        p = self.law.p
        base = self.c - 1 if self.convention == "shifted" else self.c
        return WaveParams(self.a_v * base ** (1 + 1 / p), self.E_v * base ** (1 + 2 / p), self.c,
                          self.amplitude * self.v_hint)

    def v_params(self) -> WaveParams:
        return WaveParams(self.a_v, self.E_v, 2.0, self.v_hint)

    def verify(self, n: int = 128) -> float:
        """Sup-norm mismatch over one period between u and its rescaled c = 2 image.

        Returns inf if the mapped parameters do not carry a periodic orbit
        through the mapped hint.
        """
        nl = self.law.nonlinearity()
        try:
            prof = sample_profile(self.params(), nl, n)
        except WaveLabError:
            return math.inf
        vp = self.v_params()
        s = math.sqrt(2.0) * self.stretch * prof.x
        sol = integrate_profile(vp, nl, float(s[-1]) + 1e-12, t_eval=s)
        w = sol.y[0]
        return float(np.max(np.abs(prof.u - self.amplitude * w)))


def scaling_map(a_v: float, E_v: float, c: float, p: float, convention: str = "shifted",
                v_hint: float = 1.0, law: PowerLaw | None = None) -> ScalingMap:
    if convention not in SCALING_CONVENTIONS:
        raise ValueError(f"unknown scaling convention {convention!r}")
    return ScalingMap(a_v, E_v, c, law or PowerLaw(p), convention, v_hint)


def arbitrate_scaling(a_v: float, E_v: float, c: float, p: float, v_hint: float = 1.0) -> dict:
    """Mismatch of both parameter conventions and the one that reproduces the wave."""
    out = {conv: scaling_map(a_v, E_v, c, p, conv, v_hint).verify() for conv in SCALING_CONVENTIONS}
    out["selected"] = min(SCALING_CONVENTIONS, key=lambda k: out[k])
    return out


# --------------------------------------------------------------------------
# solitary limit


def sech_integral(r: float) -> float:
    """I(r) = int_R sech^r x dx = sqrt(pi) Gamma(r/2) / Gamma((r+1)/2)."""
    if r <= 0:
        raise ValueError("r must be positive")
    return float(math.sqrt(math.pi) * math.exp(special.gammaln(r / 2) - special.gammaln((r + 1) / 2)))


def sech_integral_quadrature(r: float) -> float:
    val, _ = integrate.quad(lambda x: (2 * np.exp(-x) / (1 + np.exp(-2 * x))) ** r, 0, np.inf,
                            epsabs=0, epsrel=1e-13, limit=200)
    return 2 * val


def momentum_dc_limit(p: float, c: float) -> float:
    """Leading term of dP/dc as the periodic waves approach the solitary wave."""
    pref = (c - 1) ** (2 / p - 0.5) * math.sqrt(c) * sech_integral(4 / p) / (2 * p * c * (c - 1))
    return pref * (4 * c - p + (4 * c + p) * (c - 1) * p / ((4 + p) * c))


def critical_speed(p: float) -> float:
    """c0(p) = p (1 + sqrt(2 + p/2)) / (4 + 2p), the root of (16+8p)c^2 - 8pc - p^2."""
    if p <= 0:
        raise ValueError("p must be positive")
    return p * (1 + math.sqrt(2 + p / 2)) / (4 + 2 * p)


def classify_solitary_limit(p: float, c: float, tol: float = CRITICAL_TOL) -> Verdict:
    if p < 1 or c <= 1:
        raise ValueError("requires p >= 1 and c > 1")
    if abs(p - 4) <= tol:
        return Verdict.CRITICAL
    if p < 4:
        return Verdict.STABLE
    c0 = critical_speed(p)
    if abs(c - c0) <= tol * c0:
        return Verdict.CRITICAL
    return Verdict.STABLE if c > c0 else Verdict.UNSTABLE


# --------------------------------------------------------------------------
# Picard-Fuchs system (mBBM, f = u^3)


def pf_matrix(E: float, c: float, a: float = 0.0) -> np.ndarray:
    """Sylvester-type matrix of R = E + a u + (c-1)/2 u^2 - u^4/4 and R'."""
    A = np.zeros((7, 7))
    r = [E, a, (c - 1) / 2, 0.0, -0.25]
    rp = [a, c - 1, 0.0, -1.0]
    for i in range(3):
        A[i, i:i + 5] = r
    for i in range(4):
        A[3 + i, i:i + 4] = rp
    return A


def radicand_discriminant(E: float, c: float, a: float = 0.0) -> float:
    """disc of R as a quartic in u, fixed from the Sylvester determinant by DISC_NORMALIZATION."""
    return DISC_NORMALIZATION * float(np.linalg.det(pf_matrix(E, c, a)))


def radicand_discriminant_closed(E: float, c: float) -> float:
    """Standard discriminant of E + (c-1)/2 u^2 - u^4/4."""
    return -E * (4 * E + (c - 1) ** 2) ** 2 / 4


@dataclass(frozen=True)
class PFSolution:
    I: np.ndarray
    mu0: float
    mu1: float
    mu2: float
    cond: float
    E: float
    c: float

    @property
    def M_a(self) -> float:
        return -0.5 * math.sqrt(self.c / 2) * self.I[2]

    @property
    def T_a(self) -> float:
        return -0.5 * math.sqrt(self.c / 2) * self.I[1]

    @property
    def T_E(self) -> float:
        return -0.5 * math.sqrt(self.c / 2) * self.I[0]


def _cnoidal(E: float, c: float) -> WaveParams:
    return WaveParams(0.0, E, c, 0.0)


def picard_fuchs(E: float, c: float) -> PFSolution:
    """Solve for the cycle integrals I_k = contour int u^k R^{-3/2}, k = 0..6, on the cnoidal orbit."""
    A = pf_matrix(E, c)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > PF_COND_MAX:
        raise SingularSystem(f"Picard-Fuchs matrix is singular (cond {cond:.3e}) at E={E}, c={c}")
    cs = conserved_set(_cnoidal(E, c), mbbm())
    s = math.sqrt(2 / c)
    mu0, mu1 = s * cs.T, s * cs.M
    rhs = np.array([mu0, mu1, cs.mu2, 0.0, 2 * mu0, 4 * mu1, 6 * cs.mu2])
    return PFSolution(np.linalg.solve(A, rhs), mu0, mu1, cs.mu2, cond, E, c)


def finite_part_moments(params: WaveParams, nl: Nonlinearity, kmax: int = 6, n: int = 512) -> np.ndarray:
    """Cycle integrals of u^k R^{-3/2} as twice the Hadamard finite part over [u-, u+].

    With u = u- + L (1 - cos phi)/2 the integrand becomes H(phi)/sin^2 phi,
    H = 4 u^k / (L^2 G^{3/2}).  The endpoint interpolant S of H has zero
    finite part, so FP = int (H - S)/sin^2 phi, a regular integral.
    """
    tp = find_turning_points(params, nl)
    L = tp.u_plus - tp.u_minus
    x, w = np.polynomial.legendre.leggauss(n)
    phi = (x + 1) * np.pi / 2
    w = w * np.pi / 2
    u = tp.u_minus + L * (1 - np.cos(phi)) / 2
    G = reduced_radicand(u, params, nl, tp)
    G_ends = reduced_radicand(np.array([tp.u_minus, tp.u_plus]), params, nl, tp)
    out = []
    for k in range(kmax + 1):
        H = 4 * u**k / (L * L * G**1.5)
        A = 4 * tp.u_minus**k / (L * L * G_ends[0] ** 1.5)
        B = 4 * tp.u_plus**k / (L * L * G_ends[1] ** 1.5)
        S = A * (1 + np.cos(phi)) / 2 + B * (1 - np.cos(phi)) / 2
        out.append(2 * np.sum(w * (H - S) / np.sin(phi) ** 2))
    return np.array(out)


def mass_a_ratio(E: float, c: float, pf: PFSolution | None = None) -> float:
    """disc(R) M_a / ((c-1) T) on the cnoidal mBBM orbit at a = 0."""
    pf = pf or picard_fuchs(E, c)
    T = pf.mu0 / math.sqrt(2 / c)
    return radicand_discriminant(E, c) * pf.M_a / ((c - 1) * T)


def mass_a_limit(c: float, E_seq=(1e-2, 3e-3, 1e-3, 3e-4, 1e-4)) -> dict:
    """Ratios along E_seq and the extrapolated E -> 0+ value.

    The fit ratio = L + E (alpha + beta ln E) matches the logarithmic
    growth of T near the separatrix.
    """
    E_seq = np.asarray(E_seq, dtype=float)
    r = np.array([mass_a_ratio(float(E), c) for E in E_seq])
    X = np.column_stack([np.ones_like(E_seq), E_seq, E_seq * np.log(E_seq)])
    coef, *_ = np.linalg.lstsq(X, r, rcond=None)
    return {"E": E_seq, "ratio": r, "limit": float(coef[0])}


# --------------------------------------------------------------------------
# approach to the separatrix


@dataclass(frozen=True)
class SolitaryLimitReport:
    p: float
    c: float
    E: np.ndarray
    T: np.ndarray
    jac3: np.ndarray
    delta: np.ndarray
    M_a: np.ndarray
    predicted: str
    dpdc: float
    agreement: float                # fraction of points whose signs match the prediction
    eventually_agrees: bool         # last point matches
    slope_fit: float                # dT / d(-ln d) over the last decade
    slope_previous: float           # same over the preceding decade
    slope_expected: float           # sqrt(c / -V''(0))
    errors: tuple = field(default=())


def solitary_limit_consistency(p: float, c: float, E_seq=None, law: PowerLaw | None = None) -> SolitaryLimitReport:
    """Index signs along the a = 0 dnoidal family as E -> 0- (the separatrix level).

    E_seq lists the unscaled distances below the separatrix; each is mapped
    by (c-1)^{1+2/p} so the sequence probes the same part of the family at
    every speed.
    """
    law = law or PowerLaw(p)
    nl = law.nonlinearity()
    if E_seq is None:
        E_seq = (-1e-2, -3e-3, -1e-3, -3e-4, -1e-4)
    scale = (c - 1) ** (1 + 2 / p)
    hint = law.well_minimum(c)
    Es, Ts, J, D, Ma, errs = [], [], [], [], [], []
    for e in E_seq:
        params = WaveParams(0.0, float(e) * scale, c, hint)
        try:
            table = gradient_table(params, nl)
            od = origin_derivatives(params, nl)
        except WaveLabError as exc:
            errs.append(f"E={e}: {exc.kind}")
            continue
        j = bracket3(table)
        Es.append(params.E)
        Ts.append(table.base.T)
        J.append(j)
        D.append(delta_from(j, od.tr_m2, table.base.T / c))
        Ma.append(table.M_a)
    Es, Ts, J, D, Ma = map(np.array, (Es, Ts, J, D, Ma))
    dpdc = momentum_dc_limit(p, c)
    verdict = classify_solitary_limit(p, c)
    want = 1.0 if dpdc > 0 else -1.0
    # stability needs J > 0 and Delta > 0; instability shows in either sign flipping
    if want > 0:
        ok = (J > 0) & (D > 0)
    else:
        ok = (J < 0) | (D < 0)
    d = np.abs(Es)
    slopes = _decade_slopes(d, Ts)
    # -V''(0) = c - 1 for every power law at a = 0
    expected = math.sqrt(c / (c - 1))
    return SolitaryLimitReport(
        p=p, c=c, E=Es, T=Ts, jac3=J, delta=D, M_a=Ma, predicted=verdict.value, dpdc=dpdc,
        agreement=float(np.mean(ok)) if ok.size else 0.0,
        eventually_agrees=bool(ok.size and ok[-1]),
        slope_fit=slopes[0], slope_previous=slopes[1], slope_expected=expected,
        errors=tuple(errs),
    )


def _decade_slopes(d: np.ndarray, T: np.ndarray) -> tuple:
    if d.size < 3:
        return (math.nan, math.nan)
    x = -np.log(d)

    def fit(mask):
        if mask.sum() < 2:
            return math.nan
        return float(np.polyfit(x[mask], T[mask], 1)[0])

    last = d <= d[-1] * 10 * (1 + 1e-12)
    prev = (d >= d[-1] * 10 * (1 - 1e-12)) & (d <= d[-1] * 100 * (1 + 1e-12))
    return fit(last), fit(prev)
