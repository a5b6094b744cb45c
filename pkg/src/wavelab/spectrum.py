"""L2(R) spectrum near the origin through the Floquet parameterisation.

A point mu belongs to the spectrum when M(mu) has an eigenvalue
lambda = e^{i kappa} on the unit circle.  Near mu = 0 the three branches
mu_j(kappa) start as mu ~ -i y_j kappa, where y_j are the roots of the
projective cubic built from {T,M,P}, tr M_mumu(0) and T/c.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateJacobian, NewtonDivergence
from .evans import _base, evans_local, monodromy_batch, origin_derivatives
from .indices import bracket3, cubic_coefficients
from .wave_family import GradientTable, Nonlinearity, WaveParams, gradient_table

SCAN_TOL = 1e-3
KAPPA_MIN = 1e-4
NEWTON_MAXIT = 30
STENCIL_REL = 1e-6
CSV_COLUMNS = ("kappa", "re_mu", "im_mu", "residual")


@dataclass(frozen=True)
class SpectrumPoint:
    mu: complex
    kappa: float
    unit_circle_residual: float

    def row(self) -> tuple:
        return (self.kappa, self.mu.real, self.mu.imag, self.unit_circle_residual)


@dataclass(frozen=True)
class SpectrumBranch:
    kappas: np.ndarray
    mus: np.ndarray
    y_seed: complex
    residuals: np.ndarray
    collision: float | None = None     # kappa at which this branch met another one

    def rows(self) -> list:
        return [(float(k), float(m.real), float(m.imag), float(r))
                for k, m, r in zip(self.kappas, self.mus, self.residuals)]

    @property
    def max_abs_real(self) -> float:
        return float(np.max(np.abs(self.mus.real))) if self.mus.size else 0.0


# --------------------------------------------------------------------------
# projective cubic


def cubic_roots(coeffs, rel_tol: float = 1e-12) -> np.ndarray:
    """Roots of A y^3 + B y^2 + C y + D.

    Cardano's formula with two Newton polishing steps.  When the leading
    coefficient is negligible the companion matrix of the remaining
    polynomial is used and the lost roots are reported as infinite.
    """
    A, B, C, D = (complex(x) for x in coeffs)
    size = max(abs(B), abs(C), abs(D))
    if abs(A) <= rel_tol * size:
        tail = np.trim_zeros(np.array([B, C, D]), "f")
        finite = np.roots(tail) if tail.size > 1 else np.array([], dtype=complex)
        out = np.full(3, complex(np.inf, 0.0))
        out[: finite.size] = finite
        return out
    b, c, d = B / A, C / A, D / A
    p = c - b * b / 3
    q = 2 * b**3 / 27 - b * c / 3 + d
    disc = np.sqrt(q * q / 4 + p**3 / 27 + 0j)
    w = -q / 2 + disc
    if abs(w) < abs(-q / 2 - disc):
        w = -q / 2 - disc
    if w == 0:
        roots = np.full(3, -b / 3)
    else:
        cube = w ** (1 / 3)
        omega = np.exp(2j * np.pi / 3)
        ts = np.array([cube * omega**k for k in range(3)])
        roots = ts - p / (3 * ts) - b / 3
    poly = np.poly1d([A, B, C, D])
    dpoly = poly.deriv()
    for _ in range(2):
        dv = dpoly(roots)
        ok = np.abs(dv) > 0
        roots = np.where(ok, roots - poly(roots) / np.where(ok, dv, 1), roots)
    return roots


@dataclass(frozen=True)
class ProjectiveCubic:
    coeffs: np.ndarray       # (y^3, y^2, y, 1)
    roots: np.ndarray
    jac3: float
    tr_m2: float
    tau: float

    @property
    def n_real(self) -> int:
        scale = max(1.0, float(np.max(np.abs(self.roots))))
        return int(np.sum(np.abs(self.roots.imag) <= 1e-8 * scale))

    @property
    def all_real(self) -> bool:
        return self.n_real == 3


def projective_cubic(params: WaveParams, nl: Nonlinearity, table: GradientTable | None = None,
                     tr_m2: float | None = None) -> ProjectiveCubic:
    table = table or gradient_table(params, nl)
    jac3 = bracket3(table)
    if tr_m2 is None:
        tr_m2 = origin_derivatives(params, nl).tr_m2
    tau = table.base.T / params.c
    scale = float(np.prod(np.max(np.abs(table.values), axis=0)))
    if abs(jac3) <= 1e-10 * scale:
        raise DegenerateJacobian(f"orientation index {jac3:.3e} vanishes; projective cubic loses its leading term")
    coeffs = cubic_coefficients(jac3, tr_m2, tau)
    roots = cubic_roots(coeffs)
    # real roots first, ascending
    cplx = np.abs(roots.imag) > 1e-8 * np.max(np.abs(roots))
    order = np.lexsort((roots.imag, roots.real, cplx))
    return ProjectiveCubic(coeffs, roots[order], jac3, tr_m2, tau)


def projective_roots(params: WaveParams, nl: Nonlinearity, **kw) -> np.ndarray:
    """The three roots y_j of 1 + tau y - (y^2/2)(t2 - tau^2) - J y^3."""
    return projective_cubic(params, nl, **kw).roots


# --------------------------------------------------------------------------
# branch tracking


def _stencil(mu: complex, h: float) -> np.ndarray:
    return mu + h * np.array([0, 1, 1j, -1, -1j])


def _newton(params, nl, mu0: complex, lam: complex, scale: float, step_tol: float):
    """Newton on mu -> D(mu, lam), derivative from a 4-point complex stencil.

    Returns (mu, |D|, |D'| |mu|) at convergence.
    """
    mu = complex(mu0)
    h = STENCIL_REL * scale
    for _ in range(NEWTON_MAXIT):
        vals = evans_local(params, nl, _stencil(mu, h), lam)
        deriv = (vals[1] - vals[3] - 1j * (vals[2] - vals[4])) / (4 * h)
        if deriv == 0:
            raise NewtonDivergence(f"vanishing derivative at mu={mu}")
        step = vals[0] / deriv
        mu -= step
        if abs(step) <= step_tol * max(abs(mu), scale * 1e-6):
            val = evans_local(params, nl, [mu], lam)[0]
            return mu, float(abs(val)), float(abs(deriv) * max(abs(mu), h))
    raise NewtonDivergence(f"Newton did not converge from mu0={mu0} at lambda={lam}")


def kappa_grid(kappa_max: float, n: int, kappa_min: float = KAPPA_MIN) -> np.ndarray:
    if kappa_max <= kappa_min:
        return np.array([kappa_max])
    return np.geomspace(kappa_min, kappa_max, n)


def track_branches(params: WaveParams, nl: Nonlinearity, kappa_max: float = 1e-2, n: int = 9,
                   kappas=None, cubic: ProjectiveCubic | None = None, step_tol: float = 1e-10,
                   res_tol: float = 1e-8) -> list:
    """Follow mu_j(kappa) for the three projective roots over a geometric kappa grid.

    Each branch is seeded at -i y_j kappa on the first grid point and then at
    its own previous root extrapolated linearly in kappa.  If two branches
    land on the same root the collision kappa is recorded on both and the
    later branch stops there.
    """
    cs = _base(params, nl)
    cubic = cubic or projective_cubic(params, nl)
    ks = np.asarray(kappas if kappas is not None else kappa_grid(kappa_max, n), dtype=float)
    tc = cs.T / params.c
    ys = cubic.roots
    sep = min(abs(ys[i] - ys[j]) for i in range(3) for j in range(i + 1, 3))
    results = [dict(k=[], mu=[], res=[], collision=None) for _ in range(3)]
    for k in ks:
        lam = np.exp(1j * k)
        for j, y in enumerate(ys):
            br = results[j]
            if br["collision"] is not None:
                continue
            if len(br["mu"]) == 0:
                seed = -1j * y * k
            elif len(br["mu"]) == 1:
                seed = br["mu"][-1] * k / br["k"][-1]
            else:
                k1, k2 = br["k"][-2:]
                m1, m2 = br["mu"][-2:]
                seed = m2 + (m2 - m1) * (k - k2) / (k2 - k1)
            mu, dval, lin = _newton(params, nl, seed, lam, scale=k / tc * max(1.0, abs(y) * tc), step_tol=step_tol)
            if dval > res_tol * max(lin, 1e-300):
                raise NewtonDivergence(f"branch {j}: residual {dval:.2e} above tolerance at kappa={k:g}")
            for i in range(j):
                other = results[i]
                if other["k"] and other["k"][-1] == k and abs(other["mu"][-1] - mu) <= 1e-3 * sep * k:
                    br["collision"] = other["collision"] = float(k)
            if br["collision"] is not None:
                continue
            br["k"].append(float(k))
            br["mu"].append(mu)
            br["res"].append(dval / max(lin, 1e-300))
    return [SpectrumBranch(np.array(b["k"]), np.array(b["mu"], dtype=complex), complex(y),
                           np.array(b["res"]), b["collision"]) for b, y in zip(results, ys)]


# --------------------------------------------------------------------------
# eigenvalue-modulus scan


def _log_moduli(params, nl, cs, mus) -> tuple:
    M = monodromy_batch(params, nl, mus, cs=cs)
    lam = np.linalg.eigvals(M)
    order = np.argsort(np.abs(lam), axis=1)
    lam = np.take_along_axis(lam, order, axis=1)
    return lam, np.log(np.abs(lam))


def _accept(mus, lam, tol) -> list:
    out = []
    resid = np.abs(np.abs(lam) - 1.0)
    for m, l, r in zip(mus, lam, resid):
        k = int(np.argmin(r))
        if r[k] < tol:
            out.append(SpectrumPoint(complex(m), float(np.angle(l[k])), float(r[k])))
    return out


def scan(params: WaveParams, nl: Nonlinearity, region=(-1.0, 1.0, -1.0, 1.0), grid=(21, 21),
         tol: float = SCAN_TOL, refine: bool = True, bisect_steps: int = 40) -> list:
    """Grid points mu with an eigenvalue of M(mu) within ``tol`` of the unit circle.

    ``region`` is (re_min, re_max, im_min, im_max); a degenerate extent with a
    single count gives a segment.  With ``refine`` every grid edge across which
    a sorted log-modulus changes sign is bisected and the crossing is added.
    """
    cs = _base(params, nl)
    re0, re1, im0, im1 = region
    nr, ni = grid
    if nr < 1 or ni < 1:
        return []
    re = np.linspace(re0, re1, nr) if nr > 1 else np.array([0.5 * (re0 + re1)])
    im = np.linspace(im0, im1, ni) if ni > 1 else np.array([0.5 * (im0 + im1)])
    mus = (re[:, None] + 1j * im[None, :])
    flat = mus.reshape(-1)
    lam, logm = _log_moduli(params, nl, cs, flat)
    points = _accept(flat, lam, tol)
    if refine:
        points += _refine_edges(params, nl, cs, mus, logm.reshape(nr, ni, 3), tol, bisect_steps)
    points.sort(key=lambda p: (p.mu.real, p.mu.imag, p.kappa))
    return points


def _refine_edges(params, nl, cs, mus, logm, tol, steps) -> list:
    edges = []
    nr, ni = mus.shape
    for i in range(nr):
        for j in range(ni):
            for di, dj in ((1, 0), (0, 1)):
                i2, j2 = i + di, j + dj
                if i2 >= nr or j2 >= ni:
                    continue
                s1, s2 = logm[i, j], logm[i2, j2]
                for k in range(3):
                    if s1[k] * s2[k] < 0 and min(abs(s1[k]), abs(s2[k])) > 1e-12:
                        edges.append((mus[i, j], mus[i2, j2], k))
    if not edges:
        return []
    lo = np.array([e[0] for e in edges])
    hi = np.array([e[1] for e in edges])
    ks = np.array([e[2] for e in edges])
    _, lo_log = _log_moduli(params, nl, cs, lo)
    s_lo = np.sign(lo_log[np.arange(len(edges)), ks])
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        _, mlog = _log_moduli(params, nl, cs, mid)
        s_mid = np.sign(mlog[np.arange(len(edges)), ks])
        same = s_mid == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
        if np.max(np.abs(hi - lo)) < 1e-13:
            break
    mid = 0.5 * (lo + hi)
    lam, _ = _log_moduli(params, nl, cs, mid)
    return _accept(mid, lam, tol)


def imaginary_axis_points(params: WaveParams, nl: Nonlinearity, n: int = 50, radius: float = 2.0) -> list:
    """Scan n equispaced points of the segment [-i radius, i radius]."""
    return scan(params, nl, (0.0, 0.0, -radius, radius), (1, n), refine=False)


def rows(points) -> list:
    return [p.row() for p in points]
