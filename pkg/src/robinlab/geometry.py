"""Pointwise Hermitian-metric kernel on coordinate charts of C^n.

Conventions, fixed once for every module:

* ``gmat[a, b]`` holds g_{a b-bar}; ``ginv = gmat^{-1}`` so ``ginv[a, b]`` is
  g^{a-bar b}; ``G = det(gmat)``.
* The Laplacian is the metric one,  Delta u = -2 (P u + R u)  with principal
  part ``P u = trace(ginv @ H)`` (H the mixed complex Hessian of u) and a
  first-order divergence part R driven by I_a = sum_b d(G ginv[a,b])/dz_b.
  On the Euclidean chart this Delta equals -1/2 times the ordinary R^{2n}
  Laplacian (see :class:`DimensionalConstants` for the conversion table).
* Derivatives default to 4th-order central finite differences with relative
  step ``h_z = 1e-4``; closed-form callbacks override them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (DerivativeUnavailable, NotOnBoundary, SingularMetric,
                     ValidationError, ZeroGradient)

DEFAULT_HZ = 1e-4
GRAD_TOL = 1e-10


# ---------------------------------------------------------------------------
# finite differences for functions of z in C^n
# ---------------------------------------------------------------------------

def _step(z, h_rel):
    return h_rel * max(1.0, float(np.max(np.abs(z))) if len(z) else 1.0)


def _diff_real_dir(f, z, direction, h):
    """4th-order central d/ds of s -> f(z + s*direction)."""
    zp = np.asarray(z, dtype=complex)
    fm2 = f(zp - 2 * h * direction)
    fm1 = f(zp - h * direction)
    fp1 = f(zp + h * direction)
    fp2 = f(zp + 2 * h * direction)
    return (-np.asarray(fp2) + 8 * np.asarray(fp1)
            - 8 * np.asarray(fm1) + np.asarray(fm2)) / (12 * h)


def fd_dz(f, z, lam, h):
    """d f / d z_lam = (d/dx - i d/dy)/2 along the lam-th complex axis."""
    e = np.zeros(len(z), dtype=complex)
    e[lam] = 1.0
    dx = _diff_real_dir(f, z, e, h)
    dy = _diff_real_dir(f, z, 1j * e, h)
    return 0.5 * (dx - 1j * dy)


def fd_dzbar(f, z, lam, h):
    e = np.zeros(len(z), dtype=complex)
    e[lam] = 1.0
    dx = _diff_real_dir(f, z, e, h)
    dy = _diff_real_dir(f, z, 1j * e, h)
    return 0.5 * (dx + 1j * dy)


# ---------------------------------------------------------------------------
# real-coordinate polynomials (for the JSON "polynomial" kind)
# ---------------------------------------------------------------------------

class Poly:
    """Polynomial in real coordinates x_1..x_{2n} with complex coefficients.

    Coordinates relate to z by z_k = x_{2k-1} + i x_{2k}.
    """

    def __init__(self, n, terms):
        # terms: dict exponent-tuple (length 2n) -> complex coefficient
        self.n = n
        self.terms = {tuple(e): complex(c) for e, c in terms.items() if c != 0}

    @classmethod
    def from_spec(cls, n, spec_terms):
        terms = {}
        for t in spec_terms:
            e = tuple(int(k) for k in t["monomial"])
            if len(e) != 2 * n:
                raise ValidationError(
                    f"monomial length {len(e)} != 2n = {2 * n}")
            terms[e] = terms.get(e, 0) + complex(t["coeff"])
        return cls(n, terms)

    def eval(self, z):
        x = np.empty(2 * self.n)
        zc = np.asarray(z, dtype=complex)
        x[0::2] = zc.real
        x[1::2] = zc.imag
        total = 0j
        for e, c in self.terms.items():
            m = c
            for xk, ek in zip(x, e):
                if ek:
                    m *= xk ** ek
            total += m
        return total

    def diff_x(self, k):
        out = {}
        for e, c in self.terms.items():
            if e[k] == 0:
                continue
            e2 = list(e)
            e2[k] -= 1
            e2 = tuple(e2)
            out[e2] = out.get(e2, 0) + c * e[k]
        return Poly(self.n, out)

    def dz(self, lam):
        return _poly_comb(self.diff_x(2 * lam), self.diff_x(2 * lam + 1), -0.5j)

    def dzbar(self, lam):
        return _poly_comb(self.diff_x(2 * lam), self.diff_x(2 * lam + 1), +0.5j)


def _poly_comb(px, py, iy):
    out = dict((e, 0.5 * c) for e, c in px.terms.items())
    for e, c in py.terms.items():
        out[e] = out.get(e, 0) + iy * c
    return Poly(px.n, out)


# ---------------------------------------------------------------------------
# metric charts
# ---------------------------------------------------------------------------

class MetricChart:
    """Hermitian metric g_{a b-bar}(z) on a chart of C^n with derivative access.

    `g` maps a point to the n x n coefficient matrix.  Optional closed-form
    callbacks: `dg(z)[lam] = d g / d z_lam` and
    `d2g(z)[lam, mu] = d^2 g / (d z_lam d zbar_mu)`; otherwise central
    finite differences with relative step `h_z` are used.
    """

    def __init__(self, n, g, dg=None, d2g=None, h_z=DEFAULT_HZ, name="custom"):
        if n < 1:
            raise ValidationError("need n >= 1")
        self.n = n
        self._g = g
        self._dg = dg
        self._d2g = d2g
        self.h_z = h_z
        self.name = name

    @property
    def deriv_mode(self):
        return "closed-form" if (self._dg is not None and self._d2g is not None) \
            else "finite-difference"

    # -- raw data ------------------------------------------------------------
    def metric(self, z):
        g = np.asarray(self._g(np.asarray(z, dtype=complex)), dtype=complex)
        tol = 1e-12 if self.deriv_mode == "closed-form" else 1e-9
        scale = max(1.0, float(np.max(np.abs(g))))
        if float(np.max(np.abs(g - g.conj().T))) > tol * scale:
            raise SingularMetric(f"metric not Hermitian at z={z}")
        eigmin = float(np.linalg.eigvalsh(g).min())
        if eigmin <= 0:
            raise SingularMetric(f"metric not positive definite at z={z} "
                                 f"(min eigenvalue {eigmin:g})")
        return g

    def inverse_metric(self, z):
        return np.linalg.inv(self.metric(z))

    def det_metric(self, z):
        return float(np.linalg.det(self.metric(z)).real)

    def d_metric(self, z):
        """dg[lam][a, b] = d g_{a b-bar} / d z_lam."""
        if self._dg is not None:
            return np.asarray(self._dg(np.asarray(z, dtype=complex)), dtype=complex)
        h = _step(z, self.h_z)
        return np.array([fd_dz(self._g, z, lam, h) for lam in range(self.n)])

    def d2_metric_mixed(self, z):
        """d2g[lam, mu][a, b] = d^2 g_{a b-bar} / (d z_lam d zbar_mu)."""
        if self._d2g is not None:
            return np.asarray(self._d2g(np.asarray(z, dtype=complex)), dtype=complex)
        h = _step(z, self.h_z)
        out = np.empty((self.n, self.n, self.n, self.n), dtype=complex)
        for lam in range(self.n):
            def f_lam(w, lam=lam):
                return fd_dz(self._g, w, lam, _step(w, self.h_z))
            for mu in range(self.n):
                out[lam, mu] = fd_dzbar(f_lam, z, mu, h)
        return out

    # -- assembled objects -----------------------------------------------------
    def dbar_metric(self, z, dg=None):
        """dgbar[mu][a, b] = d g_{a b-bar} / d zbar_mu  (conjugate transpose
        of the holomorphic derivative, entry-wise in (a, b))."""
        dg = self.d_metric(z) if dg is None else dg
        return np.array([dg[mu].conj().T for mu in range(self.n)])

    def d_G_ginv(self, z):
        """D[lam][a, b] = d (G * ginv[a, b]) / d z_lam, by the product rule."""
        g = self.metric(z)
        ginv = np.linalg.inv(g)
        G = np.linalg.det(g).real
        dg = self.d_metric(z)
        out = np.empty((self.n, self.n, self.n), dtype=complex)
        for lam in range(self.n):
            dG = G * np.trace(ginv @ dg[lam])
            dginv = -ginv @ dg[lam] @ ginv
            out[lam] = dG * ginv + G * dginv
        return out

    def d2_G_ginv_mixed(self, z):
        """D2[mu, lam][a, b] = d^2 (G ginv[a, b]) / (d zbar_mu d z_lam)."""
        g = self.metric(z)
        ginv = np.linalg.inv(g)
        G = np.linalg.det(g).real
        dg = self.d_metric(z)
        dgbar = self.dbar_metric(z, dg)
        d2g = self.d2_metric_mixed(z)          # [lam, mu] = d^2/(dz_lam dzbar_mu)
        n = self.n
        dG = np.array([G * np.trace(ginv @ dg[lam]) for lam in range(n)])
        dGbar = dG.conj()
        dginv = np.array([-ginv @ dg[lam] @ ginv for lam in range(n)])
        dginvbar = np.array([-ginv @ dgbar[mu] @ ginv for mu in range(n)])
        out = np.empty((n, n, n, n), dtype=complex)
        for mu in range(n):
            for lam in range(n):
                d2g_ml = d2g[lam, mu]          # d^2 g/(dz_lam dzbar_mu)
                d2G = (dGbar[mu] * np.trace(ginv @ dg[lam])
                       + G * (np.trace(dginvbar[mu] @ dg[lam])
                              + np.trace(ginv @ d2g_ml)))
                d2ginv = -(dginvbar[mu] @ dg[lam] @ ginv
                           + ginv @ d2g_ml @ ginv
                           + ginv @ dg[lam] @ dginvbar[mu])
                out[mu, lam] = (d2G * ginv + dGbar[mu] * dginv[lam]
                                + dG[lam] * dginvbar[mu] + G * d2ginv)
        return out


def euclidean_chart(n, h_z=DEFAULT_HZ):
    eye = np.eye(n, dtype=complex)
    zero3 = np.zeros((n, n, n), dtype=complex)
    zero4 = np.zeros((n, n, n, n), dtype=complex)
    return MetricChart(n, lambda z: eye, lambda z: zero3, lambda z: zero4,
                       h_z=h_z, name="euclidean")


def ball_chart(n, h_z=DEFAULT_HZ):
    """|dz|^2 / (1 - |z|^2)^2 on the unit ball."""
    eye = np.eye(n, dtype=complex)

    def g(z):
        s = float(np.vdot(z, z).real)
        return eye / (1.0 - s) ** 2

    def dg(z):
        s = float(np.vdot(z, z).real)
        f = 2.0 / (1.0 - s) ** 3
        return np.array([f * np.conj(z[lam]) * eye for lam in range(n)])

    def d2g(z):
        s = float(np.vdot(z, z).real)
        out = np.empty((n, n, n, n), dtype=complex)
        for lam in range(n):
            for mu in range(n):
                coef = 6.0 * np.conj(z[lam]) * z[mu] / (1.0 - s) ** 4
                if lam == mu:
                    coef = coef + 2.0 / (1.0 - s) ** 3
                out[lam, mu] = coef * eye
        return out

    return MetricChart(n, g, dg, d2g, h_z=h_z, name="ball")


def kahler_ball_chart(n, h_z=DEFAULT_HZ):
    """Metric with potential -log(1 - |z|^2) on the unit ball: genuinely
    Kahler, unlike the conformal :func:`ball_chart`."""

    def g(z):
        zc = np.asarray(z, dtype=complex)
        s = float(np.vdot(zc, zc).real)
        return (np.eye(n, dtype=complex) / (1.0 - s)
                + np.outer(np.conj(zc), zc) / (1.0 - s) ** 2)

    def dg(z):
        zc = np.asarray(z, dtype=complex)
        s = float(np.vdot(zc, zc).real)
        r2 = (1.0 - s) ** -2
        r3 = (1.0 - s) ** -3
        out = np.empty((n, n, n), dtype=complex)
        for lam in range(n):
            m = np.zeros((n, n), dtype=complex)
            m += np.conj(zc[lam]) * r2 * np.eye(n)
            m[:, lam] += np.conj(zc) * r2          # delta_{b lam} zbar_a
            m += 2.0 * np.conj(zc[lam]) * r3 * np.outer(np.conj(zc), zc)
            out[lam] = m
        return out

    def d2g(z):
        zc = np.asarray(z, dtype=complex)
        s = float(np.vdot(zc, zc).real)
        r2 = (1.0 - s) ** -2
        r3 = (1.0 - s) ** -3
        r4 = (1.0 - s) ** -4
        eye = np.eye(n, dtype=complex)
        out = np.empty((n, n, n, n), dtype=complex)
        for lam in range(n):
            for mu in range(n):
                m = np.zeros((n, n), dtype=complex)
                coef = (r2 if lam == mu else 0.0) + 2.0 * np.conj(zc[lam]) * zc[mu] * r3
                m += coef * eye
                # d/dzbar_mu of delta_{b lam} zbar_a r2
                col = np.zeros((n, n), dtype=complex)
                col[mu, lam] += r2
                col[:, lam] += np.conj(zc) * 2.0 * zc[mu] * r3
                m += col
                # d/dzbar_mu of 2 zbar_a z_b zbar_lam r3
                outer = np.outer(np.conj(zc), zc)
                m[mu, :] += 2.0 * zc * np.conj(zc[lam]) * r3
                m += 2.0 * outer * ((1.0 if lam == mu else 0.0) * r3
                                    + 3.0 * np.conj(zc[lam]) * zc[mu] * r4)
                out[lam, mu] = m
        return out

    return MetricChart(n, g, dg, d2g, h_z=h_z, name="kahler-ball")


def hopf_chart(n, h_z=DEFAULT_HZ):
    """|dz|^2 / |z|^2 away from the origin."""
    eye = np.eye(n, dtype=complex)

    def g(z):
        return eye / float(np.vdot(z, z).real)

    def dg(z):
        s = float(np.vdot(z, z).real)
        return np.array([-np.conj(z[lam]) / s ** 2 * eye for lam in range(n)])

    def d2g(z):
        s = float(np.vdot(z, z).real)
        out = np.empty((n, n, n, n), dtype=complex)
        for lam in range(n):
            for mu in range(n):
                coef = 2.0 * np.conj(z[lam]) * z[mu] / s ** 3
                if lam == mu:
                    coef = coef - 1.0 / s ** 2
                out[lam, mu] = coef * eye
        return out

    return MetricChart(n, g, dg, d2g, h_z=h_z, name="hopf")


def conformal_polynomial_chart(n, poly: Poly, h_z=DEFAULT_HZ):
    """g = phi(x) * I for a real-coordinate polynomial conformal factor."""
    eye = np.eye(n, dtype=complex)
    dzp = [poly.dz(lam) for lam in range(n)]
    d2p = [[poly.dz(lam).dzbar(mu) for mu in range(n)] for lam in range(n)]

    def g(z):
        return complex(poly.eval(z)).real * eye

    def dg(z):
        return np.array([dzp[lam].eval(z) * eye for lam in range(n)])

    def d2g(z):
        out = np.empty((n, n, n, n), dtype=complex)
        for lam in range(n):
            for mu in range(n):
                out[lam, mu] = d2p[lam][mu].eval(z) * eye
        return out

    return MetricChart(n, g, dg, d2g, h_z=h_z, name="polynomial")


def chart_from_json(spec) -> MetricChart:
    """Build a chart from {"kind": ..., "n": ..., "terms": [...]}."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    kind = spec["kind"]
    n = int(spec["n"])
    if kind == "euclidean":
        return euclidean_chart(n)
    if kind == "ball":
        return ball_chart(n)
    if kind == "hopf":
        return hopf_chart(n)
    if kind == "polynomial":
        return conformal_polynomial_chart(
            n, Poly.from_spec(n, spec["terms"]))
    raise ValidationError(f"unknown chart kind {kind!r}")


# ---------------------------------------------------------------------------
# defining functions
# ---------------------------------------------------------------------------

class DefiningFunctionSlice:
    """Real function psi(t, z) (t optional) with the derivatives the Levi
    curvatures need; missing callbacks fall back to finite differences.

    Callback shapes at (t, z): psi_z -> (n,), psi_t -> scalar,
    psi_zzbar -> (n, n) with [a, b] = d^2 psi/(dz_a dzbar_b),
    psi_tzbar -> (n,) with [a] = d^2 psi/(dt dzbar_a), psi_ttbar -> scalar.
    """

    def __init__(self, n, psi, *, static=False, psi_z=None, psi_t=None,
                 psi_zzbar=None, psi_tzbar=None, psi_ttbar=None,
                 h_z=DEFAULT_HZ, h_t=DEFAULT_HZ, diameter=2.0):
        self.n = n
        self._psi = psi
        self.static = static
        self._psi_z = psi_z
        self._psi_t = psi_t
        self._psi_zzbar = psi_zzbar
        self._psi_tzbar = psi_tzbar
        self._psi_ttbar = psi_ttbar
        self.h_z = h_z
        self.h_t = h_t
        self.diameter = diameter

    @classmethod
    def from_static(cls, n, psi_of_z, **kw):
        return cls(n, lambda t, z: psi_of_z(z), static=True, **kw)

    @classmethod
    def sphere(cls, n, radius=1.0, center=None):
        c = np.zeros(n, dtype=complex) if center is None else np.asarray(center, complex)

        def psi(z):
            w = np.asarray(z, complex) - c
            return float(np.vdot(w, w).real) - radius ** 2

        obj = cls.from_static(n, psi, diameter=2.0 * radius)
        obj._psi_z = lambda t, z: np.conj(np.asarray(z, complex) - c)
        obj._psi_zzbar = lambda t, z: np.eye(n, dtype=complex)
        obj._psi_t = lambda t, z: 0.0
        obj._psi_tzbar = lambda t, z: np.zeros(n, dtype=complex)
        obj._psi_ttbar = lambda t, z: 0.0
        return obj

    @classmethod
    def from_json(cls, spec):
        if isinstance(spec, str):
            spec = json.loads(spec)
        kind = spec["kind"]
        n = int(spec["n"])
        if kind == "ball":
            return cls.sphere(n, radius=float(spec.get("radius", 1.0)),
                              center=spec.get("center"))
        if kind == "polynomial":
            poly = Poly.from_spec(n, spec["terms"])
            obj = cls.from_static(n, lambda z: complex(poly.eval(z)).real)
            dz = [poly.dz(a) for a in range(n)]
            d2 = [[poly.dz(a).dzbar(b) for b in range(n)] for a in range(n)]
            obj._psi_z = lambda t, z: np.array([p.eval(z) for p in dz])
            obj._psi_zzbar = lambda t, z: np.array(
                [[d2[a][b].eval(z) for b in range(n)] for a in range(n)])
            obj._psi_t = lambda t, z: 0.0
            obj._psi_tzbar = lambda t, z: np.zeros(n, dtype=complex)
            obj._psi_ttbar = lambda t, z: 0.0
            return obj
        raise ValidationError(f"unknown defining-function kind {kind!r}")

    # -- evaluations ----------------------------------------------------------
    def value(self, t, z):
        return float(self._psi(t, np.asarray(z, dtype=complex)))

    def grad_z(self, t, z):
        if self._psi_z is not None:
            return np.asarray(self._psi_z(t, z), dtype=complex)
        h = _step(z, self.h_z)
        f = lambda w: self._psi(t, w)
        return np.array([fd_dz(f, z, a, h) for a in range(self.n)])

    def hess_zzbar(self, t, z):
        if self._psi_zzbar is not None:
            return np.asarray(self._psi_zzbar(t, z), dtype=complex)
        h = _step(z, self.h_z)

        out = np.empty((self.n, self.n), dtype=complex)
        for a in range(self.n):
            def fa(w, a=a):
                return fd_dz(lambda v: self._psi(t, v), w, a, _step(w, self.h_z))
            for b in range(self.n):
                out[a, b] = fd_dzbar(fa, z, b, h)
        return out

    def dt(self, t, z):
        if self.static:
            return 0.0
        if self._psi_t is not None:
            return complex(self._psi_t(t, z))
        return complex(fd_dz(lambda w: self._psi(complex(w[0]), z),
                             np.array([t], dtype=complex), 0, self.h_t))

    def dt_dzbar(self, t, z):
        if self.static:
            return np.zeros(self.n, dtype=complex)
        if self._psi_tzbar is not None:
            return np.asarray(self._psi_tzbar(t, z), dtype=complex)
        h = _step(z, self.h_z)

        def ft(w):
            return fd_dz(lambda s: self._psi(complex(s[0]), w),
                         np.array([t], dtype=complex), 0, self.h_t)
        return np.array([fd_dzbar(ft, z, b, h) for b in range(self.n)])

    def dt_dtbar(self, t, z):
        if self.static:
            return 0.0
        if self._psi_ttbar is not None:
            return float(np.real(self._psi_ttbar(t, z)))

        def f(s):
            return self._psi(complex(s[0]), z)
        ts = np.array([t], dtype=complex)
        val = fd_dzbar(lambda s: fd_dz(f, s, 0, self.h_t), ts, 0, self.h_t)
        return float(np.real(val))


# ---------------------------------------------------------------------------
# dimensional constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionalConstants:
    """c_n = 1/((n-1) Omega_n), Omega_n the area of the unit sphere in R^{2n}.

    Conversion table between Laplacian conventions (Euclidean chart):

        Delta (metric, used everywhere here)  =  -2 sum_a d^2/(dz_a dzbar_a)
        sum_a d^2/(dz_a dzbar_a)              =  (1/4) Delta_{R^{2n}}
        Delta                                 =  -(1/2) Delta_{R^{2n}}
    """

    n: int
    Omega_n: float
    c_n: float

    @classmethod
    def for_dim(cls, n):
        if n < 2:
            raise ValidationError("dimensional constants need n >= 2")
        omega = 2.0 * math.pi ** n / math.factorial(n - 1)
        return cls(n=n, Omega_n=omega, c_n=1.0 / ((n - 1) * omega))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

class ScalarField:
    """Scalar u(z) with complex gradient and mixed Hessian, FD by default."""

    def __init__(self, f, grad=None, hess_mixed=None, h_z=DEFAULT_HZ):
        self.f = f
        self._grad = grad
        self._hess = hess_mixed
        self.h_z = h_z

    def value(self, z):
        return self.f(np.asarray(z, dtype=complex))

    def grad(self, z):
        if self._grad is not None:
            return np.asarray(self._grad(z), dtype=complex)
        n = len(z)
        h = _step(z, self.h_z)
        return np.array([fd_dz(self.f, z, a, h) for a in range(n)])

    def hess_mixed(self, z):
        """H[a, b] = d^2 u / (dz_a dzbar_b)."""
        if self._hess is not None:
            return np.asarray(self._hess(z), dtype=complex)
        n = len(z)
        h = _step(z, self.h_z)
        out = np.empty((n, n), dtype=complex)
        for a in range(n):
            def fa(w, a=a):
                return fd_dz(self.f, w, a, _step(w, self.h_z))
            for b in range(n):
                out[a, b] = fd_dzbar(fa, z, b, h)
        return out


def kahler_residual(chart: MetricChart, z) -> float:
    """Finite-difference d-omega residual: max |dg[lam][a,b] - dg[a][lam,b]|.

    Always differenced from the raw metric callable so it stays independent
    of any closed-form derivative callbacks.
    """
    h = _step(z, chart.h_z)
    dg = np.array([fd_dz(chart._g, z, lam, h) for lam in range(chart.n)])
    res = 0.0
    for lam in range(chart.n):
        for a in range(chart.n):
            res = max(res, float(np.max(np.abs(dg[lam][a, :] - dg[a][lam, :]))))
    return res


def hodge_condition_residual(chart: MetricChart, z) -> np.ndarray:
    """I_a(z) = sum_b d(G ginv[a, b])/dz_b; all-zero iff d*omega = 0 there."""
    D = chart.d_G_ginv(z)
    return np.array([sum(D[b][a, b] for b in range(chart.n))
                     for a in range(chart.n)])


def laplacian_from_derivatives(chart, z, grad_u, hess_mixed_u):
    """Delta u = -2 [trace(ginv H) + R] from precomputed u-derivatives."""
    g = chart.metric(z)
    ginv = np.linalg.inv(g)
    G = np.linalg.det(g).real
    P = np.trace(ginv @ hess_mixed_u)
    I = hodge_condition_residual(chart, z)
    R = 0.5 * sum((I[b] / G) * np.conj(grad_u[b])
                  + np.conj(I[b] / G) * grad_u[b] for b in range(chart.n))
    return -2.0 * (P + R)


def laplacian_apply(chart: MetricChart, u, z):
    """Metric Laplacian of u at z; u is a ScalarField or a plain callable."""
    if not isinstance(u, ScalarField):
        u = ScalarField(u, h_z=chart.h_z)
    val = laplacian_from_derivatives(chart, z, u.grad(z), u.hess_mixed(z))
    if abs(val.imag) < 1e-9 * max(1.0, abs(val.real)):
        return float(val.real)
    return complex(val)


def _gradient_form(ginv, grad):
    """sum_{a,b} ginv[a, b] conj(grad[a]) grad[b]; real and > 0 away from
    critical points."""
    return float(np.real(np.conj(grad) @ ginv @ grad))


def _require_boundary(df, t, z):
    v = df.value(t, z)
    tol = 1e-8 * df.diameter
    if abs(v) > tol:
        raise NotOnBoundary(f"psi(t, z) = {v:g} exceeds tol {tol:g}")


def levi_k1(chart: MetricChart, df: DefiningFunctionSlice, t, z) -> complex:
    """First Levi coefficient: psi_t / |grad psi|_g on the boundary."""
    _require_boundary(df, t, z)
    grad = df.grad_z(t, z)
    ginv = chart.inverse_metric(z)
    S = _gradient_form(ginv, grad)
    if math.sqrt(abs(S)) < GRAD_TOL:
        raise ZeroGradient("grad_z psi vanishes at the boundary point")
    return complex(df.dt(t, z)) / math.sqrt(S)


def levi_k2(chart: MetricChart, df: DefiningFunctionSlice, t, z,
            reduced: bool = False) -> float:
    """Levi scalar curvature of the variation's total boundary at (t, z).

    The full form carries -1/2 |psi_t|^2 Delta_z psi with the complete metric
    Laplacian (valid for any Hermitian metric); with ``reduced=True`` the
    divergence-free shortcut +|psi_t|^2 tr(ginv H) is used instead, which is
    meaningful only where the Hodge residual vanishes.
    """
    _require_boundary(df, t, z)
    grad = df.grad_z(t, z)
    ginv = chart.inverse_metric(z)
    S = _gradient_form(ginv, grad)
    if math.sqrt(abs(S)) < GRAD_TOL:
        raise ZeroGradient("grad_z psi vanishes at the boundary point")
    psi_t = complex(df.dt(t, z))
    psi_ttbar = df.dt_dtbar(t, z)
    psi_tzbar = df.dt_dzbar(t, z)          # [a] = d^2 psi/(dt dzbar_a)
    hess = df.hess_zzbar(t, z)             # [a, b] = d^2 psi/(dz_a dzbar_b)
    # middle term: sum_{a,b} ginv[a,b] psi_zbar_a psi_{tbar z_b}
    #   with psi_{tbar z_b} = conj(d^2 psi/(dt dzbar_b)) for real psi
    cross = complex(np.conj(grad) @ ginv @ np.conj(psi_tzbar))
    num = psi_ttbar * S - 2.0 * (psi_t * cross).real
    if reduced:
        num += abs(psi_t) ** 2 * float(np.real(np.trace(ginv @ hess)))
    else:
        lap = laplacian_from_derivatives(chart, z, grad, hess)
        num -= 0.5 * abs(psi_t) ** 2 * float(np.real(lap))
    return float(num / S ** 1.5)


def scalar_W(chart: MetricChart, z, check_tol: float = 1e-6):
    """Divergence-curvature scalar W(z), by two routes that must agree.

    Route one is the direct second-derivative form

        W = (1/G) sum [ d^2(G ginv[a,b]) / (dzbar_a dz_b)
                        - (gmat[a,b]/G) conj(I_a) I_b ],

    route two contracts the zbar-derivative of the torsion trace built from
    the Christoffel symbols Gamma^al_{lam be} = sum ginv[ga, al] dg[lam][be, ga].
    """
    g = chart.metric(z)
    ginv = np.linalg.inv(g)
    G = np.linalg.det(g).real
    n = chart.n

    D2 = chart.d2_G_ginv_mixed(z)          # [mu, lam] = d^2/(dzbar_mu dz_lam)
    I = hodge_condition_residual(chart, z)
    direct = sum(D2[a, b][a, b] for a in range(n) for b in range(n))
    direct -= sum(g[a, b] / G * np.conj(I[a]) * I[b]
                  for a in range(n) for b in range(n))
    direct = float(np.real(direct)) / G

    via_torsion = _scalar_W_torsion(chart, z, g, ginv)
    if abs(direct - via_torsion) > check_tol * max(1.0, abs(direct)):
        raise AssertionError(
            f"W routes disagree: direct={direct!r}, torsion={via_torsion!r}")
    return direct


def _scalar_W_torsion(chart, z, g, ginv):
    n = chart.n
    dg = chart.d_metric(z)                  # [lam][a, b] = dg_{a b-bar}/dz_lam
    dgbar = chart.dbar_metric(z, dg)        # [mu][a, b] = dg_{a b-bar}/dzbar_mu
    d2g = chart.d2_metric_mixed(z)          # [lam, mu] = d^2 g/(dz_lam dzbar_mu)
    dginvbar = np.array([-ginv @ dgbar[mu] @ ginv for mu in range(n)])

    # Gamma[lam, be, al] = Gamma^al_{lam be} = sum_ga ginv[ga, al] dg[lam][be, ga]
    def gamma(ginv_, dg_):
        return np.einsum("ga,lbg->lba", ginv_, dg_)

    Gm = gamma(ginv, dg)
    # T_al = sum_lam (Gamma^lam_{lam al} - Gamma^lam_{al lam})
    # dT_al/dzbar_mu needs the zbar-derivative of Gamma:
    #   dGamma[mu][lam, be, al]
    dGm = np.empty((n, n, n, n), dtype=complex)
    for mu in range(n):
        term1 = np.einsum("ga,lbg->lba", dginvbar[mu], dg)
        term2 = np.einsum("ga,lbg->lba", ginv, d2g[:, mu])
        dGm[mu] = term1 + term2
    # torsion trace with the slot order that reproduces the direct local form
    # (the opposite order flips the sign of W on every conformal metric)
    dT = np.empty((n, n), dtype=complex)    # [mu, al] = dT_al/dzbar_mu
    for mu in range(n):
        dT[mu] = np.einsum("all->a", dGm[mu]) - np.einsum("lal->a", dGm[mu])
    W = sum(ginv[b, a] * dT[b, a] for a in range(n) for b in range(n))
    return float(np.real(W))
