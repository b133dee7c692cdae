"""Test-function spaces over R and Qp, closed under the psi-Fourier transform.

p-adic side: finite sums of (possibly psi-twisted) ball indicators,
    c * psi(b*x) * 1_{a + p^m Zp}(x),
canonicalized so that supports are pairwise disjoint or identical.  The
Fourier transform is an exact endomap of this representation.

Real side: the Gauss-Hermite family P(x-c) e^{-pi a (x-c)^2} e^{2 pi i b (x-c)}
(closed under the transform, computed symbolically) plus smooth bumps with
explicit compact support, whose transforms are certified numeric kernels.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .localfield import LocalField, TWO_PI, int_valuation

# ---------------------------------------------------------------------------
# p-adic ball algebra
# ---------------------------------------------------------------------------


def reduce_mod(field: LocalField, x: Fraction, level: int) -> Fraction:
    """Canonical representative of x modulo p^level Zp: the unique t with
    denominator a power of p, 0 <= t < p^level, and x - t in p^level Zp."""
    x = field.element(x)
    scaled = x / Fraction(field.p) ** level
    return field.frac_part(scaled) * Fraction(field.p) ** level


@dataclass(frozen=True)
class BallTerm:
    """coeff * psi(twist * x) * 1_{center + p^level Zp}(x)."""

    coeff: complex
    center: Fraction
    level: int
    twist: Fraction = Fraction(0)

    def ball_contains(self, field: LocalField, x: Fraction) -> bool:
        return field.valuation(x - self.center) >= self.level

    def contains_zero(self, field: LocalField) -> bool:
        return field.valuation(self.center) >= self.level

    def min_valuation(self, field: LocalField):
        """Smallest valuation attained on the ball (ball must avoid 0 or be
        a full ball p^m Zp, where the min over nonzero points is m ... inf)."""
        vc = field.valuation(self.center)
        return min(vc, self.level)

    def constancy_level(self, field: LocalField) -> int:
        if self.twist == 0:
            return self.level
        tv = field.valuation(self.twist)
        return max(self.level, -int(tv))


class PadicTestFunction:
    """Finite linear combination of twisted ball indicators on Qp."""

    def __init__(self, field: LocalField, terms):
        if not field.is_padic:
            raise ValueError("PadicTestFunction requires a p-adic field")
        self.field = field
        self.terms = self._canonicalize(list(terms))

    # -- canonicalization ---------------------------------------------------

    def _canonicalize(self, terms):
        field = self.field
        p = field.p
        # normalize centers/twists to canonical residue representatives
        work = []
        for t in terms:
            if t.coeff == 0:
                continue
            c = reduce_mod(field, field.element(t.center), t.level)
            mv = min(field.valuation(c) if c != 0 else t.level, t.level)
            b = field.element(t.twist)
            if b != 0:
                b = reduce_mod(field, b, -mv)
            work.append(BallTerm(complex(t.coeff), c, t.level, b))
        # split until any two supports are disjoint or identical
        changed = True
        while changed:
            changed = False
            out = []
            for i, t in enumerate(work):
                split_level = None
                for j, u in enumerate(work):
                    if i == j or t.level >= u.level:
                        continue
                    if field.valuation(u.center - t.center) >= t.level:
                        split_level = True
                        break
                if split_level:
                    changed = True
                    for d in range(p):
                        c2 = reduce_mod(
                            field,
                            t.center + Fraction(d) * Fraction(p) ** t.level,
                            t.level + 1,
                        )
                        out.append(BallTerm(t.coeff, c2, t.level + 1, t.twist))
                else:
                    out.append(t)
            work = out
        # re-normalize twists (min valuation may have changed) and merge
        merged = {}
        for t in work:
            mv = min(
                field.valuation(t.center) if t.center != 0 else t.level, t.level
            )
            b = t.twist
            if b != 0:
                b = reduce_mod(field, b, -mv)
            key = (t.center, t.level, b)
            merged[key] = merged.get(key, 0j) + t.coeff
        result = tuple(
            BallTerm(v, c, m, b)
            for (c, m, b), v in sorted(
                merged.items(), key=lambda kv: (kv[0][1], kv[0][0], kv[0][2])
            )
            if abs(v) > 0.0
        )
        return result

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def zero(field: LocalField) -> "PadicTestFunction":
        return PadicTestFunction(field, [])

    @staticmethod
    def ball(field: LocalField, center, level: int, coeff=1.0) -> "PadicTestFunction":
        return PadicTestFunction(
            field, [BallTerm(complex(coeff), field.element(center), level)]
        )

    @staticmethod
    def twisted_ball(
        field: LocalField, center, level: int, twist, coeff=1.0
    ) -> "PadicTestFunction":
        return PadicTestFunction(
            field,
            [
                BallTerm(
                    complex(coeff),
                    field.element(center),
                    level,
                    field.element(twist),
                )
            ],
        )

    @staticmethod
    def shell(field: LocalField, j: int, coeff=1.0) -> "PadicTestFunction":
        """Indicator of the shell {v(x) = j} = union of (p-1) balls."""
        p = field.p
        terms = [
            BallTerm(complex(coeff), Fraction(r) * Fraction(p) ** j, j + 1)
            for r in range(1, p)
        ]
        return PadicTestFunction(field, terms)

    @staticmethod
    def unit_ball(field: LocalField) -> "PadicTestFunction":
        return PadicTestFunction.ball(field, 0, 0)

    @staticmethod
    def unit_shell(field: LocalField) -> "PadicTestFunction":
        return PadicTestFunction.shell(field, 0)

    # -- algebra --------------------------------------------------------------

    def __add__(self, other: "PadicTestFunction") -> "PadicTestFunction":
        return PadicTestFunction(self.field, list(self.terms) + list(other.terms))

    def __rmul__(self, scalar) -> "PadicTestFunction":
        return PadicTestFunction(
            self.field,
            [BallTerm(t.coeff * scalar, t.center, t.level, t.twist) for t in self.terms],
        )

    def __neg__(self):
        return (-1.0) * self

    def is_zero(self) -> bool:
        return not self.terms

    def scale_argument(self, a) -> "PadicTestFunction":
        """x -> f(a*x), exact: ball shifts by -v(a), twist scales by a."""
        a = self.field.element(a)
        if a == 0:
            raise ValueError("scaling by 0")
        va = self.field.valuation(a)
        return PadicTestFunction(
            self.field,
            [
                BallTerm(t.coeff, t.center / a, t.level - va, t.twist * a)
                for t in self.terms
            ],
        )

    def translate_argument(self, h) -> "PadicTestFunction":
        """x -> f(x + h)."""
        h = self.field.element(h)
        return PadicTestFunction(
            self.field,
            [
                BallTerm(
                    t.coeff * self.field.psi(t.twist * h),
                    t.center - h,
                    t.level,
                    t.twist,
                )
                for t in self.terms
            ],
        )

    # -- queries ---------------------------------------------------------------

    def eval(self, x) -> complex:
        x = self.field.element(x)
        total = 0j
        for t in self.terms:
            if t.ball_contains(self.field, x):
                val = t.coeff
                if t.twist != 0:
                    val *= self.field.psi(t.twist * x)
                total += val
        return total

    def __call__(self, x):
        return self.eval(x)

    def level(self) -> int:
        """Certificate: constant on cosets of p^level per coordinate."""
        if not self.terms:
            return 0
        return max(t.constancy_level(self.field) for t in self.terms)

    def supports_avoid_zero(self) -> bool:
        return all(not t.contains_zero(self.field) for t in self.terms)

    def support_shells(self):
        """Sorted list of valuations j with f not identically 0 on {v=j};
        requires supports to avoid 0 (finite shell list)."""
        if not self.supports_avoid_zero():
            raise ValueError("support touches 0: infinite shell range")
        return sorted({int(self.field.valuation(t.center)) for t in self.terms})

    def support_balls(self):
        return [(t.center, t.level) for t in self.terms]

    def max_level(self) -> int:
        return max((t.level for t in self.terms), default=0)

    def shell_unit_level(self, j: int) -> int:
        """On the shell {v=j}, writing x = p^j u, the constancy level of
        u -> f(p^j u) on the units (0 if f vanishes there)."""
        lev = 0
        for t in self.terms:
            if t.contains_zero(self.field):
                if j >= t.level:
                    lev = max(lev, t.constancy_level(self.field) - j, 0)
            elif self.field.valuation(t.center) == j:
                lev = max(lev, t.constancy_level(self.field) - j, 0)
        return lev

    def fourier(self, sign: int = +1) -> "PadicTestFunction":
        """psi-Fourier transform (sign=+1) or psi^{-1}-transform (sign=-1);
        exact on the twisted-ball representation."""
        p = self.field.p
        out = []
        for t in self.terms:
            vol = float(Fraction(1, 1) / Fraction(p) ** t.level)
            coeff = t.coeff * vol * self.field.psi(t.center * t.twist)
            if sign > 0:
                out.append(BallTerm(coeff, -t.twist, -t.level, t.center))
            else:
                out.append(BallTerm(coeff, t.twist, -t.level, -t.center))
        return PadicTestFunction(self.field, out)

    def l2_norm_sq(self) -> float:
        """Exact int |f|^2 dx (terms on a common ball pair up with a
        character integral; disjoint supports add)."""
        field = self.field
        by_ball = {}
        for t in self.terms:
            by_ball.setdefault((t.center, t.level), []).append(t)
        total = 0.0
        for (c, m), ts in by_ball.items():
            vol = float(Fraction(1, field.p**m)) if m >= 0 else float(
                Fraction(field.p ** (-m))
            )
            for t1 in ts:
                for t2 in ts:
                    db = t1.twist - t2.twist
                    if db == 0:
                        total += (t1.coeff * t2.coeff.conjugate()).real * vol
                    else:
                        # int_{ball} psi(db * x) dx
                        if field.valuation(db) >= -m:
                            total += (
                                t1.coeff * t2.coeff.conjugate() * field.psi(db * c)
                            ).real * vol
        return total

    def __repr__(self):
        body = " + ".join(
            f"{t.coeff:.3g}*psi({t.twist}x)*1[{t.center}+p^{t.level}]"
            if t.twist
            else f"{t.coeff:.3g}*1[{t.center}+p^{t.level}]"
            for t in self.terms
        )
        return f"PadicTestFunction({self.field}, {body or '0'})"


# ---------------------------------------------------------------------------
# real test functions
# ---------------------------------------------------------------------------


def _poly_eval(coeffs, z):
    acc = np.zeros_like(z, dtype=complex) if isinstance(z, np.ndarray) else 0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _poly_deriv(coeffs):
    return tuple(c * k for k, c in enumerate(coeffs) if k >= 1)


def _poly_shift_mul(coeffs):  # multiply by z
    return (0j,) + tuple(coeffs)


def _poly_add(a, b):
    n = max(len(a), len(b))
    a = tuple(a) + (0j,) * (n - len(a))
    b = tuple(b) + (0j,) * (n - len(b))
    return tuple(x + y for x, y in zip(a, b))


def _poly_scale(coeffs, s):
    return tuple(c * s for c in coeffs)


@dataclass(frozen=True)
class GaussHermite:
    """P(x-c) * exp(-pi a (x-c)^2) * exp(2 pi i b (x-c)), P complex polynomial.

    Closed under the psi-Fourier transform (Hermite-type recursion), under
    differentiation, and under argument scaling/translation.
    """

    scale: float  # a > 0
    center: float = 0.0
    modulation: float = 0.0  # b
    coeffs: tuple = (1.0 + 0j,)

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("gaussian scale must be positive")

    def eval(self, x):
        z = np.asarray(x, dtype=float) - self.center
        val = (
            _poly_eval(self.coeffs, z)
            * np.exp(-math.pi * self.scale * z * z)
            * np.exp(2j * math.pi * self.modulation * z)
        )
        return val if isinstance(x, np.ndarray) else complex(val)

    def __call__(self, x):
        return self.eval(x)

    def fourier(self, sign: int = +1) -> "GaussHermite":
        a, c, b = self.scale, self.center, self.modulation
        # G(eta) = int P(z) e^{-pi a z^2} e^{2 pi i eta z} dz = Q(eta) e^{-pi eta^2/a}
        base = (a**-0.5 + 0j,)
        mono = base
        q_total = _poly_scale(base, self.coeffs[0])
        for k in range(1, len(self.coeffs)):
            d = _poly_deriv(mono)
            drag = _poly_scale(_poly_shift_mul(mono), -TWO_PI / a)
            mono = _poly_scale(_poly_add(d, drag), 1.0 / (2j * math.pi))
            q_total = _poly_add(q_total, _poly_scale(mono, self.coeffs[k]))
        phase = cmath.exp(-2j * math.pi * c * b)
        out = GaussHermite(1.0 / a, -b, c, _poly_scale(q_total, phase))
        return out if sign > 0 else out.negate_argument()

    def negate_argument(self) -> "GaussHermite":
        coeffs = tuple(c * (-1) ** k for k, c in enumerate(self.coeffs))
        return GaussHermite(self.scale, -self.center, -self.modulation, coeffs)

    def scale_argument(self, s: float) -> "GaussHermite":
        # x -> f(s*x)
        s = float(s)
        if s == 0:
            raise ValueError("scaling by 0")
        coeffs = tuple(c * s**k for k, c in enumerate(self.coeffs))
        return GaussHermite(
            self.scale * s * s, self.center / s, self.modulation * s, coeffs
        )

    def translate_argument(self, h: float) -> "GaussHermite":
        return GaussHermite(self.scale, self.center - h, self.modulation, self.coeffs)

    def derivative(self) -> "GaussHermite":
        p_prime = _poly_deriv(self.coeffs)
        drag = _poly_add(
            _poly_scale(_poly_shift_mul(self.coeffs), -TWO_PI * self.scale),
            _poly_scale(self.coeffs, 2j * math.pi * self.modulation),
        )
        return GaussHermite(
            self.scale, self.center, self.modulation, _poly_add(p_prime, drag)
        )

    def support_window(self, eps: float = 1e-14):
        amp = sum(abs(c) for c in self.coeffs)
        r = 1.0
        for _ in range(60):
            tail = amp * max(1.0, r) ** (len(self.coeffs) - 1) * math.exp(
                -math.pi * self.scale * r * r
            ) * (1.0 + 1.0 / (TWO_PI * self.scale * max(r, 1e-3)))
            if tail < eps:
                break
            r *= 1.25
        return (self.center - r, self.center + r)

    def freq(self) -> float:
        return abs(self.modulation)

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)


_STANDARD_BUMP_DERIV_L1 = {}


def _standard_bump_deriv_l1(k: int) -> float:
    """L1 norm of the k-th derivative of exp(1 - 1/(1-t^2)) on (-1,1)."""
    if k in _STANDARD_BUMP_DERIV_L1:
        return _STANDARD_BUMP_DERIV_L1[k]
    import sympy as sp

    t = sp.Symbol("t")
    g = sp.exp(1 - 1 / (1 - t**2))
    d = sp.diff(g, t, k)
    fn = sp.lambdify(t, d, "numpy")
    # interior composite Simpson; integrand vanishes to infinite order at +-1
    xs = np.linspace(-1 + 1e-9, 1 - 1e-9, 20001)
    with np.errstate(over="ignore", invalid="ignore"):
        ys = np.abs(np.nan_to_num(fn(xs), nan=0.0, posinf=0.0, neginf=0.0))
    val = float(np.trapz(ys, xs))
    _STANDARD_BUMP_DERIV_L1[k] = val
    return val


@dataclass(frozen=True)
class Bump:
    """amp * exp(1 - 1/(1 - t^2)), t = (x - center)/radius; support exactly
    [center - radius, center + radius]."""

    center: float
    radius: float
    amp: complex = 1.0 + 0j

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")

    def eval(self, x):
        x_arr = np.asarray(x, dtype=float)
        t = (x_arr - self.center) / self.radius
        inside = np.abs(t) < 1.0
        out = np.zeros(t.shape, dtype=complex)
        with np.errstate(divide="ignore", over="ignore"):
            tt = np.where(inside, t, 0.0)
            out[inside] = self.amp * np.exp(1.0 - 1.0 / (1.0 - tt[inside] ** 2))
        return out if isinstance(x, np.ndarray) else complex(out)

    def __call__(self, x):
        return self.eval(x)

    def support_window(self, eps: float = 0.0):
        return (self.center - self.radius, self.center + self.radius)

    def freq(self) -> float:
        return 0.0

    def deriv_l1(self, k: int) -> float:
        return abs(self.amp) * self.radius ** (1 - k) * _standard_bump_deriv_l1(k)

    def l1_norm(self) -> float:
        return abs(self.amp) * self.radius * _standard_bump_deriv_l1(0)

    def fourier(self, sign: int = +1) -> "FourierKernel":
        return FourierKernel(self, sign)

    def scale_argument(self, s: float) -> "Bump":
        s = float(s)
        if s == 0:
            raise ValueError("scaling by 0")
        return Bump(self.center / s, self.radius / abs(s), self.amp)

    def translate_argument(self, h: float) -> "Bump":
        return Bump(self.center - h, self.radius, self.amp)

    def is_zero(self):
        return self.amp == 0


class FourierKernel:
    """Numerically evaluated psi-Fourier transform of a compactly supported
    smooth source, with a tabulated decay certificate
    |K(xi)| <= min_k ||source^(k)||_1 / (2 pi |xi|)^k."""

    def __init__(self, source, sign: int):
        self.source = source
        self.sign = sign

    def eval(self, xi):
        from .integrate import integrate_interval, QuadratureSpec

        xs = np.atleast_1d(np.asarray(xi, dtype=float))
        lo, hi = self.source.support_window(1e-16)
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-11, max_subdivisions=400)
        out = np.empty(xs.shape, dtype=complex)
        for i, x in enumerate(xs):
            f = lambda y: self.source.eval(y) * np.exp(
                2j * math.pi * self.sign * x * y
            )
            res = integrate_interval(
                f, lo, hi, spec, freq=abs(x) + getattr(self.source, "freq", lambda: 0.0)()
            )
            out[i] = res.value
        return out if isinstance(xi, np.ndarray) else complex(out[0])

    def __call__(self, xi):
        return self.eval(xi)

    def decay_bound(self, xi: float) -> float:
        xi = abs(xi)
        best = self._l1(0)
        if xi > 0:
            for k in (2, 4):
                best = min(best, self._l1(k) / (TWO_PI * xi) ** k)
        return best

    def _l1(self, k: int) -> float:
        if hasattr(self.source, "deriv_l1"):
            return self.source.deriv_l1(k) if k else self.source.l1_norm()
        raise ValueError("source carries no derivative-norm certificate")

    def support_window(self, eps: float = 1e-12):
        # radius R with int_{|xi|>R} bound dxi < eps, using the k=4 bound
        c4 = self._l1(4) / TWO_PI**4
        r = max(1.0, (3.0 * c4 / max(eps, 1e-300)) ** (1.0 / 3.0) / 1.0)
        # tail of c4/xi^4 beyond R is c4/(3 R^3)
        while c4 / (3.0 * r**3) > eps:
            r *= 1.25
        return (-r, r)

    def tail_l1_bound(self, r: float) -> float:
        """Bound on int_{|xi| > r} |K| dxi."""
        c4 = self._l1(4) / TWO_PI**4
        c2 = self._l1(2) / TWO_PI**2
        return 2.0 * min(c4 / (3.0 * r**3), c2 / r) if r > 0 else math.inf

    def freq(self) -> float:
        lo, hi = self.source.support_window(1e-16)
        return max(abs(lo), abs(hi))

    def fourier(self, sign: int = +1):
        return _NumericSecondKernel(self, sign)

    def is_zero(self):
        return getattr(self.source, "is_zero", lambda: False)()


class _NumericSecondKernel(FourierKernel):
    """Fourier transform of a numeric kernel (used by inversion checks)."""

    def eval(self, xi):
        from .integrate import integrate_interval, QuadratureSpec

        xs = np.atleast_1d(np.asarray(xi, dtype=float))
        lo, hi = self.source.support_window(1e-12)
        spec = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-9, max_subdivisions=2000)
        out = np.empty(xs.shape, dtype=complex)
        for i, x in enumerate(xs):
            f = lambda y: self.source.eval(np.asarray(y)) * np.exp(
                2j * math.pi * self.sign * x * y
            )
            res = integrate_interval(
                f, lo, hi, spec, freq=abs(x) + self.source.freq(), vectorized=True
            )
            out[i] = res.value
        return out if isinstance(xi, np.ndarray) else complex(out[0])


class RealSum:
    """Linear combination of real test functions."""

    def __init__(self, parts):
        self.parts = [(complex(c), f) for c, f in parts]

    def eval(self, x):
        vals = sum(c * np.asarray(f.eval(x)) for c, f in self.parts)
        return vals if isinstance(x, np.ndarray) else complex(vals)

    def __call__(self, x):
        return self.eval(x)

    def fourier(self, sign: int = +1):
        return RealSum([(c, f.fourier(sign)) for c, f in self.parts])

    def support_window(self, eps: float = 1e-14):
        n = max(len(self.parts), 1)
        los, his = zip(*(f.support_window(eps / n) for _, f in self.parts))
        return (min(los), max(his))

    def freq(self):
        return max((f.freq() for _, f in self.parts), default=0.0)

    def scale_argument(self, s):
        return RealSum([(c, f.scale_argument(s)) for c, f in self.parts])

    def translate_argument(self, h):
        return RealSum([(c, f.translate_argument(h)) for c, f in self.parts])

    def is_zero(self):
        return all(f.is_zero() for _, f in self.parts)


# ---------------------------------------------------------------------------
# dispatchers and checks
# ---------------------------------------------------------------------------


def fourier(f, sign: int = +1):
    """psi-Fourier transform; sign=-1 gives the psi^{-1}-transform."""
    return f.fourier(sign)


def eval_tf(f, x):
    return f.eval(x)


def fourier_inverse_check(f, n_probes: int = 100, seed: int = 7) -> float:
    """Max pointwise discrepancy of F_{psi^-1}(F_psi(f)) against f on a probe
    set covering the support."""
    import random

    rng = random.Random(seed)
    g = f.fourier(+1).fourier(-1)
    if isinstance(f, PadicTestFunction):
        field = f.field
        probes = []
        for t in f.terms:
            probes.append(t.center)
            for _ in range(max(1, n_probes // max(len(f.terms), 1))):
                probes.append(
                    t.center
                    + Fraction(rng.randint(0, field.p**3 - 1), field.p**2)
                    * Fraction(field.p) ** t.level
                )
        probes.append(Fraction(0))
        while len(probes) < n_probes:
            probes.append(field.sample(rng))
        return max(abs(g.eval(x) - f.eval(x)) for x in probes[:n_probes])
    lo, hi = f.support_window(1e-12)
    lo, hi = lo - 0.5, hi + 0.5
    probes = [lo + (hi - lo) * rng.random() for _ in range(n_probes)]
    return max(abs(complex(g.eval(x)) - complex(f.eval(x))) for x in probes)


# ---------------------------------------------------------------------------
# product functions on k^x x k^(d-1)
# ---------------------------------------------------------------------------


class ProductTestFunction:
    """Product of coordinate test functions; coordinate 0 is the k^x
    coordinate and must carry an avoid-zero support certificate."""

    def __init__(self, field: LocalField, coords, kx_index: int = 0):
        self.field = field
        self.coords = list(coords)
        self.kx_index = kx_index
        kx = self.coords[kx_index]
        if field.is_padic:
            if not isinstance(kx, PadicTestFunction):
                raise TypeError("p-adic product needs PadicTestFunction coords")
            if not kx.supports_avoid_zero():
                raise ValueError("k^x coordinate support must avoid 0")
        else:
            lo, hi = kx.support_window(1e-15)
            if lo <= 0.0 <= hi:
                raise ValueError(
                    "k^x coordinate support must avoid 0 (use shifted bumps)"
                )

    def eval(self, xs) -> complex:
        if len(xs) != len(self.coords):
            raise ValueError("coordinate count mismatch")
        val = 1.0 + 0j
        for f, x in zip(self.coords, xs):
            val *= f.eval(x)
            if val == 0:
                return 0j
        return val

    def __call__(self, xs):
        return self.eval(xs)

    @property
    def dim(self):
        return len(self.coords)


# ---------------------------------------------------------------------------
# descriptor grammar (CLI)
# ---------------------------------------------------------------------------


def parse_test_function(field: LocalField, text: str):
    """Parse a test-function descriptor.

    Qp:  ball(a,m) | twistball(a,m,c) | shell(j) | unitshell() | sums with '+'
    R:   gauss(a) | gauss(a,c,b) | poly[c0,c1,...]*gauss(a) | bump(r) | bump(c,r)
    Scalar prefixes like '2*ball(0,1)' are allowed; rationals use '/'.
    """
    text = text.strip()
    if field.is_padic:
        parts = [p.strip() for p in text.split("+")]
        total = PadicTestFunction.zero(field)
        for part in parts:
            total = total + _parse_padic_atom(field, part)
        return total
    return _parse_real_atom(text)


def _split_coeff(part: str):
    if "*" in part and not part.startswith("poly"):
        head, rest = part.split("*", 1)
        try:
            return complex(Fraction(head)), rest
        except ValueError:
            return 1.0 + 0j, part
    return 1.0 + 0j, part


def _parse_padic_atom(field: LocalField, part: str) -> PadicTestFunction:
    coeff, rest = _split_coeff(part)
    name, args = _parse_call(rest)
    if name == "ball":
        return PadicTestFunction.ball(field, Fraction(args[0]), int(args[1]), coeff)
    if name == "twistball":
        return PadicTestFunction.twisted_ball(
            field, Fraction(args[0]), int(args[1]), Fraction(args[2]), coeff
        )
    if name == "shell":
        return PadicTestFunction.shell(field, int(args[0]), coeff)
    if name == "unitshell":
        return PadicTestFunction.shell(field, 0, coeff)
    if name == "unitball":
        return PadicTestFunction.ball(field, 0, 0, coeff)
    raise ValueError(f"unknown p-adic test function {part!r}")


def _parse_call(text: str):
    if "(" not in text or not text.endswith(")"):
        raise ValueError(f"bad test-function descriptor {text!r}")
    name, inner = text.split("(", 1)
    inner = inner[:-1].strip()
    args = [a.strip() for a in inner.split(",")] if inner else []
    return name.strip(), args


def _parse_real_atom(text: str):
    if text.startswith("poly["):
        close = text.index("]")
        coeff_list = [complex(c) for c in text[5:close].split(",")]
        rest = text[close + 1 :]
        if not rest.startswith("*gauss"):
            raise ValueError(f"poly[...] must be followed by *gauss(a): {text!r}")
        name, args = _parse_call(rest[1:])
        g = _gauss_from_args(args)
        return GaussHermite(g.scale, g.center, g.modulation, tuple(coeff_list))
    name, args = _parse_call(text)
    if name == "gauss":
        return _gauss_from_args(args)
    if name == "bump":
        if len(args) == 1:
            return Bump(0.0, float(args[0]))
        return Bump(float(args[0]), float(args[1]))
    raise ValueError(f"unknown real test function {text!r}")


def _gauss_from_args(args):
    a = float(args[0])
    c = float(args[1]) if len(args) > 1 else 0.0
    b = float(args[2]) if len(args) > 2 else 0.0
    return GaussHermite(a, c, b)
