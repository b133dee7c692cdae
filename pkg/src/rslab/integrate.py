"""The two integration engines: exact p-adic summation and adaptive real
quadrature, plus k^x shell summation with geometric-tail closure.

The p-adic path is exact: integrands must carry local-constancy level
certificates, and every value is a finite sum of term values times exact
coset volumes (only the final complex rounding remains).  Tails over deep
shells are closed by a caller-certified geometric ratio, never guessed.

The real path is iterated adaptive Gauss-Kronrod (G7/K15) with oscillation
pre-subdivision, honest per-panel error estimates, and deterministic
panel ordering.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .localfield import LocalField

EXACT = "exact"
TAIL_CLOSED = "tail_closed"
QUADRATURE = "quadrature"

_EXACTNESS_RANK = {EXACT: 0, TAIL_CLOSED: 1, QUADRATURE: 2}


class DivergenceError(ValueError):
    """A certified tail fails to converge (|ratio| >= 1)."""


class CertificateError(ValueError):
    """Missing level/decay certificate on the exact path."""


class AccuracyError(RuntimeError):
    """Requested tolerance not reached; carries the best estimate."""

    def __init__(self, result):
        super().__init__(
            f"accuracy not reached: error bound {result.error_bound:.3e}"
        )
        self.result = result


@dataclass
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 4000
    truncation_threshold: float = 1e-14

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")

    @staticmethod
    def for_dim(d: int) -> "QuadratureSpec":
        if d <= 2:
            return QuadratureSpec(abs_tol=1e-10, rel_tol=1e-8)
        return QuadratureSpec(abs_tol=1e-7, rel_tol=1e-5, max_subdivisions=800)


@dataclass
class IntegralResult:
    value: complex
    error_bound: float
    exactness: str = QUADRATURE

    def __post_init__(self):
        if self.error_bound < 0:
            raise ValueError("error bound must be nonnegative")

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        ex = max(self.exactness, other.exactness, key=_EXACTNESS_RANK.get)
        return IntegralResult(
            self.value + other.value, self.error_bound + other.error_bound, ex
        )

    def scaled(self, c) -> "IntegralResult":
        return IntegralResult(self.value * c, self.error_bound * abs(c), self.exactness)

    def times(self, other: "IntegralResult") -> "IntegralResult":
        err = (
            abs(self.value) * other.error_bound
            + abs(other.value) * self.error_bound
            + self.error_bound * other.error_bound
        )
        ex = max(self.exactness, other.exactness, key=_EXACTNESS_RANK.get)
        return IntegralResult(self.value * other.value, err, ex)


def result_zero(exactness=EXACT) -> IntegralResult:
    return IntegralResult(0j, 0.0, exactness)


def result_exact(value, abs_mass=None) -> IntegralResult:
    mass = abs(value) if abs_mass is None else abs_mass
    return IntegralResult(complex(value), 2.3e-16 * mass + 1e-300, EXACT)


# ---------------------------------------------------------------------------
# p-adic exact engine
# ---------------------------------------------------------------------------


def ball_volume(field: LocalField, level: int) -> Fraction:
    return Fraction(1, 1) / Fraction(field.p) ** level


def ball_coset_reps(field: LocalField, center: Fraction, level: int, refinement: int):
    """Representatives of the cosets of p^refinement Zp inside the ball
    center + p^level Zp."""
    if refinement < level:
        raise CertificateError("refinement must be at least the ball level")
    step = Fraction(field.p) ** level
    for i in range(field.p ** (refinement - level)):
        yield center + i * step


def unit_reps(field: LocalField, m: int):
    """Representatives of Zp^x modulo 1 + p^m-structure: the units of Z/p^m
    (m >= 1); each carries d^x-volume p^{-m}."""
    p = field.p
    for u in range(1, p**m):
        if u % p != 0:
            yield Fraction(u)


def integrate_padic(field: LocalField, integrand, domains, levels) -> IntegralResult:
    """Exact integral of a locally constant function over a product of balls
    with the additive self-dual measure.

    domains: per coordinate, a list of disjoint balls (center, level).
    levels: per coordinate, a constancy-level certificate L (the integrand is
        constant on cosets of p^L Zp in that coordinate).  Refusal, not
        adaptivity, on a missing certificate.
    """
    if levels is None or any(l is None for l in levels):
        raise CertificateError("integrate_padic requires level certificates")
    if len(domains) != len(levels):
        raise ValueError("domains/levels length mismatch")
    axes = []
    for balls, lev in zip(domains, levels):
        reps = []
        vol = Fraction(0)
        for center, blevel in balls:
            refinement = max(lev, blevel)
            v = ball_volume(field, refinement)
            for r in ball_coset_reps(field, field.element(center), blevel, refinement):
                reps.append((r, v))
            # volume bookkeeping not needed beyond per-rep weights
        axes.append(reps)
    total = 0j
    abs_mass = 0.0
    for combo in itertools.product(*axes):
        point = tuple(r for r, _ in combo)
        w = Fraction(1)
        for _, v in combo:
            w *= v
        val = integrand(point) * float(w)
        total += val
        abs_mass += abs(val)
    return result_exact(total, abs_mass)


def shell_sum_kx(
    field: LocalField,
    integrand,
    j_lo: int,
    j_hi: int,
    unit_level,
    tail_ratio=None,
) -> IntegralResult:
    """Sum of int_{v(x)=j} F(x) d^x x over j in [j_lo, j_hi], plus an optional
    certified geometric tail over j > j_hi.

    unit_level: callable j -> constancy level m >= 1 of u -> F(p^j u) on the
        units mod p^m (the caller's certificate).
    tail_ratio: complex ratio r with F(p^{j+1} u) = r * F(p^j u) for all
        j >= j_hi and units u; the tail is then closed in closed form.
    """
    p = field.p
    total = 0j
    abs_mass = 0.0
    last_shell = 0j
    for j in range(j_lo, j_hi + 1):
        m = int(unit_level(j))
        if m < 1:
            raise CertificateError("unit_level certificate must be >= 1")
        pj = Fraction(p) ** j
        vol = float(Fraction(1, p**m))
        shell = 0j
        for u in unit_reps(field, m):
            val = integrand(u * pj)
            shell += val * vol
            abs_mass += abs(val) * vol
        total += shell
        if j == j_hi:
            last_shell = shell
    exactness = EXACT
    if tail_ratio is not None:
        r = complex(tail_ratio)
        if abs(r) >= 1.0:
            raise DivergenceError(
                f"geometric tail ratio {abs(r):.4f} >= 1: integral diverges"
            )
        total += last_shell * r / (1.0 - r)
        abs_mass += abs(last_shell) * abs(r) / (1.0 - abs(r))
        exactness = TAIL_CLOSED
    res = result_exact(total, abs_mass)
    return IntegralResult(res.value, res.error_bound, exactness)


# ---------------------------------------------------------------------------
# real adaptive Gauss-Kronrod engine
# ---------------------------------------------------------------------------

_XGK = np.array(
    [
        -0.991455371120812639206854697526329,
        -0.949107912342758524526189684047851,
        -0.864864423359769072789712788640926,
        -0.741531185599394439863864773280788,
        -0.586087235467691130294144838258730,
        -0.405845151377397166906606412076961,
        -0.207784955007898467600689403773245,
        0.0,
        0.207784955007898467600689403773245,
        0.405845151377397166906606412076961,
        0.586087235467691130294144838258730,
        0.741531185599394439863864773280788,
        0.864864423359769072789712788640926,
        0.949107912342758524526189684047851,
        0.991455371120812639206854697526329,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
        0.204432940075298892414161999234649,
        0.190350578064785409913256402421014,
        0.169004726639267902826583426598550,
        0.140653259715525918745189590510238,
        0.104790010322250183839876322541518,
        0.063092092629978553290700663189204,
        0.022935322010529224963732008058970,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
        0.381830050505118944950369775488975,
        0.279705391489276667901467771423780,
        0.129484966168869693270611432679082,
    ]
)
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])


def _panel(fvec, a: float, b: float):
    """One G7/K15 panel; returns (kronrod, error, inner_err_integral)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    xs = mid + half * _XGK
    ys, inner = fvec(xs)
    resk = half * np.sum(_WGK * ys)
    resg = half * np.sum(_WG * ys[_GAUSS_IDX])
    mean = resk / (b - a)
    resasc = half * float(np.sum(_WGK * np.abs(ys - mean)))
    err = abs(resk - resg)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    inner_int = half * float(np.sum(_WGK * inner)) if inner is not None else 0.0
    return complex(resk), float(err), inner_int


def _wrap_vectorized(f, vectorized: bool, returns_result: bool):
    if returns_result:

        def fvec(xs):
            vals = np.empty(xs.shape, dtype=complex)
            errs = np.empty(xs.shape, dtype=float)
            for i, x in enumerate(xs):
                r = f(float(x))
                vals[i] = r.value
                errs[i] = r.error_bound
            return vals, errs

        return fvec
    if vectorized:
        return lambda xs: (np.asarray(f(xs), dtype=complex), None)

    def fscal(xs):
        return (
            np.array([complex(f(float(x))) for x in xs], dtype=complex),
            None,
        )

    return fscal


def integrate_interval(
    f,
    a: float,
    b: float,
    spec: QuadratureSpec,
    freq: float = 0.0,
    vectorized: bool = False,
    returns_result: bool = False,
) -> IntegralResult:
    """Adaptive quadrature of f over [a, b].

    freq is the oscillation certificate (max |d phase / dx| / 2pi): initial
    panels are cut to at most a quarter period before any adaptivity, which
    prevents spurious convergence on psi-twisted integrands.
    returns_result=True makes f return IntegralResult (inner errors are
    co-integrated into the bound).
    """
    if a == b:
        return IntegralResult(0j, 0.0, QUADRATURE)
    if b < a:
        return integrate_interval(
            f, b, a, spec, freq, vectorized, returns_result
        ).scaled(-1.0)
    fvec = _wrap_vectorized(f, vectorized, returns_result)
    n0 = max(1, min(int(math.ceil((b - a) * freq * 4.0)), 8 * spec.max_subdivisions))
    cuts = np.linspace(a, b, n0 + 1)
    heap = []
    counter = itertools.count()
    total = 0j
    total_err = 0.0
    inner_total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, err, inner = _panel(fvec, lo, hi)
        total += val
        total_err += err
        inner_total += inner
        heapq.heappush(heap, (-err, next(counter), lo, hi, val, err, inner))
    n_panels = n0
    while heap:
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if total_err <= tol:
            break
        if n_panels >= spec.max_subdivisions:
            raise AccuracyError(
                IntegralResult(total, total_err + inner_total, QUADRATURE)
            )
        _, _, lo, hi, val, err, inner = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1, i1 = _panel(fvec, lo, mid)
        v2, e2, i2 = _panel(fvec, mid, hi)
        total += v1 + v2 - val
        total_err += e1 + e2 - err
        inner_total += i1 + i2 - inner
        heapq.heappush(heap, (-e1, next(counter), lo, mid, v1, e1, i1))
        heapq.heappush(heap, (-e2, next(counter), mid, hi, v2, e2, i2))
        n_panels += 1
    return IntegralResult(total, total_err + inner_total, QUADRATURE)


def integrate_pieces(
    f, pieces, spec: QuadratureSpec, vectorized=False, returns_result=False
) -> IntegralResult:
    """Sum of integrate_interval over pieces = [(a, b, freq), ...]."""
    total = IntegralResult(0j, 0.0, QUADRATURE)
    for a, b, freq in pieces:
        total = total + integrate_interval(
            f, a, b, spec, freq=freq, vectorized=vectorized, returns_result=returns_result
        )
    return total


def integrate_real_line_tan(
    f, spec: QuadratureSpec, vectorized: bool = False, n_base: int = 8
) -> IntegralResult:
    """Integral over the whole real line via x = tan(theta); suited to
    integrands with polynomial decay certificates (endpoints are never
    evaluated: Gauss nodes are interior)."""

    def g(theta):
        t = np.asarray(theta, dtype=float)
        x = np.tan(t)
        sec2 = 1.0 / np.cos(t) ** 2
        vals = np.asarray(f(x)) * sec2 if vectorized else f(float(x)) * float(sec2)
        return vals

    eps = 1e-12
    return integrate_interval(
        g,
        -0.5 * math.pi + eps,
        0.5 * math.pi - eps,
        spec,
        freq=float(n_base),
        vectorized=vectorized,
    )


def integrate_kx_log(
    f,
    spec: QuadratureSpec,
    u_lo: float,
    u_hi: float,
    freq_of_x: float = 0.0,
    vectorized: bool = False,
    include_negative: bool = True,
) -> IntegralResult:
    """Multiplicative integral int_{k^x} f(x) d^x x via x = +-e^u with u in
    [u_lo, u_hi] (the caller certifies both truncations)."""

    def pos(u):
        x = np.exp(np.asarray(u, dtype=float))
        return np.asarray(f(x)) if vectorized else f(float(x))

    def neg(u):
        x = -np.exp(np.asarray(u, dtype=float))
        return np.asarray(f(x)) if vectorized else f(float(x))

    freq = freq_of_x * math.exp(u_hi)  # worst-case |dx/du| scaling
    res = integrate_interval(pos, u_lo, u_hi, spec, freq=freq, vectorized=vectorized)
    if include_negative:
        res = res + integrate_interval(
            neg, u_lo, u_hi, spec, freq=freq, vectorized=vectorized
        )
    return res
