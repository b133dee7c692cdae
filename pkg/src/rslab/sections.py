"""Principal-series data, big-cell sections, the characters psi_N and psi_s,
section evaluation through the open-cell factorization, and the spherical
vector."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .localfield import LocalField
from .characters import MultChar
from .schwartz import ProductTestFunction, PadicTestFunction
from . import gln
from .gln import (
    decompose_big_cell,
    iwasawa_gln,
    abs_diag,
    r_group_coords,
    r_coordinate_pairs,
    mat_mul,
    is_upper_unipotent,
    RootDatum,
)


@dataclass(frozen=True)
class PrincipalSeriesDatum:
    """sigma = sigma_1 x ... x sigma_n with its exponent vector nu, the
    half-sum twist rho_bar, and the convergence strip on Re(s)."""

    field: LocalField
    sigma: tuple

    def __post_init__(self):
        if len(self.sigma) < 2:
            raise ValueError("need n >= 2 characters")
        if any(ch.field != self.field for ch in self.sigma):
            raise ValueError("all characters must live on the same field")

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def nu(self):
        return tuple(ch.ex() for ch in self.sigma)

    @property
    def rho_bar(self):
        return RootDatum(self.n).rho_bar

    def omega_strip(self):
        """Open strip of absolute convergence for the R-integral:
        -nu_2 < Re(s) < 1 - nu_1."""
        nu = self.nu
        return (-nu[1], 1.0 - nu[0])

    def nu_condition_ok(self) -> bool:
        """max(nu_1, nu_2) < nu_3 < ... < nu_n and nu_1 < nu_2 + 1."""
        nu = self.nu
        if not nu[0] < nu[1] + 1.0:
            return False
        chain = (max(nu[0], nu[1]),) + nu[2:]
        return all(a < b for a, b in zip(chain, chain[1:]))

    def joint_region(self):
        """Omega_sigma cut down to Re(s) > -nu_1, where both integrals of the
        identity converge as honest integrals."""
        lo, hi = self.omega_strip()
        return (max(lo, -self.nu[0]), hi)

    def sigma_rho_bar(self, diag_entries) -> complex:
        """(sigma rho_bar) evaluated on a diagonal: prod sigma_i(d_i) |d_i|^{rho_bar_i}."""
        field = self.field
        val = 1.0 + 0j
        for ch, rb, d in zip(self.sigma, self.rho_bar, diag_entries):
            val *= ch.eval(d)
            ad = field.abs_float(d)
            val *= math.exp(rb * math.log(ad))
        return val


def omega_sigma(datum: PrincipalSeriesDatum):
    return datum.omega_strip()


def check_nu_condition(datum: PrincipalSeriesDatum) -> bool:
    return datum.nu_condition_ok()


# ---------------------------------------------------------------------------
# characters of N and R
# ---------------------------------------------------------------------------


def psi_n(field: LocalField, u) -> complex:
    """psi_N(u) = psi(sum of the superdiagonal) for upper unipotent u."""
    if not is_upper_unipotent(field, u):
        raise ValueError("psi_N needs an upper unipotent matrix")
    n = len(u)
    total = field.zero()
    for i in range(n - 1):
        total = total + u[i][i + 1]
    return field.psi(total)


def psi_s_eval(datum: PrincipalSeriesDatum, s, r) -> complex:
    """psi_s(u' [a]) = psi_N(u') |a|^{(n-1)/2 - s} on R."""
    field = datum.field
    n = datum.n
    a = r[0][0]
    total = field.zero()
    for i in range(1, n - 1):
        total = total + r[i][i + 1]
    aval = field.abs_float(a)
    return field.psi(total) * cmath.exp(
        ((n - 1) / 2.0 - complex(s)) * math.log(aval)
    )


# ---------------------------------------------------------------------------
# big-cell sections
# ---------------------------------------------------------------------------


class BigCellSection:
    """Section of the induced representation determined by an envelope
    phi in S(R), supported on the open cell: f(bbar w1 r) = (sigma rho_bar)(bbar) phi(r),
    zero off the cell."""

    def __init__(self, datum: PrincipalSeriesDatum, phi: ProductTestFunction):
        if phi.field != datum.field:
            raise ValueError("envelope and datum fields differ")
        expected = 1 + len(r_coordinate_pairs(datum.n))
        if phi.dim != expected:
            raise ValueError(
                f"envelope needs {expected} coordinates for n={datum.n}, got {phi.dim}"
            )
        self.datum = datum
        self.phi = phi

    @property
    def field(self):
        return self.datum.field

    @property
    def n(self):
        return self.datum.n

    def envelope_eval(self, r_matrix) -> complex:
        return self.phi.eval(r_group_coords(self.field, r_matrix))

    def evaluate(self, g) -> complex:
        dec = decompose_big_cell(self.field, g)
        if dec is None:
            return 0j
        bbar, r = dec
        diag = [bbar[i][i] for i in range(self.n)]
        return self.datum.sigma_rho_bar(diag) * self.envelope_eval(r)

    def translate(self, r_mat) -> "BigCellSection":
        """Right translate by r in R; the envelope becomes phi(. r), which is
        again a product function when r does not shear the scaled first-row
        coordinates (always for n = 2; for torus translates; and for N'
        translates with vanishing first-row part)."""
        field = self.field
        n = self.n
        a_r = r_mat[0][0]
        pairs = r_coordinate_pairs(n)
        coords = list(self.phi.coords)
        # g r coordinates: a -> a * a_r;  (i,j) i>=2: g_ij + r_ij;
        # first row (1,j): g_1j + a_g * r_1j -- product only if r_1j = 0
        for (i, j), r_val in zip(pairs, r_group_coords(field, r_mat)[1:]):
            if i == 0 and r_val != field.zero():
                if field.abs_float(r_val) > 1e-15:
                    raise ValueError(
                        "translation with nonzero first-row part leaves the product class"
                    )
        kx = coords[0].scale_argument(a_r)
        new_coords = [kx]
        for idx, ((i, j), r_val) in enumerate(zip(pairs, r_group_coords(field, r_mat)[1:])):
            f = coords[1 + idx]
            if i >= 1:
                f = f.translate_argument(r_val)
            new_coords.append(f)
        return BigCellSection(self.datum, ProductTestFunction(field, new_coords))


def evaluate_section(section: BigCellSection, g) -> complex:
    return section.evaluate(g)


# ---------------------------------------------------------------------------
# spherical vector
# ---------------------------------------------------------------------------


def spherical_vector(field: LocalField, nu, g) -> float:
    """The K-fixed vector of the unramified datum with exponents nu,
    normalized to 1 on K: value (nu rho_bar)(diag bbar) for g = bbar k."""
    n = len(g)
    if len(nu) != n:
        raise ValueError("exponent count must match the matrix size")
    bbar, _ = iwasawa_gln(field, g)
    rho_bar = RootDatum(n).rho_bar
    val = 1.0
    for d, nu_i, rb in zip(abs_diag(field, bbar), nu, rho_bar):
        val *= d ** (nu_i + rb)
    return val


def nu_rho_bar_on_diag(field: LocalField, nu, diag_entries) -> float:
    rho_bar = RootDatum(len(diag_entries)).rho_bar
    val = 1.0
    for d, nu_i, rb in zip(diag_entries, nu, rho_bar):
        val *= field.abs_float(d) ** (nu_i + rb)
    return val
