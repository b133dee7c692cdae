"""GL_n(k) structure layer: subgroups, Weyl combinatorics, root data,
Iwasawa and big-cell decompositions, Bruhat-cell and R-orbit classification.

Matrices are tuples of tuples of field scalars (floats over R, Fractions over
Qp), so all algorithms below are field-generic; over R, rank and zero tests
use a relative threshold, over Qp everything is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .localfield import LocalField

REAL_RANK_TOL = 1e-9  # relative threshold for zero tests over R

# ---------------------------------------------------------------------------
# matrix helpers
# ---------------------------------------------------------------------------


def mat(rows):
    return tuple(tuple(r) for r in rows)


def identity(field: LocalField, n: int):
    one, zero = field.one(), field.zero()
    return mat([[one if i == j else zero for j in range(n)] for i in range(n)])


def mat_mul(a, b):
    n, m, k = len(a), len(b[0]), len(b)
    return mat(
        [[sum(a[i][l] * b[l][j] for l in range(k)) for j in range(m)] for i in range(n)]
    )


def mat_scale_col(a, j, c):
    rows = [list(r) for r in a]
    for i in range(len(rows)):
        rows[i][j] = rows[i][j] * c
    return mat(rows)


def mat_norm(field: LocalField, a) -> float:
    return max(field.abs_float(x) for row in a for x in row)


def mat_sub(a, b):
    return mat(
        [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]
    )


def mat_max_abs_diff(field: LocalField, a, b) -> float:
    return max(
        field.abs_float(x - y) for ra, rb in zip(a, b) for x, y in zip(ra, rb)
    )


def mat_det(a):
    n = len(a)
    if n == 1:
        return a[0][0]
    if n == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    det = a[0][0] * 0
    for j in range(n):
        minor = mat([row[:j] + row[j + 1 :] for row in a[1:]])
        term = a[0][j] * mat_det(minor)
        det = det + (term if j % 2 == 0 else -term)
    return det


def mat_inv(field: LocalField, a):
    """Gauss-Jordan inverse; exact over Qp."""
    n = len(a)
    aug = [list(row) + [field.one() if i == j else field.zero() for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: field.abs_float(aug[r][col]))
        if field.abs_float(aug[piv][col]) == 0:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col]
        aug[col] = [x / inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return mat([row[n:] for row in aug])


def parse_matrix(field: LocalField, text: str):
    """Row-major text format: rows split by ';', entries by ','."""
    rows = []
    for row in text.strip().split(";"):
        rows.append([field.element(e.strip()) for e in row.split(",")])
    if any(len(r) != len(rows) for r in rows):
        raise ValueError("matrix text is not square")
    return mat(rows)


def format_matrix(m) -> str:
    return ";".join(",".join(str(x) for x in row) for row in m)


def diag_matrix(field: LocalField, entries):
    n = len(entries)
    zero = field.zero()
    return mat(
        [[entries[i] if i == j else zero for j in range(n)] for i in range(n)]
    )


def torus_element(field: LocalField, a, n: int):
    """[a] = diag(a, 1, ..., 1)."""
    entries = [field.element(a)] + [field.one()] * (n - 1)
    return diag_matrix(field, entries)


def upper_unipotent(field: LocalField, n: int, entries: dict):
    """Upper unipotent matrix with entries[(i, j)] above the diagonal."""
    rows = [[field.one() if i == j else field.zero() for j in range(n)] for i in range(n)]
    for (i, j), v in entries.items():
        if not i < j:
            raise ValueError("upper unipotent entries need i < j")
        rows[i][j] = field.element(v)
    return mat(rows)


def n_alpha_element(field: LocalField, x, n: int):
    """u(x): identity plus x in the (1,2) slot."""
    return upper_unipotent(field, n, {(0, 1): x})


def w1_matrix(field: LocalField, n: int):
    return n_alpha_element(field, field.one(), n)


def is_upper_unipotent(field: LocalField, g, tol_scale: float = REAL_RANK_TOL) -> bool:
    n = len(g)
    tol = tol_scale * max(mat_norm(field, g), 1.0) if field.is_real else 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                if field.abs_float(g[i][j] - field.one()) > tol:
                    return False
            elif i > j and field.abs_float(g[i][j]) > tol:
                return False
    return True


def random_matrix(field: LocalField, rng, n: int):
    """Random invertible matrix (resampled until nonsingular)."""
    while True:
        g = mat([[field.sample(rng) for _ in range(n)] for _ in range(n)])
        d = mat_det(g)
        if field.abs_float(d) > (1e-6 if field.is_real else 0):
            return g


# ---------------------------------------------------------------------------
# Weyl group and roots
# ---------------------------------------------------------------------------
# A permutation w is a tuple with w[j] = image row of column j, so the matrix
# P_w has entry 1 at (w[j], j) and P_w e_j = e_{w(j)}.


def perm_matrix(field: LocalField, w):
    n = len(w)
    rows = [[field.zero()] * n for _ in range(n)]
    for j, i in enumerate(w):
        rows[i][j] = field.one()
    return mat(rows)


def w0_perm(n: int):
    return tuple(n - 1 - i for i in range(n))


def s_alpha_perm(n: int):
    return tuple([1, 0] + list(range(2, n)))


def maps_alpha_positive(w) -> bool:
    """w alpha > 0 for alpha = e1 - e2."""
    return w[0] < w[1]


def weyl_partition(n: int):
    """All permutations split into (W_plus, W_minus) by the sign of w(alpha)."""
    if n < 2:
        raise ValueError("need n >= 2")
    plus, minus = [], []
    for w in itertools.permutations(range(n)):
        (plus if maps_alpha_positive(w) else minus).append(w)
    return plus, minus


def orbit_census(n: int) -> int:
    """Number of R-orbits on the flag variety: one per Weyl element plus one
    extra open piece per element moving alpha to a positive root."""
    plus, minus = weyl_partition(n)
    return len(plus) + len(minus) + len(plus)


@dataclass(frozen=True)
class RootDatum:
    """Root bookkeeping for GL_n: exponent vectors are length-n tuples, the
    root e_i - e_j is the index pair (i, j)."""

    n: int

    @property
    def positive_roots(self):
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]

    @property
    def alpha(self):
        return (0, 1)

    @property
    def rho(self):
        n = self.n
        return tuple((n - 1) / 2.0 - i for i in range(n))

    @property
    def rho_bar(self):
        n = self.n
        return tuple((1 - n) / 2.0 + i for i in range(n))

    @property
    def mu(self):
        """2 rho - alpha as an exponent vector."""
        r = self.rho
        mu = [2 * x for x in r]
        mu[0] -= 1
        mu[1] += 1
        return tuple(mu)

    @property
    def phi_n_prime(self):
        """Roots of A acting on Lie N' (all positive roots except alpha)."""
        return [r for r in self.positive_roots if r != self.alpha]

    def root_vector(self, root):
        i, j = root
        v = [0] * self.n
        v[i], v[j] = 1, -1
        return tuple(v)

    def mu_sum_check(self) -> bool:
        total = [0] * self.n
        for r in self.phi_n_prime:
            for k, x in enumerate(self.root_vector(r)):
                total[k] += x
        return tuple(float(x) for x in total) == self.mu


def root_pairing(nu, root) -> complex:
    """<nu, beta^vee> = nu_i - nu_j for beta = e_i - e_j."""
    i, j = root
    return nu[i] - nu[j]


# ---------------------------------------------------------------------------
# Iwasawa decompositions
# ---------------------------------------------------------------------------


def iwasawa_gl2(field: LocalField, x):
    """Iwasawa decomposition u(x) = nbar * a * k in GL_2.

    Real case: a = diag(sqrt(1+x^2), 1/sqrt(1+x^2)) (row Gram-Schmidt, first
    diagonal entry carries the first-row norm).  p-adic case: u(x) in K when
    |x| <= 1, otherwise |a| = (|x|, 1/|x|)."""
    x = field.element(x)
    one, zero = field.one(), field.zero()
    if field.is_real:
        r = math.sqrt(1.0 + x * x)
        nbar = mat([[1.0, 0.0], [x / (r * r), 1.0]])
        a = mat([[r, 0.0], [0.0, 1.0 / r]])
        k = mat([[1.0 / r, x / r], [-x / r, 1.0 / r]])
        return nbar, a, k
    if field.abs_value(x) <= 1:
        i2 = identity(field, 2)
        return i2, i2, mat([[one, x], [zero, one]])
    a = mat([[x, zero], [zero, one / x]])
    nbar = mat([[one, zero], [one / x, one]])
    k = mat([[zero, -one], [one, one / x]])
    return nbar, a, k


def iwasawa_gln(field: LocalField, g):
    """g = bbar * k with bbar lower triangular and k in the standard maximal
    compact (orthogonal over R; GL_n(Zp) over Qp)."""
    n = len(g)
    if field.is_real:
        # row Gram-Schmidt, top row first
        rows = [list(map(float, r)) for r in g]
        q = []
        bbar = [[0.0] * n for _ in range(n)]
        for i in range(n):
            v = rows[i][:]
            for j in range(i):
                c = sum(rows[i][l] * q[j][l] for l in range(n))
                bbar[i][j] = c
                v = [a - c * b for a, b in zip(v, q[j])]
            norm = math.sqrt(sum(a * a for a in v))
            if norm <= REAL_RANK_TOL * max(mat_norm(field, g), 1.0):
                raise ZeroDivisionError("singular matrix in Iwasawa decomposition")
            bbar[i][i] = norm
            q.append([a / norm for a in v])
        return mat(bbar), mat(q)
    # p-adic: integral column operations; E accumulates them so g E = bbar
    work = [list(r) for r in g]
    e = [list(r) for r in identity(field, n)]

    def col_axpy(j_dst, j_src, c):
        for i in range(n):
            work[i][j_dst] += c * work[i][j_src]
            e[i][j_dst] += c * e[i][j_src]

    def col_swap(j1, j2):
        for i in range(n):
            work[i][j1], work[i][j2] = work[i][j2], work[i][j1]
            e[i][j1], e[i][j2] = e[i][j2], e[i][j1]

    for i in range(n):
        piv = max(
            range(i, n),
            key=lambda j: (field.abs_value(work[i][j]), -j),
        )
        if work[i][piv] == 0:
            raise ZeroDivisionError("singular matrix in Iwasawa decomposition")
        if piv != i:
            col_swap(i, piv)
        # clear to the right only: multipliers stay integral (pivot is max)
        for j in range(i + 1, n):
            if work[i][j] != 0:
                col_axpy(j, i, -work[i][j] / work[i][i])
    bbar = mat(work)
    k = mat_inv(field, mat(e))
    return bbar, k


def abs_diag(field: LocalField, bbar):
    return [field.abs_float(bbar[i][i]) for i in range(len(bbar))]


# ---------------------------------------------------------------------------
# Bruhat cells and R-orbits
# ---------------------------------------------------------------------------


def _rank(field: LocalField, rows, tol: float) -> int:
    """Row-echelon rank; exact over Qp, thresholded over R."""
    work = [list(r) for r in rows]
    rank = 0
    ncols = len(work[0]) if work else 0
    row = 0
    for col in range(ncols):
        piv = None
        best = tol
        for r in range(row, len(work)):
            a = field.abs_float(work[r][col])
            if a > best:
                best = a
                piv = r
        if piv is None:
            continue
        work[row], work[piv] = work[piv], work[row]
        for r in range(row + 1, len(work)):
            if work[r][col] != 0:
                c = work[r][col] / work[row][col]
                work[r] = [x - c * y for x, y in zip(work[r], work[row])]
        row += 1
        rank += 1
        if row == len(work):
            break
    return rank


def bruhat_cell(field: LocalField, g):
    """The Weyl element w with g in Bbar w B, recovered from the rank pattern
    of the top-left i x j corner submatrices (the invariant of lower-times-
    upper multiplication)."""
    n = len(g)
    tol = REAL_RANK_TOL * max(mat_norm(field, g), 1.0) if field.is_real else 0.0
    r = [[0] * (n + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            r[i][j] = _rank(field, [row[:j] for row in g[:i]], tol)
    w = [None] * n
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if r[i][j] - r[i - 1][j] - r[i][j - 1] + r[i - 1][j - 1] == 1:
                w[j - 1] = i - 1
    if any(x is None for x in w):
        raise ValueError("rank pattern did not determine a permutation")
    return tuple(w)


def bruhat_reduce(field: LocalField, g):
    """Factor g = bbar * P_w * u with bbar lower triangular and u upper
    unipotent, by lower-triangular row elimination (pivot of each column is
    the first nonzero row among the not-yet-pivoted ones)."""
    n = len(g)
    tol = REAL_RANK_TOL * max(mat_norm(field, g), 1.0) if field.is_real else 0.0
    work = [list(r) for r in g]
    # l_acc accumulates the inverse of the applied row ops on the right:
    # after op (row_i -= c row_piv), l_acc gains column update col_piv += c col_i
    l_acc = [list(r) for r in identity(field, n)]
    pivot_row_of_col = [None] * n
    pivoted = [False] * n
    for j in range(n):
        piv = None
        for i in range(n):
            if not pivoted[i] and field.abs_float(work[i][j]) > tol:
                piv = i
                break
        if piv is None:
            raise ZeroDivisionError("singular matrix in Bruhat reduction")
        pivot_row_of_col[j] = piv
        pivoted[piv] = True
        for i in range(piv + 1, n):
            if not pivoted[i] and work[i][j] != 0:
                c = work[i][j] / work[piv][j]
                work[i] = [x - c * y for x, y in zip(work[i], work[piv])]
                for r in range(n):
                    l_acc[r][piv] = l_acc[r][piv] + c * l_acc[r][i]
    w = tuple(pivot_row_of_col)
    # work = P_w * (upper triangular); normalize to unipotent
    ubar = [work[w[j]] for j in range(n)]  # row j of w^{-1} work
    diag = [ubar[j][j] for j in range(n)]
    u = mat([[ubar[i][j] / diag[i] for j in range(n)] for i in range(n)])
    # bbar = l_acc * P_w * diag * P_w^{-1}
    dmat = [[field.zero()] * n for _ in range(n)]
    for j in range(n):
        dmat[w[j]][w[j]] = diag[j]
    bbar = mat_mul(mat(l_acc), mat(dmat))
    return bbar, w, u


@dataclass(frozen=True)
class OrbitLabel:
    w: tuple
    kind: str  # 'plain' (O_w) or 'opposite' (O_{w w1})

    def __str__(self):
        return f"({self.w}, {self.kind})"


def rs_orbit(field: LocalField, g) -> OrbitLabel:
    """R-orbit of the coset of g on the flag variety: the pair (w, kind),
    where kind 'opposite' marks the extra open piece inside the cell of w
    (detected by the (1,2)-coordinate of the unipotent part)."""
    bbar, w, u = bruhat_reduce(field, g)
    if not maps_alpha_positive(w):
        return OrbitLabel(w, "plain")
    tol = REAL_RANK_TOL * max(mat_norm(field, g), 1.0) if field.is_real else 0.0
    x = u[0][1]
    if field.abs_float(x) > tol:
        return OrbitLabel(w, "opposite")
    return OrbitLabel(w, "plain")


NOT_IN_OPEN_ORBIT = None


def decompose_big_cell(field: LocalField, g):
    """Factor g = bbar * w1 * r with bbar lower triangular and r in R, or
    return None when the coset of g does not lie on the open orbit.

    r has first row (r11, 0, r13, ...) with r11 in k^x and an upper unipotent
    lower-right block."""
    n = len(g)
    try:
        bbar0, w, u = bruhat_reduce(field, g)
    except ZeroDivisionError:
        return NOT_IN_OPEN_ORBIT
    if w != tuple(range(n)):
        return NOT_IN_OPEN_ORBIT
    x = u[0][1]
    tol = REAL_RANK_TOL * max(mat_norm(field, g), 1.0) if field.is_real else 0.0
    if field.abs_float(x) <= tol:
        return NOT_IN_OPEN_ORBIT
    # u = u(x) u' with u' in N'; then u(x) = [x] w1 [1/x] and
    # g = (bbar0 [x]) w1 ([1/x] u')
    uprime = [list(r) for r in u]
    for j in range(1, n):
        uprime[0][j] = u[0][j] - x * u[1][j]
    r = [list(row) for row in uprime]
    for j in range(n):
        r[0][j] = r[0][j] / x
    bbar = mat_scale_col(bbar0, 0, x)
    return bbar, mat(r)


def r_group_coords(field: LocalField, r):
    """Coordinates of r in R: (r11; r_{ij} for i<j, j != 2), row-major order."""
    n = len(r)
    coords = [r[0][0]]
    for i in range(n):
        for j in range(i + 1, n):
            if j == 1:
                continue
            coords.append(r[i][j])
    return tuple(coords)


def r_coordinate_pairs(n: int):
    """Index pairs (i, j) matching r_group_coords after the k^x slot."""
    return [(i, j) for i in range(n) for j in range(i + 1, n) if j != 1]


def r_from_coords(field: LocalField, n: int, coords):
    """Inverse of r_group_coords."""
    pairs = r_coordinate_pairs(n)
    if len(coords) != 1 + len(pairs):
        raise ValueError("coordinate count mismatch")
    rows = [[field.one() if i == j else field.zero() for j in range(n)] for i in range(n)]
    rows[0][0] = field.element(coords[0])
    for (i, j), v in zip(pairs, coords[1:]):
        rows[i][j] = field.element(v)
    return mat(rows)
