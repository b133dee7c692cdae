"""rslab: a verification laboratory for local Rankin-Selberg integrals on GL(n).

Computes local L/epsilon/gamma factors, Tate zeta integrals, the GL(n)
principal-series integrals Z_s and Lambda_s over R and Qp, and certifies the
identity Lambda_s(f) = gamma(s, sigma_1, psi) * Z_s(f) together with its
supporting decompositions (Bruhat/R-orbits, Iwasawa, c-function products).
"""

__version__ = "0.1.0"

from .localfield import LocalField, AdditiveCharacter, INF
from .characters import (
    MultChar,
    MeroValue,
    GammaReport,
    zeta_k,
    l_factor,
    epsilon_factor,
    gamma_closed_form,
    gamma_via_fe,
    tate_zeta,
)
from .schwartz import (
    BallTerm,
    PadicTestFunction,
    GaussHermite,
    Bump,
    FourierKernel,
    ProductTestFunction,
    fourier,
    fourier_inverse_check,
)
from .integrate import QuadratureSpec, IntegralResult, integrate_padic, shell_sum_kx
from .gln import (
    weyl_partition,
    RootDatum,
    iwasawa_gl2,
    iwasawa_gln,
    bruhat_cell,
    rs_orbit,
    OrbitLabel,
    orbit_census,
    decompose_big_cell,
)
from .sections import (
    PrincipalSeriesDatum,
    BigCellSection,
    psi_n,
    psi_s_eval,
    evaluate_section,
    spherical_vector,
)
from .integrals import (
    IdentityReport,
    whittaker_functional,
    rs_zeta,
    rs_zeta_fourier,
    rs_period,
    rs_period_unfolded,
    check_gamma_identity,
)
from .cfunction import (
    c_function_integral,
    c_function_product,
    spherical_majorant,
    spherical_majorant_factored,
)
