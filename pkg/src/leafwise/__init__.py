"""Numerical foliated contact and symplectic geometry on coordinate charts."""

from leafwise.errors import (
    CertificationError,
    ChartMismatchError,
    DegeneracyError,
    DegreeError,
    DomainError,
    LeafwiseError,
    ModelMismatchError,
    RankDeficiencyError,
)
from leafwise.forms import (
    Chart,
    ChartMap,
    DifferentialForm,
    ScalarField,
    VectorField,
    evaluate,
    exterior_derivative,
    interior_product,
    lie_derivative,
    pullback,
    wedge,
)
from leafwise.foliated import (
    FoliatedContactPair,
    LeafContactForm,
    SymplecticFoliationPair,
    check_frobenius,
    solve_reeb_field,
    solve_symplectic_transverse,
    solve_transverse_field,
    verify_contact_foliation,
    verify_parallel_identity,
    verify_radial_bounds,
    verify_symplectic_foliation,
)
from leafwise.flows import ContactFamily, gray_flow, integrate_flow, mapping_torus_lift, parallel_transport
from leafwise.constructions import (
    LutzProfile,
    VanishingLutzFamily,
    contactize,
    detect_overtwisted_disk,
    divisor_connected_sum,
    interpolate_to_standard,
    lutz_profile,
    lutz_twist,
    symplectize,
    vanishing_lutz_family,
)
from leafwise.reports import CheckReport
from leafwise.tolerances import DEFAULT_TOLERANCES, Tier, Tolerances

__version__ = "0.1.0"
