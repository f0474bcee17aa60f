"""Multiplicative and ternary domains of completely positive maps on matrix algebras,
module ternary domains of ``M_{p,n}`` and induced maps on linking algebras."""

__version__ = "0.1.0"

from .numerics import (  # noqa: E402
    DEFAULT_TOLERANCES,
    InvalidInputError,
    OperatorSubspace,
    SubspaceComparison,
    Tolerances,
    intersect,
    null_space,
    subspace_compare,
)
from .cpmaps import (  # noqa: E402
    CPMap,
    DegenerateDilationError,
    Dilation,
    NotCompletelyPositiveError,
    UnitalFallbackWarning,
    apply,
    choi_rank,
    from_action,
    from_choi,
    from_kraus,
    is_completely_positive,
    is_contractive,
    is_pure,
    is_unital,
    minimal_stinespring,
    random_cpmap,
)
from .domains import (  # noqa: E402
    DomainReport,
    PreconditionError,
    StructureReport,
    contractive_mult_criterion,
    in_mult_domain,
    mult_domain_def,
    mult_domain_stinespring,
    ternary_domain_def,
    ternary_domain_stinespring,
    verify_structure,
)
from .hmodules import (  # noqa: E402
    ModuleSpace,
    PhiMapRealization,
    brs_checks,
    canonical_phi_map,
    contractive_cube_criterion,
    gram_predicate,
    module_domain_def,
    module_domain_from_ideal,
    module_domain_stinespring,
    ternary_residual,
    theta,
    twist_phi_map,
)
from .linking import (  # noqa: E402
    InducedCpMap,
    induced_cp_map,
    irreducibility_check,
    linking_action_checks,
    predicted_linking_subspace,
    purity_suite,
    verify_linking_domains,
)
