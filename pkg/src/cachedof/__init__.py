"""Verification lab for per-user DoF of cache-aided grid cellular networks."""

from .topology import (
    GridSpec,
    Topology,
    TopologyError,
    bs_class,
    load_topology,
    make_grid,
    user_class,
)
from .placement import (
    CacheGroup,
    MixturePlan,
    Placement,
    PlacementError,
    groups_within,
    memory_share,
    place,
)
from .channels import ChannelSet, draw_channels, effective_channel, submatrix
from .precoding import (
    GeneratorSet,
    SchemeInstance,
    UDesign,
    build_full_zf,
    build_half_scheme,
    build_quarter_scheme,
    build_u_design,
    monomial_basis,
    phase_partner,
    phase_server,
)
from .verify import (
    DofPoint,
    VerificationReport,
    check_alignment,
    check_decodability,
    check_distinct_monomials,
    check_neutralization,
    dof_account,
    jacobian_independence_check,
    numeric_rank,
)
from .bounds import (
    Inequality,
    RtPair,
    baseline_dof,
    closed_form_lower,
    closed_form_upper,
    enumerate_rt_pairs,
    gap,
    memory_sharing_inequalities,
    region_inequalities,
    remove_redundant,
    solve_symmetric_dof,
    tstar_candidates,
)

__version__ = "0.1.0"
