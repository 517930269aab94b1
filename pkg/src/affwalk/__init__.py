"""Random walks, Poisson-type boundaries and scale arithmetic on affine
groups of homogeneous trees, with exact digit arithmetic underneath."""

from .digits import Digits, add, negate, parse_digits, shift, truncate_below, valuation, zero
from .group import (
    AffineElem,
    ProductElem,
    act_end,
    act_vertex,
    compose,
    decompose_into_J,
    fixed_end,
    gauge_P,
    gauge_T,
    horocyclic,
    identity,
    inverse,
    p_compose,
    p_identity,
    p_inverse,
    parse_affine,
    parse_product,
)
from .tree import (
    End,
    Vertex,
    busemann,
    children,
    confluent_from_root,
    distance,
    end_from_digits,
    make_end,
    omega,
    parent,
    ray_vertex,
    root,
    theta,
)
from .walk import (
    Measure,
    Trajectory,
    WalkReport,
    convergence_verdict,
    drift,
    first_moment,
    rate_of_escape,
    regularity_stats,
    run_trajectory,
)

__all__ = [name for name in dir() if not name.startswith("_")]
