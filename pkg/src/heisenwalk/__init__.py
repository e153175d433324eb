"""Random walks on random Cayley graphs of unitriangular groups H_{p,d}."""

from .entropic import *  # noqa: F403
from .geometry import *  # noqa: F403
from .group import (
    GroupElement,
    HeisenbergGroup,
    WordStats,
    abelianize,
    commutator,
    d3_product_formula,
    f_poly,
    in_commutator,
    inv,
    is_prime,
    mul,
    rank,
    step2_decomposition,
    step2_decomposition_check,
    unrank,
    word_product,
    word_stats,
)
from .walk import *  # noqa: F403

__version__ = "0.1.0"
