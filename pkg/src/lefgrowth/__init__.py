"""Growth of local embeddings for enrichments of group actions.

Layered F2-actions with prescribed growth, symmetric and elementary
enrichments, local-embedding search and verification, presentations with
coset enumeration, and a command-line front end.
"""

__version__ = "0.1.0"

from .groupkit import FinSuppPerm, FreeWord, PermGroup, SL2Mod, make_catalog_group
from .schreier import ball, growth_table
from .embeddings import (
    GrowthBoundRecord,
    PartialMapWitness,
    compare_growth_witness,
    search_min_embedding,
    verify_local_embedding,
)
from .permissible import build_finite_action, build_omega, check_permissible, make_table
from .sym_enrich import build_Phi, enrich_mul, integer_pair, permissible_pair
from .elem_enrich import ElemMatrix, bertrand_split, build_Phi_elem, crt_split, word_for_transvection
from .presentations import steinberg_presentation, todd_coxeter, tree_presentation

__all__ = [
    "FinSuppPerm",
    "FreeWord",
    "PermGroup",
    "SL2Mod",
    "make_catalog_group",
    "ball",
    "growth_table",
    "GrowthBoundRecord",
    "PartialMapWitness",
    "compare_growth_witness",
    "search_min_embedding",
    "verify_local_embedding",
    "build_finite_action",
    "build_omega",
    "check_permissible",
    "make_table",
    "build_Phi",
    "enrich_mul",
    "integer_pair",
    "permissible_pair",
    "ElemMatrix",
    "bertrand_split",
    "build_Phi_elem",
    "crt_split",
    "word_for_transvection",
    "steinberg_presentation",
    "todd_coxeter",
    "tree_presentation",
]
