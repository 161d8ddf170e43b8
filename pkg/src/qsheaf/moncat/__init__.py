"""Semicartesian monoidal instances, pseudo-pullbacks, coherence checks."""

from .coherence import (
    CheckEntry,
    CoherenceReport,
    verify_appendix_suite,
    verify_monoidal_laws,
)
from .core import (
    FinSetCategory,
    MonoidalCategory,
    Mor,
    ProductCategory,
    PseudoPullback,
    ThinCategory,
    canon,
    exists_l_r_factorizations,
    is_semicartesian,
    projection1,
    projection2,
    pseudo_pullback,
    tensor_preserves_equalizers,
    trivial_equalizer,
)

__all__ = [
    "CheckEntry",
    "CoherenceReport",
    "FinSetCategory",
    "MonoidalCategory",
    "Mor",
    "ProductCategory",
    "PseudoPullback",
    "ThinCategory",
    "canon",
    "exists_l_r_factorizations",
    "is_semicartesian",
    "projection1",
    "projection2",
    "pseudo_pullback",
    "tensor_preserves_equalizers",
    "trivial_equalizer",
    "verify_appendix_suite",
    "verify_monoidal_laws",
]
