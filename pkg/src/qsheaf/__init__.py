"""Finite-model verification toolkit for sheaves on quantale-like sites.

Subpackages, bottom of the stack first:

- `finset`: finite sets/maps with verified (co)limits
- `quantale`: finite quantales, validation, bundled families
- `moncat`: semicartesian monoidal instances, pseudo-pullbacks, the
  coherence suite
- `coverage`: covering families and the four flavor checkers
- `presheaf`: presheaves on thin sites, Day convolution, sieves
- `sheaf`: the two sheaf checkers, gluing, the plus construction
- `reflect`: sheafification by orthogonal forcing, subobject lattices,
  the down-set quantale criterion
- `cli`: the `qsheaf` command
"""

__version__ = "0.1.0"
