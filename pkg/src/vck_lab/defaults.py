"""Central configuration layer: every cap, tolerance, and dyadic height.

CLI flags override these per invocation; nothing else in the package hardcodes
a tolerance.
"""

# Pointwise value checks (range membership at construction time).
POINTWISE_TOL = 1e-12

# Integral identities (Fubini, inner-product identities, projection checks).
INTEGRAL_TOL = 1e-9

# Shattering search: maximum number of grid points in a box, i.e. up to
# 2**GRID_CAP subsets need witnesses.
GRID_CAP = 16

# Box norms: maximum total degree n (the corner product has 2**n factors),
# and a guard on the doubled-grid cell count.
DEGREE_CAP = 6
DOUBLED_CELL_CAP = 1 << 24

# A raw box-norm integral in (-BOX_NORM_CLAMP, 0) is clamped to zero and
# flagged; anything below -BOX_NORM_CLAMP raises NumericalFailureError.
BOX_NORM_CLAMP = 1e-9

# Default dyadic height for (r, s) threshold grids and fiber families.
DYADIC_HEIGHT = 2

# Fuzziness diagnostic: largest dyadic height tried before the scan is
# declared failed.  The threshold-pair grid is quadratic in 2**height, so
# this also bounds the scan cost; any within-cell value gap above 2**-8 is
# caught.
FUZZINESS_HEIGHT_CAP = 8

# Generator: membership gadget witness-part size cap (the part holds one
# vertex per subset of the box grid).
GADGET_SIZE_CAP = 1 << 16

# Zarankiewicz exhaustive search feasibility: per-arity maximum part size.
ZARANKIEWICZ_LIMITS = {1: 16, 2: 4, 3: 2}

# Alternating-minimization fitter defaults.
ALS_ITERS = 25
FIT_ZERO_TOL = 1e-12
MONOTONE_SLACK = 1e-9

# Adversary defaults.
SCORE_RESTARTS = 5
