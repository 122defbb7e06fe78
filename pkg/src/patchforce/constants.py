"""Physical constants and unit factors (SI throughout)."""

EPS0 = 8.8541878128e-12  # F/m

UM = 1e-6
NM = 1e-9
MM = 1e-3
CM = 1e-2
MV = 1e-3
