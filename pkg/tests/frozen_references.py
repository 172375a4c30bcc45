"""Frozen reference values for sampler and darning tests.

Generated by the finite-difference solver in ``fd_oracle.py`` on the
box [-20, 30] x [0, 20] at grid steps 0.04 and 0.02 with Richardson
extrapolation of the observed first-order step dependence (the plain
value at 2i reproduces the closed form 2 - sqrt(3) to 2.5e-5).

Configuration: hull = vertical slit at 0 of height 1; slit domain = one
horizontal slit [9, 11] at height 1; probes 2i, 4+2i, 8+2i.

Regenerate with:  python tests/fd_oracle.py  (plus the Richardson step
documented there).
"""

PROBES = (2j, 4 + 2j, 8 + 2j)

# plain hull-hit expectation in H (no slits)
EXPECTED_IM = (0.2679240530607371, 0.04864663506646381, 0.014556727751556744)

# slit-avoiding expectation (slit absorbing)
SLIT_AVOIDING = (0.26783014830399055, 0.04832050893547091, 0.012721382035456542)

# darned expectation (slit held at its zero-flux constant)
DARNED = (0.2679206853027396, 0.04863052872132601, 0.014417172296437342)

# the zero-flux constant itself, i.e. the darned value at the slit state
DARNED_CONSTANT = 0.00498267435242406

FD_TOLERANCE = 3e-4  # measured residual of the extrapolated solver
