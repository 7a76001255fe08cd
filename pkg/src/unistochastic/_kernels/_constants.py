"""Damping schedule and stopping thresholds shared by both kernel backends."""

GTOL = 1e-14    # max |J^T r| at which a start is considered stationary
XTOL = 1e-13    # max |step| of an accepted step at which a start stops
MU_UP = 10.0    # damping growth after a non-descent step
MU_DOWN = 0.1   # damping shrink after a descent step
MU_MIN = 1e-15
MU_MAX = 1e12   # damping beyond this means the start has stalled
