"""Shared parameter/output array layout for the physics kernels.

Both backends (compiled and pure Python) consume a flat float64 parameter
vector and write results into a flat float64 output vector; the indices here
are the single source of truth for that layout.
"""

(
    P_DT,
    P_GRAVITY,
    P_KP,
    P_KD,
    P_MAX_SPEED,
    P_MAX_ACCEL,
    P_QUAD_MASS,
    P_TETHER_K,
    P_SEG_LEN,
    P_MIN_ITERS,
    P_MAX_ITERS,
    P_EXIT_TOL,
    P_CX,
    P_CY,
    P_CZ,
    P_AX,
    P_AY,
    P_AZ,
    P_RADIUS,
    P_FRICTION,
    P_CONTACT_EPS,
) = range(21)
N_PARAMS = 21

(
    O_CONTACT,
    O_MAX_VIOLATION,
    O_MIN_RADIAL,
    O_DIVERGED,
    O_AXIS_FALLBACK,
) = range(5)
N_OUT = 5
