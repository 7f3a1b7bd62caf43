"""Model constants for the standard CR sphere (S^3, theta_0).

All volume-dependent constants use the round measure of total mass 2*pi^2,
which is also the Lebesgue mass of the Cayley Jacobian on the Heisenberg group.
"""

import math

import numpy as np

#: Total volume of S^3 under dv_{theta_0}.
VOLUME = 2.0 * math.pi**2

#: Coefficient of the logarithmic singularity of the Green's function.
GAMMA3 = 1.0 / (4.0 * math.pi**2)

#: Robin mass of the standard contact form (constant on the sphere).
SPHERE_MASS = math.log(2.0) / (8.0 * math.pi**2)

#: Total mass V * m_{theta_0} = ln(2)/4.
SPHERE_TOTAL_MASS = VOLUME * SPHERE_MASS

#: Constant Q'-curvature of theta_0; integrates to 16*pi^2.
Q_PRIME_SPHERE = 8.0

#: Volume normalization of the Heisenberg log-HLS inequality.
OMEGA3 = VOLUME

#: Overall factor of the pluriharmonic eigenvalues nu(j) = 8 j (j + 1).
EIGEN_SCALE = 8.0

#: First nonzero eigenvalue nu(1).
LAMBDA1 = 16.0

#: Default pluriharmonic truncation degree.
DEFAULT_DEGREE = 32

#: Quadratic-form weight in the Moser-Trudinger residual (kappa * <u, A u> / V).
#: Frozen after calibration on the |J_k| family; see functionals.calibrate_mt_constant.
MT_KAPPA = 1.0 / 32.0


def eigenvalue(j):
    """nu(j) = 8 j (j + 1); zero for the constants."""
    j = np.asarray(j)
    return EIGEN_SCALE * j * (j + 1.0)


def summary():
    return {
        "gamma3": GAMMA3,
        "V": VOLUME,
        "mass": SPHERE_MASS,
        "total_mass": SPHERE_TOTAL_MASS,
        "q_prime": Q_PRIME_SPHERE,
        "lambda1": LAMBDA1,
        "mt_kappa": MT_KAPPA,
    }
