"""First-order model of the pointing vector along a level-flight trajectory.

With pitch fixed at zero, the body-frame pointing vector is a function of
position, velocity, and acceleration only (yaw follows the velocity, roll
follows the lateral acceleration). This module evaluates that function at an
anchor state and assembles its Jacobian with respect to
(s_x, s_y, v_x, v_y, a_x, a_y), the ingredients of the convex restriction of
the jitter penalty.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DegenerateVelocityError


class PointingAnchor(NamedTuple):
    u_hat: np.ndarray  # (3,)
    jac: np.ndarray  # (3, 6) d u_hat / d (s_x, s_y, v_x, v_y, a_x, a_y)


def delta_u_coefficients(s, v, a, g: float) -> PointingAnchor:
    """Pointing vector and its 3x6 Jacobian at a level-flight anchor state.

    The altitude coordinate is constant, so no s_z column appears.
    """
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    sx, sy, sz = s
    vx, vy = v[0], v[1]
    ax, ay = a[0], a[1]

    n = math.hypot(vx, vy)
    if n == 0.0:
        raise DegenerateVelocityError("anchor velocity is zero; heading undefined")

    ct, st = vx / n, vy / n
    a0 = (vy * ax - vx * ay) / (n * g)
    den = math.sqrt(1.0 + a0 * a0)
    sphi, cphi = a0 / den, 1.0 / den

    u_hat = -np.array(
        [
            sx * ct + sy * st,
            -sx * cphi * st + sy * cphi * ct + sz * sphi,
            sx * sphi * st - sy * sphi * ct + sz * cphi,
        ]
    )

    # Partials of u_hat w.r.t. the four trig quantities.
    du_dct = np.array([-sx, -sy * cphi, sy * sphi])
    du_dst = np.array([-sy, sx * cphi, -sx * sphi])
    du_dcphi = np.array([0.0, sx * st - sy * ct, -sz])
    du_dsphi = np.array([0.0, -sz, -sx * st + sy * ct])

    n3 = n**3
    dct = np.array([vy * vy / n3, -vx * vy / n3])  # d cos(theta) / d (vx, vy)
    dst = np.array([-vx * vy / n3, vx * vx / n3])

    da0_dv = np.array([-ay / (n * g) - a0 * vx / (n * n), ax / (n * g) - a0 * vy / (n * n)])
    da0_da = np.array([vy / (n * g), -vx / (n * g)])
    dsphi_da0 = den**-3
    dcphi_da0 = -a0 * den**-3

    du_da0 = du_dcphi * dcphi_da0 + du_dsphi * dsphi_da0

    jac = np.zeros((3, 6))
    jac[:, 0] = -np.array([ct, -cphi * st, sphi * st])  # d/d s_x
    jac[:, 1] = -np.array([st, cphi * ct, -sphi * ct])  # d/d s_y
    jac[:, 2] = du_dct * dct[0] + du_dst * dst[0] + du_da0 * da0_dv[0]
    jac[:, 3] = du_dct * dct[1] + du_dst * dst[1] + du_da0 * da0_dv[1]
    jac[:, 4] = du_da0 * da0_da[0]
    jac[:, 5] = du_da0 * da0_da[1]
    return PointingAnchor(u_hat=u_hat, jac=jac)


def anchor_log_gamma(offset: float, sigma_b: float, sigma_div: float, s_norm, u_check, v_check):
    """E[log Gamma] expressed through the auxiliary quantities of one iterate.

    offset - 2 sigma_b |s| - U^2 / sigma_div^2 - 2 V, vectorized over slots.
    At tight auxiliaries this coincides with the channel closed form.
    """
    return (
        offset
        - 2.0 * sigma_b * np.asarray(s_norm, dtype=float)
        - np.asarray(u_check, dtype=float) ** 2 / sigma_div**2
        - 2.0 * np.asarray(v_check, dtype=float)
    )
