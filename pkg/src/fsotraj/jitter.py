"""Generalized 3D attitude-jitter model and the induced pointing-error statistics.

Roll/pitch/yaw perturbations (alpha, beta, gamma) are zero-mean jointly
Gaussian with covariance ``Sigma``. Projected onto the plane orthogonal to the
UAV-to-GS pointing vector they produce a pointing-error angle whose law is
Hoyt (Nakagami-q); the two nonzero eigenvalues of ``Sigma^1/2 A Sigma^1/2``
are the squared semi-axes of that law.

Pure functions throughout; the sampler takes an explicit seed or Generator,
so parallel Monte Carlo runs on independently seeded streams merge
order-independently.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateGeometryError, DegenerateHoytWarning, InvalidCovarianceError, UnsupportedReductionError
from .kinematics import rotation_matrix
from .numerics import eig3_symmetric, i0e, sqrtm_psd3

# Below this axis ratio the Hoyt density is evaluated in its folded-normal
# limit to dodge overflow in the Bessel argument.
_Q_DEGENERATE = 1e-4


@dataclass(frozen=True)
class JitterCovariance:
    """Attitude-jitter second moments: std devs in radians plus pairwise correlations.

    ``rho = (rho_roll_pitch, rho_pitch_yaw, rho_yaw_roll)``.
    """

    sigma: tuple[float, float, float]
    rho: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.sigma) != 3 or len(self.rho) != 3:
            raise InvalidCovarianceError("need three std devs and three correlations")
        if any(s < 0.0 for s in self.sigma):
            raise InvalidCovarianceError("jitter std devs must be nonnegative")
        if any(abs(r) > 1.0 for r in self.rho):
            raise InvalidCovarianceError("correlations must lie in [-1, 1]")
        m = self.matrix
        evals = eig3_symmetric(m)
        tol = max(1e-12, 1e-12 * float(np.trace(m)))
        if evals[-1] < -tol:
            raise InvalidCovarianceError(f"covariance not PSD: eigenvalues {evals}")

    @property
    def matrix(self) -> np.ndarray:
        sa, sb, sg = self.sigma
        rab, rbg, rga = self.rho
        return np.array(
            [
                [sa * sa, rab * sa * sb, rga * sg * sa],
                [rab * sa * sb, sb * sb, rbg * sb * sg],
                [rga * sg * sa, rbg * sb * sg, sg * sg],
            ]
        )

    @property
    def is_diagonal(self) -> bool:
        return all(r == 0.0 for r in self.rho)

    @classmethod
    def from_mrad(cls, sigma_mrad, rho=(0.0, 0.0, 0.0)) -> "JitterCovariance":
        return cls(tuple(s * 1e-3 for s in sigma_mrad), tuple(rho))


@dataclass(frozen=True)
class HoytParams:
    """Pointing-error law parameters: semi-axis variances lam1 >= lam2 (rad^2).

    ``q = sqrt(lam2/lam1)`` (the standard 0 < q <= 1 axis-ratio convention) and
    ``omega = lam1 + lam2 = E[theta_p^2]``.
    """

    lam1: float
    lam2: float
    q: float = field(init=False)
    omega: float = field(init=False)

    def __post_init__(self):
        if not (self.lam1 >= self.lam2 >= 0.0):
            raise ValueError("require lam1 >= lam2 >= 0")
        object.__setattr__(self, "q", math.sqrt(self.lam2 / self.lam1) if self.lam1 > 0 else 1.0)
        object.__setattr__(self, "omega", self.lam1 + self.lam2)


class JitterSample(NamedTuple):
    """One draw of the attitude perturbation (roll, pitch, yaw), radians."""

    alpha: float
    beta: float
    gamma: float


class JitterMatrices(NamedTuple):
    exact: np.ndarray
    linearized: np.ndarray


def jitter_matrix(sample: JitterSample) -> JitterMatrices:
    """Attitude-perturbation rotation, both the exact product and its small-angle form."""
    a, b, g = sample
    exact = rotation_matrix("x", a) @ rotation_matrix("y", b) @ rotation_matrix("z", g)
    linearized = np.array([[1.0, -g, b], [g, 1.0, -a], [-b, a, 1.0]])
    return JitterMatrices(exact, linearized)


def error_projection_matrix(u_hat: np.ndarray) -> np.ndarray:
    """Projector onto the plane orthogonal to the pointing direction: I - u u^T / |u|^2."""
    u = np.asarray(u_hat, dtype=float)
    z_sq = float(np.dot(u, u))
    if z_sq == 0.0:
        raise DegenerateGeometryError("pointing vector has zero norm")
    return np.eye(3) - np.outer(u, u) / z_sq


def hoyt_params(cov: JitterCovariance, u_hat: np.ndarray) -> HoytParams:
    """Pointing-error law for a given jitter covariance and pointing direction.

    lam1, lam2 are the two largest eigenvalues of Sigma^1/2 A Sigma^1/2 (the
    third vanishes because the projector has rank 2); their sum equals
    Tr(Sigma A).
    """
    a_mat = error_projection_matrix(u_hat)
    root = sqrtm_psd3(cov.matrix)
    evals = eig3_symmetric(root @ a_mat @ root)
    lam1, lam2 = float(evals[0]), float(max(evals[1], 0.0))
    return HoytParams(lam1=max(lam1, lam2), lam2=lam2)


def expected_square_error(params: HoytParams) -> float:
    """Mean-square pointing-error angle, rad^2."""
    return params.omega


def pointing_weight_matrix(cov: JitterCovariance) -> np.ndarray:
    """Diagonal weights D with u^T D u / |u|^2 = E[theta_p^2] for diagonal covariances."""
    if not cov.is_diagonal:
        raise UnsupportedReductionError("pointing weight matrix requires a diagonal covariance")
    sa, sb, sg = (s * s for s in cov.sigma)
    return np.diag([sb + sg, sg + sa, sa + sb])


def hoyt_pdf(theta, params: HoytParams):
    """Density of the pointing-error angle at theta >= 0 (1/radians).

    Collapses to the folded-normal limit when the minor axis vanishes
    (q below 1e-4), with a DegenerateHoytWarning.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0.0):
        raise ValueError("theta must be nonnegative")
    if params.omega == 0.0:
        raise ValueError("degenerate zero-jitter law has no density")
    q, omega = params.q, params.omega
    if q < _Q_DEGENERATE:
        warnings.warn(
            "minor jitter axis is numerically zero; using the folded-normal limit",
            DegenerateHoytWarning,
            stacklevel=2,
        )
        lam1 = params.lam1
        out = np.sqrt(2.0 / (math.pi * lam1)) * np.exp(-th * th / (2.0 * lam1))
        return float(out) if np.ndim(theta) == 0 else out
    q_sq = q * q
    # exp(-c) I0(d) with c - d = theta^2 (1+q^2) / (2 omega) keeps both factors bounded.
    bessel_arg = (1.0 - q_sq * q_sq) * th * th / (4.0 * q_sq * omega)
    out = (
        ((1.0 + q_sq) * th / (q * omega))
        * np.exp(-th * th * (1.0 + q_sq) / (2.0 * omega))
        * i0e(bessel_arg)
    )
    return float(out) if np.ndim(theta) == 0 else out


def hoyt_cdf(theta, params: HoytParams, grid_points: int = 40001):
    """CDF of the pointing-error angle by dense trapezoidal quadrature of the pdf."""
    th = np.asarray(theta, dtype=float)
    upper = max(float(np.max(th)) if th.size else 0.0, 10.0 * math.sqrt(params.omega))
    grid = np.linspace(0.0, upper * 1.000001, grid_points)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateHoytWarning)
        pdf = hoyt_pdf(grid, params)
    cum = np.concatenate(([0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(grid))))
    out = np.interp(th, grid, np.clip(cum, 0.0, 1.0))
    return float(out) if np.ndim(theta) == 0 else out


def _covariance_factor(cov: JitterCovariance) -> np.ndarray:
    mat = cov.matrix
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        # Singular (or numerically indefinite-by-rounding) covariance.
        root = sqrtm_psd3(mat)
        return root


def sample_error_angles(
    cov: JitterCovariance,
    u_hat: np.ndarray,
    n: int,
    seed=0,
    mode: str = "exact",
) -> np.ndarray:
    """Monte Carlo draws of the pointing-error angle theta_p (radians).

    ``exact`` applies the full perturbation rotation to the pointing vector and
    measures the resulting angle; ``small_angle`` evaluates sqrt(x^T A x).
    Deterministic for a given seed (an int or a numpy Generator).
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if mode not in ("exact", "small_angle"):
        raise ValueError(f"unknown mode {mode!r}")
    u = np.asarray(u_hat, dtype=float)
    a_mat = error_projection_matrix(u)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = rng.standard_normal((n, 3)) @ _covariance_factor(cov).T

    if mode == "small_angle":
        return np.sqrt(np.maximum(np.einsum("ni,ij,nj->n", x, a_mat, x), 0.0))

    ca, sa = np.cos(x[:, 0]), np.sin(x[:, 0])
    cb, sb = np.cos(x[:, 1]), np.sin(x[:, 1])
    cg, sg = np.cos(x[:, 2]), np.sin(x[:, 2])
    # Rows of R_x(alpha) R_y(beta) R_z(gamma), vectorized over samples.
    r00, r01, r02 = cb * cg, -cb * sg, sb
    r10, r11, r12 = ca * sg + sa * sb * cg, ca * cg - sa * sb * sg, -sa * cb
    r20, r21, r22 = sa * sg - ca * sb * cg, sa * cg + ca * sb * sg, ca * cb
    ux = r00 * u[0] + r01 * u[1] + r02 * u[2]
    uy = r10 * u[0] + r11 * u[1] + r12 * u[2]
    uz = r20 * u[0] + r21 * u[1] + r22 * u[2]
    cx = uy * u[2] - uz * u[1]
    cy = uz * u[0] - ux * u[2]
    cz = ux * u[1] - uy * u[0]
    cross = np.sqrt(cx * cx + cy * cy + cz * cz)
    dot = ux * u[0] + uy * u[1] + uz * u[2]
    return np.arctan2(cross, dot)


def reduce_jitter_dof(cov: JitterCovariance, dof: int) -> JitterCovariance:
    """Map a diagonal 3-DoF jitter model onto a 1- or 2-DoF surrogate.

    The 2-DoF surrogate pools roll and pitch; the 1-DoF surrogate pools all
    three axes. Total jitter power Tr(Sigma) is preserved in every mode.
    """
    if dof == 3:
        return cov
    if dof not in (1, 2):
        raise ValueError("dof must be 1, 2, or 3")
    if not cov.is_diagonal:
        raise UnsupportedReductionError("DoF reduction is defined for uncorrelated jitter only")
    sa, sb, sg = cov.sigma
    if dof == 2:
        pooled = math.sqrt((sa * sa + sb * sb) / 2.0)
        return JitterCovariance((pooled, pooled, sg))
    iso = math.sqrt((sa * sa + sb * sb + sg * sg) / 3.0)
    return JitterCovariance((iso, iso, iso))
