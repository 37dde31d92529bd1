"""FSO link budget: visibility-driven attenuation, Gaussian-beam pointing loss,
log-normal scintillation, and the link's instantaneous / ergodic capacity.

The electrical SNR argument is Gamma = e P^2 / (2 pi sigma^2) with received
power P = h_a h_l h_p R P_T; capacity is 0.5 log2(1 + Gamma) per channel use.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NearFieldWarning
from .jitter import HoytParams, JitterCovariance, sample_error_angles

_REFERENCE_WAVELENGTH = 550e-9  # meters, anchor of the visibility scattering law
_GAMMA_FLOOR = 1e-300  # keeps log(Gamma) finite on pathological inputs


@dataclass(frozen=True)
class LinkParams:
    """All link-budget constants, SI units."""

    transmit_power: float = 10e-3  # W
    noise_std: float = 1e-5  # A, shot-noise standard deviation
    responsivity: float = 0.5  # A/W
    aperture: float = 0.20  # m, receiver aperture diameter
    sigma_div: float = 1.5e-3  # rad, half the 1-sigma divergence angle
    sigma_i: float = 0.3  # log-amplitude std of scintillation
    visibility: float = 3e3  # m
    wavelength: float = 1550e-9  # m

    def __post_init__(self):
        positive = {
            "transmit_power": self.transmit_power,
            "noise_std": self.noise_std,
            "responsivity": self.responsivity,
            "aperture": self.aperture,
            "sigma_div": self.sigma_div,
            "visibility": self.visibility,
            "wavelength": self.wavelength,
        }
        for name, value in positive.items():
            if value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.sigma_i < 0.0:
            raise ValueError("sigma_i must be nonnegative")

    @property
    def sigma_b(self) -> float:
        """Atmospheric attenuation coefficient, 1/m."""
        return attenuation_coefficient(self.visibility, self.wavelength)


class LinkBudget(NamedTuple):
    """One realized channel state and its SNR argument."""

    h_a: float
    h_l: float
    h_p: float
    z: float
    gamma: float


def link_budget(h_a: float, theta_p: float, z: float, link: "LinkParams") -> LinkBudget:
    """Assemble the multiplicative channel state at one geometry."""
    h_l = atmospheric_loss(link.sigma_b, z)
    h_p = pointing_loss(theta_p, z, link)
    return LinkBudget(h_a=h_a, h_l=h_l, h_p=h_p, z=z, gamma=gamma_from_gains(h_a, h_l, h_p, link))


class MCEstimate(NamedTuple):
    """Monte Carlo mean with its standard error and sample count."""

    value: float
    stderr: float
    n: int


def attenuation_coefficient(visibility: float, wavelength: float) -> float:
    """Empirical visibility-to-attenuation law, 1/m.

    The scattering-size exponent switches at 6 km and 50 km of visibility.
    """
    if visibility <= 0.0:
        raise ValueError("visibility must be positive")
    v_km = visibility / 1e3
    if v_km >= 50.0:
        q_sca = 1.6
    elif v_km >= 6.0:
        q_sca = 1.3
    else:
        q_sca = 0.585 * v_km ** (1.0 / 3.0)
    return (3.91 / visibility) * (wavelength / _REFERENCE_WAVELENGTH) ** (-q_sca)


def atmospheric_loss(sigma_b: float, z: float) -> float:
    """Exponential clear-air power decay exp(-sigma_b z)."""
    if z < 0.0:
        raise ValueError("propagation distance must be nonnegative")
    return math.exp(-sigma_b * z)


def max_pointing_gain(z: float, link: LinkParams) -> float:
    """On-axis pointing gain A0 = a^2 / (2 z sigma_div), far-field approximation."""
    if z <= 0.0:
        raise ValueError("propagation distance must be positive")
    return link.aperture**2 / (2.0 * z * link.sigma_div)


def pointing_loss(theta_p, z: float, link: LinkParams):
    """Gaussian-beam pointing gain A0 exp(-theta_p^2 / (2 sigma_div^2)).

    Warns when the beam footprint is within 10 aperture diameters (the
    far-field gain approximation degrades there).
    """
    th = np.asarray(theta_p, dtype=float)
    if np.any(th < 0.0):
        raise ValueError("pointing error angle must be nonnegative")
    footprint = 2.0 * z * link.sigma_div
    if footprint <= 10.0 * link.aperture:
        warnings.warn(
            f"beam footprint {footprint:.3g} m is within 10 apertures; "
            "far-field gain approximation is doubtful",
            NearFieldWarning,
            stacklevel=2,
        )
    out = max_pointing_gain(z, link) * np.exp(-th * th / (2.0 * link.sigma_div**2))
    return float(out) if np.ndim(theta_p) == 0 else out


def gamma_from_gains(h_a, h_l, h_p, link: LinkParams):
    """Electrical SNR argument e P^2 / (2 pi sigma^2)."""
    p_rx = h_a * h_l * h_p * link.responsivity * link.transmit_power
    return math.e * p_rx * p_rx / (2.0 * math.pi * link.noise_std**2)


def instantaneous_capacity(h_a, h_l, h_p, link: LinkParams):
    """Capacity 0.5 log2(1 + Gamma) for one channel realization, bits/channel use."""
    out = 0.5 * np.log2(1.0 + gamma_from_gains(h_a, h_l, h_p, link))
    return float(out) if np.ndim(out) == 0 else out


class LogGammaTerms(NamedTuple):
    """Additive decomposition of E[log Gamma] (natural log)."""

    base: float  # log(e R^2 P_T^2 / (2 pi sigma^2))
    scintillation: float  # 2 E[log h_a] = -4 sigma_i^2
    atmospheric: float  # 2 log h_l = -2 sigma_b z
    pointing: float  # 2 E[log h_p]


def capacity_offset(link: LinkParams) -> float:
    """Distance- and jitter-independent constant of E[log Gamma].

    log(e R^2 P_T^2 a^4 / (8 pi sigma^2 sigma_div^2)) - 4 sigma_i^2.
    """
    return (
        math.log(
            math.e
            * link.responsivity**2
            * link.transmit_power**2
            * link.aperture**4
            / (8.0 * math.pi * link.noise_std**2 * link.sigma_div**2)
        )
        - 4.0 * link.sigma_i**2
    )


def log_gamma_terms(link: LinkParams, z: float, hoyt: HoytParams) -> LogGammaTerms:
    """The four independent additive components of E[log Gamma]."""
    base = math.log(
        math.e * link.responsivity**2 * link.transmit_power**2 / (2.0 * math.pi * link.noise_std**2)
    )
    pointing = (
        2.0 * math.log(link.aperture**2 / (2.0 * link.sigma_div))
        - 2.0 * math.log(z)
        - hoyt.omega / link.sigma_div**2
    )
    return LogGammaTerms(
        base=base,
        scintillation=-4.0 * link.sigma_i**2,
        atmospheric=-2.0 * link.sigma_b * z,
        pointing=pointing,
    )


def expected_log_gamma(link: LinkParams, z: float, hoyt: HoytParams) -> float:
    """Exact E[log Gamma] under the channel model, nats.

    Equals capacity_offset(link) - 2 sigma_b z - 2 log z - omega / sigma_div^2,
    with omega the mean-square pointing-error angle.
    """
    return (
        capacity_offset(link)
        - 2.0 * link.sigma_b * z
        - 2.0 * math.log(z)
        - hoyt.omega / link.sigma_div**2
    )


def log_bound_params(gamma_l: float) -> tuple[float, float]:
    """Slope and intercept of the log-domain tangent bound at the anchor gamma_l.

    log(1 + Gamma) >= grad * log(Gamma) + delta for every Gamma > 0, with
    equality at Gamma = gamma_l.
    """
    if gamma_l <= 0.0:
        raise ValueError("anchor must be positive")
    grad = gamma_l / (1.0 + gamma_l)
    delta = math.log1p(gamma_l) - grad * math.log(gamma_l)
    return grad, delta


def ergodic_capacity(e_log_gamma: float, gamma_l: float) -> float:
    """Anchored lower bound on the ergodic capacity, bits/channel use.

    (1 / (2 log 2)) * (grad * E[log Gamma] + delta); tight when the anchor is
    exp(E[log Gamma]).
    """
    grad, delta = log_bound_params(gamma_l)
    return (grad * e_log_gamma + delta) / (2.0 * math.log(2.0))


def mc_log_gamma(
    link: LinkParams,
    z: float,
    cov: JitterCovariance,
    u_hat: np.ndarray,
    n: int = 10**6,
    seed=0,
    mode: str = "small_angle",
) -> MCEstimate:
    """Monte Carlo estimate of E[log Gamma], the oracle for expected_log_gamma."""
    gammas = _sample_gamma(link, z, cov, u_hat, n, seed, mode)
    logs = np.log(np.maximum(gammas, _GAMMA_FLOOR))
    return MCEstimate(float(np.mean(logs)), float(np.std(logs) / math.sqrt(n)), n)


def mc_ergodic_capacity(
    link: LinkParams,
    z: float,
    cov: JitterCovariance,
    u_hat: np.ndarray,
    n: int = 10**6,
    seed=0,
    mode: str = "small_angle",
) -> MCEstimate:
    """Monte Carlo estimate of the true ergodic capacity E[0.5 log2(1 + Gamma)].

    The oracle against which every closed form in this module is checked.
    """
    gammas = _sample_gamma(link, z, cov, u_hat, n, seed, mode)
    caps = 0.5 * np.log2(1.0 + gammas)
    return MCEstimate(float(np.mean(caps)), float(np.std(caps) / math.sqrt(n)), n)


def _sample_gamma(link, z, cov, u_hat, n, seed, mode) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one sample")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    theta_p = sample_error_angles(cov, u_hat, n, seed=rng, mode=mode)
    # log h_a ~ N(-2 sigma_i^2, 4 sigma_i^2), which makes E[h_a] = 1.
    h_a = np.exp(-2.0 * link.sigma_i**2 + 2.0 * link.sigma_i * rng.standard_normal(n))
    h_l = atmospheric_loss(link.sigma_b, z)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearFieldWarning)
        h_p = pointing_loss(theta_p, z, link)
    p_rx = h_a * h_l * h_p * link.responsivity * link.transmit_power
    return math.e * p_rx * p_rx / (2.0 * math.pi * link.noise_std**2)


def quadrature_ergodic_capacity(
    link: LinkParams,
    z: float,
    hoyt: HoytParams,
    nodes_scint: int = 48,
    nodes_jitter: int = 32,
) -> float:
    """Deterministic evaluation of the true ergodic capacity by Gauss-Hermite quadrature.

    Integrates 0.5 log2(1 + exp(t)) over t = const + 2 log h_a - theta_p^2 /
    sigma_div^2, with the scintillation and the two pointing-error axes each
    carrying one Hermite rule.
    """
    const = (
        math.log(
            math.e * link.responsivity**2 * link.transmit_power**2 / (2.0 * math.pi * link.noise_std**2)
        )
        - 2.0 * link.sigma_b * z
        + 2.0 * math.log(link.aperture**2 / (2.0 * z * link.sigma_div))
    )
    x_s, w_s = np.polynomial.hermite_e.hermegauss(nodes_scint)
    w_s = w_s / math.sqrt(2.0 * math.pi)
    x_j, w_j = np.polynomial.hermite_e.hermegauss(nodes_jitter)
    w_j = w_j / math.sqrt(2.0 * math.pi)

    scint = -4.0 * link.sigma_i**2 + 4.0 * link.sigma_i * x_s  # 2 log h_a at the nodes
    theta_sq = hoyt.lam1 * np.square(x_j)[:, None] + hoyt.lam2 * np.square(x_j)[None, :]
    jitter = -(theta_sq / link.sigma_div**2).ravel()
    w_jit = (w_j[:, None] * w_j[None, :]).ravel()

    t = const + scint[:, None] + jitter[None, :]
    cap = 0.5 * np.logaddexp(0.0, t) / math.log(2.0)
    return float(w_s @ cap @ w_jit)
