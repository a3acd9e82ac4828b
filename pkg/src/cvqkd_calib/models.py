"""Entanglement-based covariance models for the three SNU calibration schemes.

Three receiver models are built here, all sharing the same prepare-and-
measure statistics but differing in how much of the detector is trusted:

* conventional: two-step calibration (electronic noise measured
  separately); detection efficiency and electronic noise are both
  trusted, the latter modeled by an EPR source coupled through the
  detection beamsplitter.
* one-time two-mode: single-step calibration; only modes (A, B3) enter
  the security analysis, so every detector imperfection is handed to the
  eavesdropper.
* one-time three-mode: single-step calibration with the detection-
  efficiency loss mode C kept on the trusted side; the electronic noise
  becomes an untrusted loss of transmittance eta_e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .gaussian import (
    CovarianceMatrix,
    apply_beamsplitter,
    attach_vacuum,
    keep_modes,
)

# Fiber attenuation used to convert link distance to transmittance,
# T = 10^(-ALPHA_DB_PER_KM * L / 10). Standard telecom value.
ALPHA_DB_PER_KM = 0.2

_SZ = np.diag([1.0, -1.0])
_I2 = np.eye(2)


class CalibrationModel(Enum):
    CONVENTIONAL_TTE = "conventional"
    ONE_TIME_TWO_MODE = "two_mode"
    ONE_TIME_THREE_MODE = "three_mode"


@dataclass(frozen=True)
class SystemParams:
    """Protocol, channel and detector parameters, all in shot-noise units.

    v is the EPR source variance (> 1), t the channel transmittance,
    eps_c the channel excess noise referred to the channel input, eta_d
    the detection efficiency, v_ele the electronic noise variance, beta
    the reconciliation efficiency, v_rin an optional relative-intensity
    noise variance treated as additive Gaussian noise at the detector.
    """

    v: float
    t: float
    eps_c: float
    eta_d: float
    v_ele: float
    beta: float
    v_rin: float = 0.0

    def __post_init__(self) -> None:
        if not self.v > 1.0:
            raise ValueError(f"EPR variance must exceed 1, got {self.v}")
        if not 0.0 < self.t <= 1.0:
            raise ValueError(f"transmittance must lie in (0, 1], got {self.t}")
        if self.eps_c < 0.0:
            raise ValueError(f"excess noise must be nonnegative, got {self.eps_c}")
        if not 0.0 < self.eta_d <= 1.0:
            raise ValueError(f"detection efficiency must lie in (0, 1], got {self.eta_d}")
        if self.v_ele < 0.0:
            raise ValueError(f"electronic noise must be nonnegative, got {self.v_ele}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"reconciliation efficiency must lie in (0, 1], got {self.beta}")
        if self.v_rin < 0.0:
            raise ValueError(f"RIN variance must be nonnegative, got {self.v_rin}")

    @property
    def eta_e(self) -> float:
        """Electronic-noise beamsplitter transmittance of this detector."""
        return eta_e_from_noise(self.v_ele, self.v_rin)

    def detector_split(self) -> DetectorSplit:
        return DetectorSplit(eta_e=self.eta_e, eta_d=self.eta_d)


@dataclass(frozen=True)
class DetectorSplit:
    """The two trusted-loss transmittances of the one-time detector model."""

    eta_e: float
    eta_d: float

    def __post_init__(self) -> None:
        for name, value in (("eta_e", self.eta_e), ("eta_d", self.eta_d)):
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")


@dataclass(frozen=True)
class SnuScenario:
    """Which calibration model to evaluate, and how the SNU is (mis)known.

    n0 is the ratio (calibrated SNU)/(true SNU): 1 means perfect
    calibration, and Bob-side second moments get divided by n0.
    calib_error is a signed fractional miscalibration delta applied
    through :func:`apply_miscalibration` before rate evaluation.
    """

    model: CalibrationModel
    n0: float = 1.0
    calib_error: float = 0.0

    def __post_init__(self) -> None:
        if not self.n0 > 0.0:
            raise ValueError(f"n0 must be positive, got {self.n0}")
        if not 1.0 + self.calib_error > 0.0:
            raise ValueError(f"calibration error {self.calib_error} leaves no signal")


def eta_e_from_noise(v_ele: float, v_rin: float = 0.0) -> float:
    """Transmittance that absorbs additive detector noise as a loss.

    In shot-noise units the LO power normalizes to 1, so the joint
    one-time unit is 1 + v_ele + v_rin and the equivalent beamsplitter
    transmittance is its reciprocal.
    """
    if v_ele < 0.0 or v_rin < 0.0:
        raise ValueError("noise variances must be nonnegative")
    return 1.0 / (1.0 + v_ele + v_rin)


def epr_state(v: float) -> CovarianceMatrix:
    """Two-mode squeezed state: diagonal v*I2, cross sqrt(v^2-1)*sigma_z."""
    if v < 1.0:
        raise ValueError(f"EPR variance must be >= 1, got {v}")
    c = math.sqrt(v * v - 1.0)
    return CovarianceMatrix(_blocks4(v * _I2, c * _SZ, v * _I2))


def _blocks4(a: np.ndarray, c: np.ndarray, b: np.ndarray) -> np.ndarray:
    g = np.zeros((4, 4))
    g[:2, :2] = a
    g[:2, 2:] = c
    g[2:, :2] = c.T
    g[2:, 2:] = b
    return g


def channel_output_matrix(params: SystemParams) -> CovarianceMatrix:
    """State (A, B1') after the channel, before any detector optics."""
    v, t, ec = params.v, params.t, params.eps_c
    cross = math.sqrt(t * (v * v - 1.0))
    vb = t * (v - 1.0 + ec) + 1.0
    return CovarianceMatrix(_blocks4(v * _I2, cross * _SZ, vb * _I2))


def build_two_mode(params: SystemParams, scenario: SnuScenario) -> CovarianceMatrix:
    """4x4 covariance of (A, B3) for the one-time two-mode model.

    Bob's block carries the full product transmittance t*eta_d*eta_e and,
    for n0 != 1, the calibrated-over-true SNU ratio divides his variance
    and scales the cross correlation by 1/sqrt(n0).
    """
    if scenario.model is not CalibrationModel.ONE_TIME_TWO_MODE:
        raise ValueError(f"scenario model is {scenario.model}, expected two-mode")
    v, n0 = params.v, scenario.n0
    tau = params.t * params.eta_d * params.eta_e
    cross = math.sqrt(tau * (v * v - 1.0) / n0)
    vb = (tau * (v - 1.0 + params.eps_c) + 1.0) / n0
    return CovarianceMatrix(_blocks4(v * _I2, cross * _SZ, vb * _I2))


def build_three_mode(params: SystemParams, scenario: SnuScenario) -> CovarianceMatrix:
    """6x6 covariance of (A, B3, C) for the one-time three-mode model.

    Built by the physical sequence: channel output, vacuum ancilla mixed
    on the electronic-noise beamsplitter eta_e (its reflected mode is
    unobservable and traced out), then a second vacuum ancilla mixed on
    the detection-efficiency beamsplitter eta_d whose reflected mode C
    stays on the trusted side.

    For n0 != 1 the B3 entries are rescaled and the unobserved mode C is
    reconstructed from the rescaled Bob variance through the trusted
    eta_d relations, which is how the receiver would rebuild the state
    from miscalibrated data.
    """
    if scenario.model is not CalibrationModel.ONE_TIME_THREE_MODE:
        raise ValueError(f"scenario model is {scenario.model}, expected three-mode")
    g = channel_output_matrix(params)
    g = attach_vacuum(g)
    g = apply_beamsplitter(g, 1, 2, params.eta_e)
    g = keep_modes(g, (0, 1))
    g = attach_vacuum(g)
    g = apply_beamsplitter(g, 1, 2, params.eta_d)
    if scenario.n0 != 1.0:
        g = _rescale_three_mode(g, params.eta_d, scenario.n0)
    return g


def _rescale_three_mode(g: CovarianceMatrix, eta_d: float, n0: float) -> CovarianceMatrix:
    """Apply the SNU ratio to B3 and rebuild mode C from trusted relations."""
    vb3 = g.data[2, 2] / n0
    cab3 = g.data[0, 2] / math.sqrt(n0)
    vc = (vb3 - 1.0) * (1.0 - eta_d) / eta_d + 1.0
    cac = cab3 * math.sqrt((1.0 - eta_d) / eta_d)
    cb3c = (vb3 - 1.0) * math.sqrt((1.0 - eta_d) * eta_d) / eta_d
    v = g.data[0, 0]
    out = np.zeros((6, 6))
    out[:2, :2] = v * _I2
    out[2:4, 2:4] = vb3 * _I2
    out[4:, 4:] = vc * _I2
    out[:2, 2:4] = cab3 * _SZ
    out[2:4, :2] = cab3 * _SZ
    out[:2, 4:] = cac * _SZ
    out[4:, :2] = cac * _SZ
    out[2:4, 4:] = cb3c * _I2
    out[4:, 2:4] = cb3c * _I2
    return CovarianceMatrix(out)


def conventional_channel_matrix(params: SystemParams, n0: float = 1.0) -> CovarianceMatrix:
    """Channel-output state (A, B1) as the receiver of the conventional
    model reconstructs it from its (possibly miscalibrated) measured
    moments and its trusted knowledge of eta_d and v_ele.

    At n0 = 1 this is exactly the physical channel output.
    """
    v, t, ec, ed = params.v, params.t, params.eps_c, params.eta_d
    ve = params.v_ele + params.v_rin
    vb3 = (ed * t * (v - 1.0 + ec) + 1.0 + ve) / n0
    cab3 = math.sqrt(ed * t * (v * v - 1.0) / n0)
    vb1 = (vb3 - (1.0 - ed) - ve) / ed
    cab1 = cab3 / math.sqrt(ed)
    return CovarianceMatrix(_blocks4(v * _I2, cab1 * _SZ, vb1 * _I2))


def build_conventional(params: SystemParams, scenario: SnuScenario) -> CovarianceMatrix:
    """8x8 covariance of (A, B3, F, G) for the conventional trusted model.

    F and G are the two modes of the detector's trusted EPR source with
    variance 1 + v_ele / (1 - eta_d), chosen so that mixing F into the
    signal on the eta_d beamsplitter adds exactly v_ele of noise to the
    detected mode: Bob's variance is eta_d*t*(v - 1 + eps_c) + 1 + v_ele.
    """
    if scenario.model is not CalibrationModel.CONVENTIONAL_TTE:
        raise ValueError(f"scenario model is {scenario.model}, expected conventional")
    ve = params.v_ele + params.v_rin
    if params.eta_d == 1.0 and ve > 0.0:
        raise ValueError(
            "eta_d = 1 with nonzero electronic noise needs an infinite detector "
            "EPR variance; use eta_d < 1 or v_ele = 0"
        )
    g_ab1 = conventional_channel_matrix(params, scenario.n0)
    v_epr = 1.0 if ve == 0.0 else 1.0 + ve / (1.0 - params.eta_d)
    out = np.zeros((8, 8))
    out[:4, :4] = g_ab1.data
    out[4:, 4:] = epr_state(v_epr).data
    g = CovarianceMatrix(out)
    return apply_beamsplitter(g, 1, 2, params.eta_d)


def snu_tte(v_tot: float, v_ele: float) -> float:
    """Two-time-evaluation shot-noise unit: total minus electronic noise."""
    if v_ele < 0.0:
        raise ValueError(f"electronic noise must be nonnegative, got {v_ele}")
    if v_tot <= v_ele:
        raise ValueError(
            f"total noise {v_tot} must exceed electronic noise {v_ele}"
        )
    return v_tot - v_ele


def snu_ote(v_tot: float) -> float:
    """One-time-evaluation shot-noise unit: the total variance itself."""
    if v_tot <= 0.0:
        raise ValueError(f"total noise must be positive, got {v_tot}")
    return v_tot


def worst_case_split(t_times_eta_e: float) -> tuple[float, float]:
    """Worst-case assignment of the jointly measured loss t*eta_e.

    Only the product is observable, so security requires the split that
    minimizes the key rate: the untrusted channel takes all of it
    (t = t*eta_e, eta_e = 1). The three-mode model with an eavesdropper
    purifying (A, B3, C) embodies exactly this worst case, since its key
    rate depends on t and eta_e only through their product.
    """
    if not 0.0 < t_times_eta_e <= 1.0:
        raise ValueError(f"loss product must lie in (0, 1], got {t_times_eta_e}")
    return t_times_eta_e, 1.0


def apply_miscalibration(params: SystemParams, delta: float) -> SystemParams:
    """Parameters Alice and Bob would estimate under an SNU error.

    Normalizing by an SNU that is wrong by the fraction delta scales
    Bob's normalized variance by (1 + delta) and the A-B covariance by
    sqrt(1 + delta). Re-estimating the channel from those two moments
    gives t_hat = (1 + delta) * t from the covariance, with the residual
    variance absorbed into the apparent excess noise. The estimates are
    clamped to their physical ranges (t_hat <= 1, eps_hat >= 0), as a
    constrained estimator would be.
    """
    if 1.0 + delta <= 0.0:
        raise ValueError(f"miscalibration delta {delta} leaves no signal")
    if delta == 0.0:
        return params
    v, t, ed = params.v, params.t, params.eta_d
    ve = params.v_ele + params.v_rin
    t_hat = (1.0 + delta) * t
    if t_hat <= 1.0:
        eps_hat = params.eps_c + delta * (1.0 + ve) / ((1.0 + delta) * ed * t)
    else:
        # Covariance implies t_hat > 1; the constrained estimate pins
        # t_hat = 1 and the variance equation then fixes eps_hat.
        vb_scaled = (1.0 + delta) * (ed * t * (v - 1.0 + params.eps_c) + 1.0 + ve)
        eps_hat = (vb_scaled - 1.0 - ve) / ed - (v - 1.0)
        t_hat = 1.0
    return replace(params, t=t_hat, eps_c=max(eps_hat, 0.0))


def transmittance_from_km(distance_km: float, alpha_db_per_km: float = ALPHA_DB_PER_KM) -> float:
    """Fiber transmittance at the given length."""
    if distance_km < 0.0:
        raise ValueError(f"distance must be nonnegative, got {distance_km}")
    return 10.0 ** (-alpha_db_per_km * distance_km / 10.0)
