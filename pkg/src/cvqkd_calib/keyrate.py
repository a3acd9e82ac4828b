"""Secret key rates under collective attacks, asymptotic and finite-size.

Reverse reconciliation throughout: rate = beta * I_AB - chi_BE in the
asymptotic regime. Holevo bounds are evaluated numerically from the
models' covariance matrices through the generic symplectic-spectrum
pipeline; the published two-mode closed forms serve only as test
oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .calibration import CalibrationEstimate
from .gaussian import (
    CovarianceMatrix,
    MeasurementBasis,
    NumericalError,
    condition_on_homodyne,
    entropy_g,
    symplectic_eigenvalues,
)
from .models import (
    CalibrationModel,
    SnuScenario,
    SystemParams,
    apply_miscalibration,
    build_conventional,
    build_three_mode,
    build_two_mode,
    conventional_channel_matrix,
)

# Number of evenly spaced points scanned across the SNU confidence
# interval when taking the finite-size worst case. The rate need not be
# monotone in the SNU ratio, so both endpoints and the interior are
# sampled.
N0_SCAN_POINTS = 21

# The three-mode matrix must expose one unit symplectic eigenvalue (the
# detection beamsplitter's vacuum ancilla survives any rescaling).
_UNIT_EIGENVALUE_TOL = 1e-6


class Regime(Enum):
    ASYMPTOTIC = "asymptotic"
    FINITE_SIZE = "finite_size"


@dataclass(frozen=True)
class FiniteSizeParams:
    """Block accounting and failure probabilities of the finite-size analysis.

    block_length is the total number N of exchanged symbols,
    key_fraction the share n/N kept for key distillation, and
    calib_samples_m the number of calibration measurements behind the
    SNU confidence interval.
    """

    block_length: int
    key_fraction: float
    eps_pe: float
    eps_pa: float
    eps_smooth: float
    calib_samples_m: int
    dim_hx: int = 2

    def __post_init__(self) -> None:
        if self.block_length < 1:
            raise ValueError(f"block length must be positive, got {self.block_length}")
        if not 0.0 < self.key_fraction < 1.0:
            raise ValueError(f"key fraction must lie in (0, 1), got {self.key_fraction}")
        for name, p in (("eps_pe", self.eps_pe), ("eps_pa", self.eps_pa),
                        ("eps_smooth", self.eps_smooth)):
            if not 0.0 < p < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {p}")
        if self.key_fraction * self.block_length < 1.0:
            raise ValueError("key share n = key_fraction * N must be at least 1")
        if self.dim_hx < 1:
            raise ValueError(f"raw-key alphabet dimension must be positive, got {self.dim_hx}")
        if not 1 <= self.calib_samples_m <= self.block_length:
            raise ValueError(
                f"calibration samples must lie in [1, N], got {self.calib_samples_m}"
            )

    @property
    def n_key(self) -> float:
        return self.key_fraction * self.block_length


@dataclass(frozen=True)
class KeyRateResult:
    """Secret key rate plus its decomposition.

    rate_bits_per_pulse may be negative; clamping to zero is left to the
    presentation layer. In the finite-size regime chi_be is the worst
    case over the scanned SNU interval and worst_n0 records where it was
    attained; delta_n is zero in the asymptotic regime.
    """

    rate_bits_per_pulse: float
    i_ab: float
    chi_be: float
    delta_n: float
    worst_n0: float
    model: CalibrationModel
    regime: Regime


def mutual_information(params: SystemParams) -> float:
    """Shannon information between Alice and Bob, identical for all models.

    I_AB = 1/2 log2((V + chi)/(chi + 1)) with the total noise referred to
    the channel input, chi = 1/(t * eta_d * eta_e) - 1 + eps_c. The same
    value follows from any model matrix as 1/2 log2(V_B / V_B|A) with
    Alice's mode heterodyned.
    """
    chi = 1.0 / (params.t * params.eta_d * params.eta_e) - 1.0 + params.eps_c
    return 0.5 * math.log2((params.v + chi) / (chi + 1.0))


def mutual_information_from_matrix(gamma: CovarianceMatrix) -> float:
    """I_AB read off a model matrix: modes (A, B3) with A heterodyned."""
    va = gamma.data[0, 0]
    vb = gamma.data[2, 2]
    c = gamma.data[0, 2]
    vb_cond = vb - c * c / (va + 1.0)
    return 0.5 * math.log2(vb / vb_cond)


def _entropy_of(gamma: CovarianceMatrix) -> float:
    """Von Neumann entropy from the symplectic spectrum, in bits.

    Eigenvalues may dip marginally below 1 for miscalibrated matrices
    scanned over the SNU interval; those modes carry no entropy and
    clamp to the vacuum value.
    """
    return sum(entropy_g(max(0.0, (lam - 1.0) / 2.0)) for lam in symplectic_eigenvalues(gamma))


def holevo_two_mode(params: SystemParams, n0: float = 1.0) -> float:
    """Eavesdropper information bound for the one-time two-mode model.

    chi_BE = S(A,B3) - S(A | b3) with the conditional state after ideal
    x-homodyne on B3.
    """
    scenario = SnuScenario(model=CalibrationModel.ONE_TIME_TWO_MODE, n0=n0)
    g = build_two_mode(params, scenario)
    cond = condition_on_homodyne(g, 1, MeasurementBasis.X_QUADRATURE)
    return _entropy_of(g) - _entropy_of(cond)


def holevo_three_mode(params: SystemParams, n0: float = 1.0) -> float:
    """Eavesdropper information bound for the one-time three-mode model.

    chi_BE = S(A,B3,C) - S(A,C | b3). One symplectic eigenvalue of the
    full matrix equals 1 by construction (the detection beamsplitter's
    vacuum ancilla); it contributes no entropy and is verified here as
    an internal consistency check.
    """
    scenario = SnuScenario(model=CalibrationModel.ONE_TIME_THREE_MODE, n0=n0)
    g = build_three_mode(params, scenario)
    spectrum = symplectic_eigenvalues(g)
    if min(abs(lam - 1.0) for lam in spectrum) > _UNIT_EIGENVALUE_TOL:
        raise NumericalError(
            f"three-mode matrix lost its unit eigenvalue: spectrum {spectrum.values}"
        )
    cond = condition_on_homodyne(g, 1, MeasurementBasis.X_QUADRATURE)
    return _entropy_of(g) - _entropy_of(cond)


def holevo_conventional(params: SystemParams, n0: float = 1.0) -> float:
    """Eavesdropper information bound for the conventional trusted model.

    Eve purifies only the channel output (A, B1), so her entropy comes
    from the pre-detector matrix; after Bob's homodyne the global state
    stays pure, so her conditional entropy equals that of the remaining
    trusted modes (A, F, G) in the full 8x8 model.
    """
    scenario = SnuScenario(model=CalibrationModel.CONVENTIONAL_TTE, n0=n0)
    g_ab1 = conventional_channel_matrix(params, n0)
    g = build_conventional(params, scenario)
    cond = condition_on_homodyne(g, 1, MeasurementBasis.X_QUADRATURE)
    return _entropy_of(g_ab1) - _entropy_of(cond)


_HOLEVO = {
    CalibrationModel.ONE_TIME_TWO_MODE: holevo_two_mode,
    CalibrationModel.ONE_TIME_THREE_MODE: holevo_three_mode,
    CalibrationModel.CONVENTIONAL_TTE: holevo_conventional,
}


def holevo_bound(model: CalibrationModel, params: SystemParams, n0: float = 1.0) -> float:
    """Dispatch to the model's Holevo computation."""
    return _HOLEVO[model](params, n0)


def key_rate_asymptotic(params: SystemParams, scenario: SnuScenario) -> KeyRateResult:
    """Asymptotic secret key rate, rate = beta * I_AB - chi_BE."""
    eff = apply_miscalibration(params, scenario.calib_error)
    i_ab = mutual_information(eff)
    chi = holevo_bound(scenario.model, eff, scenario.n0)
    return KeyRateResult(
        rate_bits_per_pulse=eff.beta * i_ab - chi,
        i_ab=i_ab,
        chi_be=chi,
        delta_n=0.0,
        worst_n0=scenario.n0,
        model=scenario.model,
        regime=Regime.ASYMPTOTIC,
    )


def finite_size_penalty(fs: FiniteSizeParams) -> float:
    """Rate correction Delta(n) for finite raw-key length.

    (2 dim_hx + 3) sqrt(log2(2/eps_smooth)/n) + (2/n) log2(1/eps_pa),
    vanishing as n grows.
    """
    n = fs.n_key
    if n < 2.0:
        raise ValueError(f"finite-size penalty needs n >= 2, got {n}")
    return (2.0 * fs.dim_hx + 3.0) * math.sqrt(math.log2(2.0 / fs.eps_smooth) / n) \
        + (2.0 / n) * math.log2(1.0 / fs.eps_pa)


def key_rate_finite(params: SystemParams, scenario: SnuScenario,
                    fs: FiniteSizeParams, calib: CalibrationEstimate) -> KeyRateResult:
    """Finite-size secret key rate with the worst case over SNU fluctuation.

    The calibrated-over-true SNU ratio is scanned across the confidence
    interval normalized by its point estimate; beta*I_AB - chi_BE is
    minimized over that grid, the penalty Delta(n) subtracted, and the
    result scaled by the key fraction n/N. Channel-parameter fluctuation
    is out of scope; only the SNU-bearing matrix entries move.
    """
    if calib.lower <= 0.0 or calib.upper < calib.lower or calib.point <= 0.0:
        raise ValueError(
            f"invalid calibration interval [{calib.lower}, {calib.upper}] "
            f"around {calib.point}"
        )
    eff = apply_miscalibration(params, scenario.calib_error)
    i_ab = mutual_information(eff)
    grid = np.linspace(calib.lower / calib.point, calib.upper / calib.point,
                       N0_SCAN_POINTS)
    worst_value = math.inf
    worst_n0 = scenario.n0
    worst_chi = 0.0
    for g in grid:
        n0 = scenario.n0 * float(g)
        chi = holevo_bound(scenario.model, eff, n0)
        value = eff.beta * i_ab - chi
        if value < worst_value:
            worst_value = value
            worst_n0 = n0
            worst_chi = chi
    penalty = finite_size_penalty(fs)
    return KeyRateResult(
        rate_bits_per_pulse=fs.key_fraction * (worst_value - penalty),
        i_ab=i_ab,
        chi_be=worst_chi,
        delta_n=penalty,
        worst_n0=worst_n0,
        model=scenario.model,
        regime=Regime.FINITE_SIZE,
    )
