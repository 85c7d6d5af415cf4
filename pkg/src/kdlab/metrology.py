"""Single-parameter estimation with a unitary encoding exp(-i A theta):
classical and quantum Fisher information, post-selection, KD forms."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import sqrtm
from scipy.optimize import minimize_scalar

from .hilbert import (
    KDError,
    OrthonormalBasis,
    as_state_vector,
    check_hermitian,
    eigenbasis,
    matrix_exp_unitary,
    pure_density,
    _rng,
)
from .kd_core import KdDistribution, standard_kd

P_FLOOR = 1e-14
DP_FLOOR = 1e-12
PS_FLOOR = 1e-12


class ZeroPostselectionError(KDError):
    pass


@dataclass(frozen=True)
class EncodingScenario:
    generator: np.ndarray
    psi0: np.ndarray
    measurement: OrthonormalBasis
    filter: np.ndarray | None = None

    def __post_init__(self):
        a = check_hermitian(self.generator, name="generator")
        psi = np.asarray(self.psi0, dtype=complex)
        if psi.ndim != 1:
            raise KDError("only pure initial states are supported")
        psi = as_state_vector(psi, "psi0")
        if a.shape[0] != psi.shape[0] or self.measurement.dim != psi.shape[0]:
            raise KDError("generator, state and measurement dimensions differ")
        object.__setattr__(self, "generator", a)
        object.__setattr__(self, "psi0", psi)
        if self.filter is not None:
            f = check_hermitian(self.filter, name="filter")
            w = np.linalg.eigvalsh(f)
            if w[0] < -1e-10 or w[-1] > 1 + 1e-10:
                raise KDError("filter eigenvalues must lie in [0, 1]")
            object.__setattr__(self, "filter", f)

    @property
    def dim(self) -> int:
        return self.psi0.shape[0]

    def generator_basis(self) -> OrthonormalBasis:
        return eigenbasis(self.generator, "generator")

    def spectral_gap(self) -> float:
        w = np.linalg.eigvalsh(self.generator)
        return float(w[-1] - w[0])

    def with_filter(self, f) -> "EncodingScenario":
        return EncodingScenario(self.generator, self.psi0, self.measurement, f)


def encode(scen: EncodingScenario, theta: float) -> np.ndarray:
    return matrix_exp_unitary(scen.generator, theta) @ scen.psi0


def outcome_probabilities(scen: EncodingScenario, theta: float) -> np.ndarray:
    amp = scen.measurement.vectors.conj().T @ encode(scen, theta)
    return np.abs(amp) ** 2


def encoding_kd(scen: EncodingScenario, theta: float) -> KdDistribution:
    """Standard KD distribution of the encoded state over (generator eigenbasis, F)."""
    return standard_kd(pure_density(encode(scen, theta)), scen.generator_basis(), scen.measurement)


def outcome_derivative(scen: EncodingScenario, theta: float) -> np.ndarray:
    """d P(f_j) / d theta = sum_i 2 a_i Im Q_ij."""
    q = encoding_kd(scen, theta)
    a = q.outcomes[0]
    return 2 * np.einsum("i,ij->j", a, q.values.imag)


def _amp_derivative_sq(scen, theta):
    # |d<f_j|psi_theta>/dtheta|^2, used for the P -> 0 limit of (dP)^2 / P
    psi = encode(scen, theta)
    d_amp = scen.measurement.vectors.conj().T @ (-1j * scen.generator @ psi)
    return np.abs(d_amp) ** 2


def _fisher_terms(p, dp, scen, theta):
    out = np.zeros_like(p)
    tiny = p < P_FLOOR
    out[~tiny] = dp[~tiny] ** 2 / p[~tiny]
    if np.any(tiny):
        if np.any(np.abs(dp[tiny]) > DP_FLOOR):
            warnings.warn("outcome with vanishing probability but non-vanishing derivative", RuntimeWarning)
        # for pure states P = |c|^2 with c(theta0) = 0, so (dP)^2/P -> 4 |dc|^2
        out[tiny] = 4 * _amp_derivative_sq(scen, theta)[tiny]
    return out


def fisher_information(scen: EncodingScenario, theta: float) -> float:
    """sum_j (dP_j)^2 / P_j with the theta-limit used where P_j vanishes."""
    p = outcome_probabilities(scen, theta)
    dp = outcome_derivative(scen, theta)
    return float(np.sum(_fisher_terms(p, dp, scen, theta)))


def fisher_information_kd(scen: EncodingScenario, theta: float) -> float:
    """4 sum_j P(f_j) [sum_i a_i Im Q_{i|j}]^2 from the conditional distribution."""
    q = encoding_kd(scen, theta)
    a = q.outcomes[0]
    p = q.values.sum(axis=0).real
    total = 0.0
    for j in range(len(p)):
        if p[j] < P_FLOOR:
            total += 4 * _amp_derivative_sq(scen, theta)[j]
            continue
        cond = q.values[:, j] / p[j]
        total += 4 * p[j] * np.dot(a, cond.imag) ** 2
    return float(total)


def qfi_pure(scen: EncodingScenario, theta: float = 0.0) -> float:
    """4 Var(A) on the encoded pure state."""
    psi = encode(scen, theta)
    a = scen.generator
    m1 = np.vdot(psi, a @ psi).real
    m2 = np.vdot(a @ psi, a @ psi).real
    return float(4 * (m2 - m1**2))


def _filter(scen):
    return np.eye(scen.dim) if scen.filter is None else scen.filter


def postselect(scen: EncodingScenario, theta: float) -> tuple[np.ndarray, float]:
    """K psi / sqrt(p) with K the principal square root of the filter."""
    psi = encode(scen, theta)
    f = _filter(scen)
    p = float(np.vdot(psi, f @ psi).real)
    if p <= PS_FLOOR:
        raise ZeroPostselectionError(f"post-selection probability {p:.3g}")
    k = sqrtm(f)
    return (k @ psi) / np.sqrt(p), p


def postselected_qfi(scen: EncodingScenario, theta: float) -> float:
    """4 [<A F A>/p - |<A F>|^2 / p^2] on the encoded state."""
    psi = encode(scen, theta)
    a, f = scen.generator, _filter(scen)
    p = np.vdot(psi, f @ psi).real
    if p <= PS_FLOOR:
        raise ZeroPostselectionError(f"post-selection probability {p:.3g}")
    afa = np.vdot(a @ psi, f @ a @ psi).real
    af = np.vdot(a @ psi, f @ psi)
    return float(4 * (afa / p - abs(af) ** 2 / p**2))


def postselection_kd(scen: EncodingScenario, theta: float) -> KdDistribution:
    """Conditional 2-extended distribution <psi|a_i><a_i|F|a_j><a_j|psi> / p."""
    psi = encode(scen, theta)
    basis = scen.generator_basis()
    f = _filter(scen)
    c = basis.vectors.conj().T @ psi
    fa = basis.vectors.conj().T @ f @ basis.vectors
    q = c.conj()[:, None] * fa * c[None, :]
    p = q.sum()
    if abs(p) <= PS_FLOOR:
        raise ZeroPostselectionError(f"post-selection probability {abs(p):.3g}")
    vals = basis.values
    return KdDistribution(q / p, ("generator", "generator"), "conditional", pure_density(psi),
                          (vals, vals), complex(p))


def postselected_qfi_kd(scen: EncodingScenario, theta: float) -> float:
    """4 [sum a_i a_j Q_ij - |sum a_i Q_ij|^2] on the conditional distribution."""
    q = postselection_kd(scen, theta)
    a = q.outcomes[0]
    second = np.einsum("i,j,ij->", a, a, q.values)
    first = np.einsum("i,ij->", a, q.values)
    return float(4 * (second.real - abs(first) ** 2))


@dataclass(frozen=True)
class DistillationReport:
    qfi_postselected: float
    p_postselection: float
    product: float
    efficiency: float


def distillation_report(scen: EncodingScenario, theta: float) -> DistillationReport:
    ips = postselected_qfi(scen, theta)
    _, p = postselect(scen, theta)
    iq = qfi_pure(scen, theta)
    prod = ips * p
    eff = prod / iq if iq > 0 else 0.0
    return DistillationReport(ips, p, prod, eff)


def qubit_filter(alpha: float, phi: float, leak: float) -> np.ndarray:
    """|f><f| + leak |f_perp><f_perp| with f = cos(alpha)|0> + e^{i phi} sin(alpha)|1>."""
    f = np.array([np.cos(alpha), np.exp(1j * phi) * np.sin(alpha)])
    fp = np.array([-np.exp(-1j * phi) * np.sin(alpha), np.cos(alpha)])
    return np.outer(f, f.conj()) + leak * np.outer(fp, fp.conj())


def simulate_ml_estimates(scen: EncodingScenario, theta_true: float, n_samples: int,
                          n_experiments: int, seed, window: float = 0.5) -> np.ndarray:
    """Maximum-likelihood estimates of theta from simulated outcome counts.

    The likelihood is maximized over [theta_true - window, theta_true + window];
    estimates are cached per distinct count vector.
    """
    rng = _rng(seed)
    p_true = outcome_probabilities(scen, theta_true)
    counts = rng.multinomial(n_samples, p_true / p_true.sum(), size=n_experiments)
    cache: dict = {}
    out = np.empty(n_experiments)
    lo, hi = theta_true - window, theta_true + window

    def nll(t, c):
        p = np.clip(outcome_probabilities(scen, t), 1e-300, None)
        return -np.dot(c, np.log(p))

    for e, c in enumerate(counts):
        key = tuple(c)
        if key not in cache:
            cache[key] = minimize_scalar(nll, bounds=(lo, hi), args=(c,), method="bounded",
                                         options={"xatol": 1e-10}).x
        out[e] = cache[key]
    return out
