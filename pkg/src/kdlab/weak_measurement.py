"""Weak values, an exact Gaussian-meter von Neumann model, weak-value
amplification SNR, the ancilla circuit that reads out KD entries, and
three-point direct state tomography."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import (
    CapacityError,
    DimensionError,
    KDError,
    OrthonormalBasis,
    are_mutually_unbiased,
    as_state_vector,
    check_density,
    check_hermitian,
    spectral_decompose,
    transition_matrix,
    _rng,
)

OVERLAP_TOL = 1e-12
MAX_CIRCUIT_REGISTER = 4096


class UndefinedWeakValueError(KDError):
    pass


def weak_value(A, psi_i, psi_f) -> complex:
    """<f|A|i> / <f|i>."""
    a = np.asarray(A, dtype=complex)
    psi_i = as_state_vector(psi_i, "psi_i")
    psi_f = as_state_vector(psi_f, "psi_f")
    ov = np.vdot(psi_f, psi_i)
    if abs(ov) <= OVERLAP_TOL:
        raise UndefinedWeakValueError("pre- and post-selected states are orthogonal")
    return complex(np.vdot(psi_f, a @ psi_i) / ov)


def weak_average(rho, A: OrthonormalBasis, a_index: int, B: OrthonormalBasis, b_index: int) -> complex:
    """Tr(Pi_b Pi_a rho)."""
    rho = check_density(rho)
    a = A.vectors[:, a_index]
    b = B.vectors[:, b_index]
    return complex(np.vdot(b, a) * np.vdot(a, rho @ b))


@dataclass(frozen=True)
class GaussianMeter:
    """Meter wavefunction sum_k amp_k phi(x; center_k, width_k).

    phi(x; c, s) = (pi s^2)^(-1/4) exp(-(x-c)^2 / (2 s^2)). When `coherent` is
    False the components are an incoherent mixture with weights |amp_k|^2.
    """

    amplitudes: np.ndarray
    centers: np.ndarray
    widths: np.ndarray
    coherent: bool = True

    def _pair_integrals(self):
        cm, cn = self.centers[:, None], self.centers[None, :]
        sm, sn = self.widths[:, None] ** 2, self.widths[None, :] ** 2
        a = 1 / (2 * sm) + 1 / (2 * sn)
        b = cm / sm + cn / sn
        c = cm**2 / (2 * sm) + cn**2 / (2 * sn)
        pref = (np.pi * sm) ** -0.25 * (np.pi * sn) ** -0.25
        overlap = pref * np.sqrt(np.pi / a) * np.exp(b**2 / (4 * a) - c)
        first = overlap * b / (2 * a)
        return overlap, first

    def _weights(self):
        al = self.amplitudes
        w = np.outer(al.conj(), al)
        if not self.coherent:
            w = np.diag(np.diag(w))
        return w

    def norm(self) -> float:
        overlap, _ = self._pair_integrals()
        return float(np.real(np.sum(self._weights() * overlap)))

    def normalized(self) -> "GaussianMeter":
        return GaussianMeter(self.amplitudes / np.sqrt(self.norm()), self.centers, self.widths, self.coherent)

    def mean_position(self) -> float:
        overlap, first = self._pair_integrals()
        w = self._weights()
        return float(np.real(np.sum(w * first)) / np.real(np.sum(w * overlap)))

    def mean_momentum(self) -> float:
        # <m| p |n> = (i / s_n^2) (int x phi_m phi_n - c_n int phi_m phi_n)
        overlap, first = self._pair_integrals()
        sn = self.widths[None, :] ** 2
        pmn = 1j / sn * (first - self.centers[None, :] * overlap)
        w = self._weights()
        return float(np.real(np.sum(w * pmn)) / np.real(np.sum(w * overlap)))


def simulate_von_neumann(psi_i, A, g: float, sigma: float, post_select=None) -> tuple[GaussianMeter, float]:
    """Meter state after exp(-i g A p) coupling, optionally post-selected.

    Returns the normalized meter and the post-selection success probability
    (1 without post-selection).
    """
    if g <= 0 or sigma <= 0:
        raise KDError("coupling g and meter width sigma must be positive")
    psi_i = as_state_vector(psi_i, "psi_i")
    pairs = spectral_decompose(check_hermitian(A, name="A"))
    centers = np.array([g * lam for lam, _ in pairs])
    widths = np.full(len(pairs), float(sigma))
    if post_select is None:
        amps = np.array([np.sqrt(np.vdot(psi_i, P @ psi_i).real) for _, P in pairs], dtype=complex)
        meter = GaussianMeter(amps, centers, widths, coherent=False)
        return meter.normalized(), 1.0
    psi_f = as_state_vector(post_select, "post_select")
    amps = np.array([np.vdot(psi_f, P @ psi_i) for _, P in pairs])
    meter = GaussianMeter(amps, centers, widths)
    p = meter.norm()
    if p <= 1e-300:
        raise UndefinedWeakValueError("post-selection probability vanishes")
    return meter.normalized(), p


@dataclass(frozen=True)
class WvaSnr:
    snr_standard: float
    snr_weak_value: float
    ratio: float


def wva_snr(g: float, sigma: float, n_trials: int, psi_i, psi_f, A) -> WvaSnr:
    """Signal-to-noise of a standard vs a post-selected (amplified) estimate of g."""
    if g < 0 or sigma <= 0 or n_trials <= 0:
        raise KDError("g >= 0, sigma > 0 and N > 0 required")
    aw = weak_value(A, psi_i, psi_f)
    if abs(aw.imag) >= 1e-9:
        raise KDError("the amplification SNR formula needs a real weak value")
    p = abs(np.vdot(psi_f, psi_i)) ** 2
    std = np.sqrt(n_trials) * g / sigma
    wv = np.sqrt(n_trials * p) * aw.real * g / sigma
    return WvaSnr(float(std), float(wv), float(np.sqrt(p) * abs(aw.real)))


@dataclass(frozen=True)
class CircuitSpec:
    """Hadamard-test readout of one extended-KD entry.

    bases[0] is the basis adjacent to the state on the left in the chain
    product; indices holds one index per basis; s = 0 reads the real part,
    s = 1 the imaginary part; shots = 0 requests the exact probability.
    """

    rho: np.ndarray
    bases: tuple
    indices: tuple
    s: int = 0
    shots: int = 0
    seed: int | None = None


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _check_spec(spec: CircuitSpec):
    rho = check_density(spec.rho)
    d = rho.shape[0]
    k = len(spec.bases)
    if k < 1 or len(spec.indices) != k:
        raise DimensionError("one index per basis is required")
    for b in spec.bases:
        if b.dim != d:
            raise DimensionError(f"basis {b.name!r} has dim {b.dim}, state has {d}")
    if d**k > MAX_CIRCUIT_REGISTER:
        raise CapacityError(f"d^k = {d**k} exceeds the register cap {MAX_CIRCUIT_REGISTER}")
    if spec.s not in (0, 1):
        raise KDError("s must be 0 or 1")
    return rho, d, k


def _p0_pure(psi, spec: CircuitSpec, d, k) -> float:
    # registers: ancilla, system, then one register per basis vector
    regs = [psi] + [b.vectors[:, i] for b, i in zip(spec.bases, spec.indices)]
    state = regs[0]
    for r in regs[1:]:
        state = np.multiply.outer(state, r)
    full = np.zeros((2,) + (d,) * (k + 1), dtype=complex)
    full[0] = state
    full = np.tensordot(_HADAMARD, full, axes=(1, 0))
    if spec.s == 1:
        full[1] *= 1j
    # controlled cyclic shift: register r takes the content of register r+1
    full[1] = np.moveaxis(full[1], 0, -1)
    full = np.tensordot(_HADAMARD, full, axes=(1, 0))
    return float(np.sum(np.abs(full[0]) ** 2))


def circuit_probability(spec: CircuitSpec) -> float:
    """Exact probability of ancilla outcome 0 by statevector simulation.

    Mixed states are handled as the eigen-ensemble of rho.
    """
    rho, d, k = _check_spec(spec)
    w, v = np.linalg.eigh(rho)
    return float(sum(p * _p0_pure(v[:, m], spec, d, k) for m, p in enumerate(w) if p > 1e-15))


def circuit_sample(spec: CircuitSpec) -> tuple[float, float]:
    """Binomial shot estimate of P0 and its standard error."""
    if spec.shots < 1:
        raise KDError("shots must be positive for sampling")
    p = circuit_probability(spec)
    rng = _rng(spec.seed)
    est = rng.binomial(spec.shots, min(max(p, 0.0), 1.0)) / spec.shots
    return float(est), float(np.sqrt(est * (1 - est) / spec.shots))


def quasiprobability_from_circuit(rho, bases: Sequence[OrthonormalBasis], indices) -> complex:
    """Assemble the KD entry from the two exact circuit probabilities."""
    re = 2 * circuit_probability(CircuitSpec(rho, tuple(bases), tuple(indices), 0)) - 1
    im = 2 * circuit_probability(CircuitSpec(rho, tuple(bases), tuple(indices), 1)) - 1
    return complex(re, im)


def three_point_density(rho, A: OrthonormalBasis, B: OrthonormalBasis, tol: float = 1e-9) -> np.ndarray:
    """Rebuild rho in the A basis from Q_{i,k,j} = Tr(Pi_ai Pi_bk Pi_aj rho).

    Q_{j,k,i} = <a_j|b_k><b_k|a_i> rho_ij, so each k gives an estimate of
    rho_ij after dividing out the known overlap factor. The estimates are
    checked to agree across k and the result is normalized to unit trace.
    """
    rho = check_density(rho)
    if not are_mutually_unbiased(A, B, tol):
        raise KDError("B must be mutually unbiased with respect to A")
    u = transition_matrix(A, B)  # <a_i|b_k>
    ra = A.vectors.conj().T @ rho @ A.vectors
    # measured three-point quasi-probabilities, axis order (i, k, j)
    q = np.einsum("ik,jk,ji->ikj", u, u.conj(), ra)
    # est[k, i, j] = Q_{j,k,i} / (<a_j|b_k><b_k|a_i>)
    est = np.transpose(q, (1, 2, 0)) / np.einsum("jk,ik->kij", u, u.conj())
    spread = np.max(np.abs(est - est[0:1]))
    if spread > tol:
        raise KDError(f"per-k estimates disagree by {spread:.3g}")
    r = est[0]
    r = r / np.trace(r)
    return A.vectors @ r @ A.vectors.conj().T
