"""Work statistics (two-point measurement and KD), fluctuation theorems,
linear-response work, and OTOC scrambling diagnostics on an Ising chain."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad_vec
from scipy.signal import find_peaks

from .hilbert import (
    PAULIS,
    CapacityError,
    DimensionError,
    KDError,
    Povm,
    check_density,
    check_hermitian,
    check_unitary,
    spectral_decompose,
    tensor_product,
)
from .kd_core import KdDistribution, povm_kd
from .nonclassicality import total_nonpositivity

WORK_MERGE_TOL = 1e-9
MAX_SPINS = 8


@dataclass(frozen=True)
class WorkDistribution:
    support: np.ndarray
    weights: np.ndarray
    kind: str

    def total(self) -> complex:
        return complex(self.weights.sum())

    def mean(self) -> complex:
        return complex(np.dot(self.support, self.weights))

    def expectation(self, f: Callable) -> complex:
        return complex(np.dot(f(self.support), self.weights))

    def weight_at(self, w: float, tol: float = WORK_MERGE_TOL) -> complex:
        hit = np.abs(self.support - w) <= tol
        return complex(self.weights[hit].sum())


def _merge(works, weights, kind) -> WorkDistribution:
    order = np.argsort(works, kind="stable")
    works, weights = works[order], weights[order]
    sup, wts = [], []
    for w, p in zip(works, weights):
        if sup and w - sup[-1][0] <= WORK_MERGE_TOL:
            sup[-1][1].append(w)
            wts[-1] += p
        else:
            sup.append((w, [w]))
            wts.append(p)
    support = np.array([np.mean(v) for _, v in sup])
    return WorkDistribution(support, np.array(wts), kind)


def _work_setup(rho, H0, Htau, U):
    rho = check_density(rho)
    h0 = check_hermitian(H0, name="H0")
    ht = check_hermitian(Htau, name="Htau")
    u = check_unitary(U)
    if not (rho.shape == h0.shape == ht.shape == u.shape):
        raise DimensionError("state, Hamiltonians and drive must share one dimension")
    return rho, spectral_decompose(h0), spectral_decompose(ht), u


def tpm_distribution(rho, H0, Htau, U) -> WorkDistribution:
    """P_jk = Tr(U^dag Pi_k U Pi_j rho Pi_j), W = E_k - E_j."""
    rho, sp0, spt, u = _work_setup(rho, H0, Htau, U)
    works, wts = [], []
    for ej, pj in sp0:
        post = pj @ rho @ pj
        for ek, pk in spt:
            works.append(ek - ej)
            wts.append(np.trace(u.conj().T @ pk @ u @ post).real)
    return _merge(np.array(works), np.array(wts, dtype=complex), "TPM")


def kd_work_distribution(rho, H0, Htau, U) -> WorkDistribution:
    """Q_jk = Tr(U^dag Pi_k U Pi_j rho), W = E_k - E_j."""
    rho, sp0, spt, u = _work_setup(rho, H0, Htau, U)
    works, wts = [], []
    for ej, pj in sp0:
        post = pj @ rho
        for ek, pk in spt:
            works.append(ek - ej)
            wts.append(np.trace(u.conj().T @ pk @ u @ post))
    return _merge(np.array(works), np.array(wts, dtype=complex), "KD")


def partition_function(H, beta: float) -> float:
    w = np.linalg.eigvalsh(check_hermitian(H))
    return float(np.sum(np.exp(-beta * w)))


def thermal_state(H, beta: float) -> np.ndarray:
    h = check_hermitian(H)
    w, v = np.linalg.eigh(h)
    p = np.exp(-beta * (w - w[0]))
    p /= p.sum()
    rho = (v * p) @ v.conj().T
    return (rho + rho.conj().T) / 2


def jarzynski_check(H0, Htau, U, beta: float) -> tuple[float, float]:
    """(<exp(-beta W)> under thermal TPM, Z_tau / Z_0)."""
    dist = tpm_distribution(thermal_state(H0, beta), H0, Htau, U)
    lhs = dist.expectation(lambda w: np.exp(-beta * w)).real
    return float(lhs), partition_function(Htau, beta) / partition_function(H0, beta)


def crooks_ratios(H0, Htau, U, beta: float) -> list[tuple[float, float, float]]:
    """(W, P_F(W)/P_R(-W), exp(beta (W - dF))) on the shared support.

    The reverse protocol starts thermal in Htau, runs U^dagger and ends in H0.
    """
    fwd = tpm_distribution(thermal_state(H0, beta), H0, Htau, U)
    rev = tpm_distribution(thermal_state(Htau, beta), Htau, H0, np.asarray(U).conj().T)
    dF = -np.log(partition_function(Htau, beta) / partition_function(H0, beta)) / beta
    out = []
    for w, pf in zip(fwd.support, fwd.weights.real):
        pr = rev.weight_at(-w).real
        if pf > 1e-14 and pr > 1e-14:
            out.append((float(w), float(pf / pr), float(np.exp(beta * (w - dF)))))
    return out


def _protocol(V_protocol):
    if callable(V_protocol):
        return V_protocol
    ts = np.array([t for t, _ in V_protocol], dtype=float)
    vs = np.array([np.asarray(v, dtype=complex) for _, v in V_protocol])

    def interp(t):
        k = np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2)
        s = (t - ts[k]) / (ts[k + 1] - ts[k])
        return (1 - s) * vs[k] + s * vs[k + 1]

    return interp


def _evolve(h0, V, g, tau, n_steps):
    # midpoint product formula for the time-ordered exponential
    d = h0.shape[0]
    u = np.eye(d, dtype=complex)
    dt = tau / n_steps
    for m in range(n_steps):
        h = h0 + g * V((m + 0.5) * dt)
        w, v = np.linalg.eigh(h)
        u = ((v * np.exp(-1j * w * dt)) @ v.conj().T) @ u
    return u


@dataclass(frozen=True)
class LinearResponse:
    exact: float
    prediction: float
    richardson_gap: float


def linear_response_work(H0, V_protocol, rho, g: float, tau: float, n_steps: int = 1000) -> LinearResponse:
    """Average work done by a weak cyclic drive H0 + g V(t), exact vs first order.

    Exact work uses a midpoint product with n and 2n steps, Richardson
    extrapolated; the prediction is 2 g tau Im Tr(H0 Vbar_I rho) with Vbar_I the
    time-averaged interaction-picture perturbation.
    """
    h0 = check_hermitian(H0, name="H0")
    rho = check_density(rho)
    V = _protocol(V_protocol)
    if g > 0.1:
        raise KDError("linear response is restricted to g <= 0.1")
    if max(np.abs(V(0.0)).max(), np.abs(V(tau)).max()) > 1e-10:
        raise KDError("the drive must vanish at t = 0 and t = tau")
    e0 = np.trace(h0 @ rho).real

    def work(n):
        u = _evolve(h0, V, g, tau, n)
        return np.trace(h0 @ u @ rho @ u.conj().T).real - e0

    w1, w2 = work(n_steps), work(2 * n_steps)
    exact = (4 * w2 - w1) / 3
    w, v = np.linalg.eigh(h0)

    def v_int(t):
        ph = np.exp(1j * w * t)
        return (v * ph) @ (v.conj().T @ V(t) @ v) @ (v * ph).conj().T

    vbar = quad_vec(v_int, 0.0, tau, epsabs=1e-13, epsrel=1e-12)[0] / tau
    pred = 2 * g * tau * np.trace(h0 @ vbar @ rho).imag
    return LinearResponse(float(exact), float(pred), float(abs(w2 - w1)))


@dataclass(frozen=True)
class SpinChainConfig:
    n: int
    J: float = 1.0
    g: float = 1.05
    h: float = 0.5
    beta: float = 1.0
    w_site: int = 0
    v_site: int | None = None
    w_pauli: str = "Z"
    v_pauli: str = "Z"
    times: tuple = field(default=())

    def __post_init__(self):
        if not 2 <= self.n <= MAX_SPINS:
            raise CapacityError(f"chain length must be in [2, {MAX_SPINS}]")
        if self.J == 0:
            raise KDError("J must be nonzero")
        if self.v_site is None:
            object.__setattr__(self, "v_site", self.n - 1)
        for s in (self.w_site, self.v_site):
            if not 0 <= s < self.n:
                raise KDError(f"site {s} outside the chain")


def pauli_operator(n: int, site: int, axis: str) -> np.ndarray:
    ops = [PAULIS["I"]] * n
    ops[site] = PAULIS[axis.upper()]
    return tensor_product(ops)


def tfim_hamiltonian(config: SpinChainConfig) -> np.ndarray:
    """-J sum Z_l Z_{l+1} - g sum X_l - h sum Z_l, open boundary."""
    n = config.n
    h = np.zeros((2**n, 2**n), dtype=complex)
    for l in range(n - 1):
        h -= config.J * pauli_operator(n, l, "Z") @ pauli_operator(n, l + 1, "Z")
    for l in range(n):
        h -= config.g * pauli_operator(n, l, "X") + config.h * pauli_operator(n, l, "Z")
    return h


class _Chain:
    """Cached eigendecomposition of the chain Hamiltonian and its probes."""

    def __init__(self, config: SpinChainConfig):
        self.config = config
        self.H = tfim_hamiltonian(config)
        self.evals, self.evecs = np.linalg.eigh(self.H)
        self.W = pauli_operator(config.n, config.w_site, config.w_pauli)
        self.V = pauli_operator(config.n, config.v_site, config.v_pauli)

    def W_t(self, t):
        u = (self.evecs * np.exp(-1j * self.evals * t)) @ self.evecs.conj().T
        return u.conj().T @ self.W @ u

    def thermal(self):
        return thermal_state(self.H, self.config.beta)


def _rho(chain, rho):
    return chain.thermal() if rho is None else check_density(rho)


def otoc(config: SpinChainConfig, rho=None, t: float = 0.0, _chain=None) -> complex:
    """F(t) = Tr(W(t)^dag V^dag W(t) V rho); rho defaults to the thermal state."""
    ch = _chain or _Chain(config)
    r = _rho(ch, rho)
    wt = ch.W_t(t)
    return complex(np.trace(wt.conj().T @ ch.V.conj().T @ wt @ ch.V @ r))


def commutator_norm(config: SpinChainConfig, rho=None, t: float = 0.0, _chain=None) -> float:
    """C(t) = Tr([W(t), V]^dag [W(t), V] rho)."""
    ch = _chain or _Chain(config)
    r = _rho(ch, rho)
    wt = ch.W_t(t)
    c = wt @ ch.V - ch.V @ wt
    return float(np.trace(c.conj().T @ c @ r).real)


def otoc_kd(config: SpinChainConfig, rho=None, t: float = 0.0, _chain=None) -> KdDistribution:
    """Q[v1, w1, v2, w2] = Tr(Pi^W(t)_w2 Pi^V_v2 Pi^W(t)_w1 Pi^V_v1 rho)."""
    ch = _chain or _Chain(config)
    r = _rho(ch, rho)
    pv = spectral_decompose(ch.V)
    pw = spectral_decompose(ch.W_t(t))
    vvals = np.array([lam for lam, _ in pv])
    wvals = np.array([lam for lam, _ in pw])
    povm_v = Povm(tuple(p for _, p in pv), "V", vvals)
    povm_w = Povm(tuple(p for _, p in pw), "W(t)", wvals)
    q = povm_kd(r, [povm_v, povm_w, povm_v, povm_w])
    return KdDistribution(q.values, ("V", "W(t)", "V", "W(t)"), "otoc", r, (vvals, wvals, vvals, wvals))


def otoc_from_kd(Q: KdDistribution) -> complex:
    """sum v1 w1 conj(v2) conj(w2) Q."""
    v1, w1, v2, w2 = Q.outcomes
    wt = np.einsum("a,b,c,d->abcd", v1, w1, np.conj(v2), np.conj(w2))
    return complex(np.sum(wt * Q.values))


def characteristic_function(Q: KdDistribution, betas: Sequence[float]) -> complex:
    """<exp(b1 v1 + b1' w1 + b2 conj(v2) + b2' conj(w2))> under Q."""
    v1, w1, v2, w2 = Q.outcomes
    b = betas
    e = [np.exp(b[0] * v1), np.exp(b[1] * w1), np.exp(b[2] * np.conj(v2)), np.exp(b[3] * np.conj(w2))]
    return complex(np.einsum("a,b,c,d,abcd->", *e, Q.values))


def otoc_from_characteristic(Q: KdDistribution, step: float = 1e-2) -> complex:
    """Mixed fourth derivative at the origin by central differences, one Richardson level."""

    def mixed(h):
        total = 0.0 + 0.0j
        for s in np.ndindex(2, 2, 2, 2):
            signs = 1 - 2 * np.array(s)
            total += np.prod(signs) * characteristic_function(Q, signs * h)
        return total / (16 * h**4)

    return (4 * mixed(step / 2) - mixed(step)) / 3


@dataclass(frozen=True)
class TraceRow:
    t: float
    N: float
    F: complex
    C: float


@dataclass(frozen=True)
class NonpositivityTrace:
    rows: list
    t_first_peak: float | None
    t_return: float | None
    t_end: float

    @property
    def censored(self) -> bool:
        """True when N(t) never came back to 1 inside the time window."""
        return self.t_first_peak is not None and self.t_return is None

    @property
    def t_int(self) -> float | None:
        """Peak-to-return interval; a lower bound (window end - peak) when censored."""
        if self.t_first_peak is None:
            return None
        end = self.t_end if self.t_return is None else self.t_return
        return end - self.t_first_peak


def nonpositivity_trace(config: SpinChainConfig, rho=None, times=None, threads: int = 1,
                        prominence: float = 0.01, return_tol: float = 1e-2) -> NonpositivityTrace:
    """N(t), F(t) and C(t) over a time grid, plus the peak-to-return interval.

    The first peak is the first local maximum of N(t) with the given
    prominence; the return time is the first later grid point where N(t) - 1
    falls within return_tol times the peak excess.
    """
    ts = np.asarray(config.times if times is None else times, dtype=float)
    if np.any(np.diff(ts) < 0):
        raise KDError("times must be sorted")
    ch = _Chain(config)
    r = _rho(ch, rho)

    def row(t):
        q = otoc_kd(config, r, t, ch)
        return TraceRow(float(t), total_nonpositivity(q), otoc(config, r, t, ch), commutator_norm(config, r, t, ch))

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(row, ts))
    else:
        rows = [row(t) for t in ts]
    n = np.array([x.N for x in rows])
    peaks, _ = find_peaks(n, prominence=prominence)
    if len(peaks) == 0:
        return NonpositivityTrace(rows, None, None, float(ts[-1]))
    p0 = peaks[0]
    thresh = return_tol * (n[p0] - 1)
    later = np.nonzero(n[p0:] - 1 <= thresh)[0]
    t_ret = float(ts[p0 + later[0]]) if len(later) else None
    return NonpositivityTrace(rows, float(ts[p0]), t_ret, float(ts[-1]))
