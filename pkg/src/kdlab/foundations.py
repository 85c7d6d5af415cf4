"""Leggett-Garg correlators, consistent histories and the KCBS
contextuality scenario, each evaluated directly and through KD weights."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hilbert import (
    DimensionError,
    KDError,
    OrthonormalBasis,
    check_density,
    check_unitary,
    pure_density,
    _rng,
)
from .kd_core import extended_kd, standard_kd
from .nonclassicality import is_kd_positive

NORMALIZER_TOL = 1e-12


# Leggett-Garg ---------------------------------------------------------------

def _pm_values(basis: OrthonormalBasis) -> np.ndarray:
    if basis.dim != 2:
        raise DimensionError("Leggett-Garg observables must act on a qubit")
    vals = np.array([1.0, -1.0]) if basis.values is None else basis.values
    if not np.allclose(np.sort(np.abs(vals)), [1, 1]):
        raise KDError("Leggett-Garg observables must have eigenvalues +1 and -1")
    return vals


def equatorial_basis(angle: float, name: str = "") -> OrthonormalBasis:
    """Eigenbasis of cos(angle) Z + sin(angle) X, +1 eigenvector first."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return OrthonormalBasis(np.array([[c, -s], [s, c]], dtype=complex), name or f"eq{angle:.4g}",
                            np.array([1.0, -1.0]))


def lg_kd(a_index: int, A: OrthonormalBasis, B: OrthonormalBasis, C: OrthonormalBasis):
    """Q_jk = <a_i|c_k><c_k|b_j><b_j|a_i>."""
    return standard_kd(A.projector(a_index), B, C)


def lg_correlator(a_index: int, A: OrthonormalBasis, B: OrthonormalBasis, C: OrthonormalBasis) -> float:
    """L = sum_jk Re Q_jk (a b_j + b_j c_k - a c_k)."""
    a = _pm_values(A)[a_index]
    b, c = _pm_values(B), _pm_values(C)
    q = lg_kd(a_index, A, B, C).values
    weights = a * b[:, None] + b[:, None] * c[None, :] - a * c[None, :]
    return float(np.sum(q.real * weights))


def lg_operator_form(a_index: int, A, B, C) -> float:
    """Re <a_i| AB + BC - AC |a_i>."""
    for basis in (A, B, C):
        _pm_values(basis)
    a_op, b_op, c_op = (x.observable() if x.values is not None else
                        OrthonormalBasis(x.vectors, x.name, np.array([1.0, -1.0])).observable()
                        for x in (A, B, C))
    v = A.vector(a_index)
    m = a_op @ b_op + b_op @ c_op - a_op @ c_op
    return float(np.vdot(v, m @ v).real)


@dataclass(frozen=True)
class LgWeakValues:
    L: float
    weak_values: np.ndarray  # B_w(a_i, c_k), nan where P(c_k|a_i) = 0
    anomalous: np.ndarray


def lg_weak_value_form(a_index: int, A, B, C) -> LgWeakValues:
    """L = sum_k P(c_k|a_i) [(a_i + c_k) Re B_w - a_i c_k]."""
    a = _pm_values(A)[a_index]
    c = _pm_values(C)
    b_op = OrthonormalBasis(B.vectors, B.name, _pm_values(B)).observable()
    ai = A.vector(a_index)
    total = 0.0
    bw = np.full(2, np.nan + 0j)
    for k in range(2):
        ck = C.vector(k)
        amp = np.vdot(ck, ai)
        p = abs(amp) ** 2
        if p <= NORMALIZER_TOL:
            continue
        bw[k] = np.vdot(ck, b_op @ ai) / amp
        total += p * ((a + c[k]) * bw[k].real - a * c[k])
    anomalous = np.where(np.isnan(bw.real), False, np.abs(bw.real) > 1 + 1e-12)
    return LgWeakValues(float(total), bw, anomalous)


# Consistent histories ---------------------------------------------------------

@dataclass(frozen=True)
class History:
    """Projector chain between an initial state and a rank-one final state.

    evolutions[l] is the unitary from the time of projector l-1 (or the initial
    time) to the time of projector l; the last entry takes the final
    projector's time to the final time, so len(evolutions) = len(chain) + 1.
    """

    initial: np.ndarray
    chain: tuple
    final: np.ndarray
    evolutions: tuple
    times: tuple = field(default=())

    def __post_init__(self):
        check_density(self.initial, "initial")
        d = np.asarray(self.initial).shape[0]
        for l, p in enumerate(self.chain):
            p = np.asarray(p, dtype=complex)
            if p.shape != (d, d) or np.abs(p @ p - p).max() > 1e-10 or np.abs(p - p.conj().T).max() > 1e-10:
                raise KDError(f"chain element {l} is not a Hermitian projector")
        f = np.asarray(self.final, dtype=complex)
        if np.linalg.matrix_rank(f, tol=1e-10) != 1:
            raise KDError("final operator must be rank one")
        if len(self.evolutions) != len(self.chain) + 1:
            raise KDError("need one evolution per chain slot plus one to the final time")
        for u in self.evolutions:
            check_unitary(u)

    def heisenberg_chain(self) -> list[np.ndarray]:
        """Pi(t_l) = U(t0, t_l)^dag Pi U(t0, t_l)."""
        out = []
        u = np.eye(np.asarray(self.initial).shape[0], dtype=complex)
        for p, step in zip(self.chain, self.evolutions):
            u = np.asarray(step) @ u
            out.append(u.conj().T @ np.asarray(p) @ u)
        return out

    def heisenberg_final(self) -> np.ndarray:
        u = np.eye(np.asarray(self.initial).shape[0], dtype=complex)
        for step in self.evolutions:
            u = np.asarray(step) @ u
        return u.conj().T @ np.asarray(self.final) @ u


def _same_context(h1: History, h2: History):
    same = (np.allclose(h1.initial, h2.initial) and np.allclose(h1.final, h2.final)
            and len(h1.evolutions) == len(h2.evolutions)
            and all(np.allclose(a, b) for a, b in zip(h1.evolutions, h2.evolutions)))
    if not same:
        raise KDError("histories must share initial state, final state and evolutions")


def histories_overlap(H: History, H_star: History) -> complex:
    """Tr(rho_f C rho_i C*^dag rho_f) / Tr(rho_f rho_i) with C the Heisenberg chain."""
    _same_context(H, H_star)
    rf = H.heisenberg_final()
    ri = np.asarray(H.initial)
    norm = np.trace(rf @ ri)
    if abs(norm) <= NORMALIZER_TOL:
        raise KDError("vanishing normalizer Tr(rho_f rho_i)")
    c = np.eye(ri.shape[0], dtype=complex)
    for p in H.heisenberg_chain():
        c = p @ c
    cs = np.eye(ri.shape[0], dtype=complex)
    for p in H_star.heisenberg_chain():
        cs = p @ cs
    return complex(np.trace(rf @ c @ ri @ cs.conj().T @ rf) / norm)


def build_family(initial, projector_sets: Sequence[Sequence], final, evolutions) -> list[History]:
    """All histories choosing one projector from each slot's set."""
    return [History(initial, tuple(choice), final, tuple(evolutions))
            for choice in itertools.product(*projector_sets)]


def minimal_family(H: History) -> list[History]:
    """2^k histories, each slot holding its projector or the complement."""
    d = np.asarray(H.initial).shape[0]
    sets = [(np.asarray(p), np.eye(d) - np.asarray(p)) for p in H.chain]
    return build_family(H.initial, sets, H.final, H.evolutions)


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    offending_pair: tuple | None
    diagonal: np.ndarray


def family_consistent(family: Sequence[History], tol: float = 1e-10) -> ConsistencyReport:
    if len(family) == 0:
        raise KDError("empty family")
    n = len(family)
    diag = np.array([histories_overlap(h, h) for h in family])
    for i in range(n):
        for j in range(n):
            if i != j and abs(histories_overlap(family[i], family[j])) > tol:
                return ConsistencyReport(False, (i, j), diag.real)
    return ConsistencyReport(True, None, diag.real)


def beam_splitter() -> np.ndarray:
    """Balanced beam splitter exp(-i pi/4 sigma_y) acting on the two path modes."""
    c = np.cos(np.pi / 4)
    return np.array([[c, -c], [c, c]], dtype=complex)


def mach_zehnder_histories() -> dict:
    """Which-path (H0, H1) and superposition (H+, H-) histories of a balanced interferometer.

    The photon enters port 0, and the final state is detection in port 1
    after two beam splitters.
    """
    u = beam_splitter()
    rho_i = pure_density([1, 0])
    rho_f = pure_density([0, 1])
    plus = pure_density(np.array([1, 1]) / np.sqrt(2))
    minus = pure_density(np.array([1, -1]) / np.sqrt(2))
    ev = (u, u)
    return {
        "H0": History(rho_i, (pure_density([1, 0]),), rho_f, ev),
        "H1": History(rho_i, (pure_density([0, 1]),), rho_f, ev),
        "H+": History(rho_i, (plus,), rho_f, ev),
        "H-": History(rho_i, (minus,), rho_f, ev),
    }


# KCBS ----------------------------------------------------------------------------

@dataclass(frozen=True)
class KcbsScenario:
    vectors: np.ndarray  # shape (5, 3)
    observables: np.ndarray  # shape (5, 3, 3)


def kcbs_scenario() -> KcbsScenario:
    """Pentagram vectors with cos(theta) = 5^(-1/4), phi_j = ((2j+1) mod 5) 2pi/5."""
    ct = 5 ** -0.25
    st = np.sqrt(1 - ct**2)
    phis = np.array([((2 * j + 1) % 5) * 2 * np.pi / 5 for j in range(5)])
    v = np.stack([st * np.sin(phis), st * np.cos(phis), np.full(5, ct)], axis=1)
    obs = np.array([2 * np.outer(x, x) - np.eye(3) for x in v]).astype(complex)
    return KcbsScenario(v, obs)


def kcbs_s(rho, scenario: KcbsScenario | None = None) -> float:
    """S = sum_j <A_j A_{j+1}>."""
    rho = check_density(rho)
    sc = scenario or kcbs_scenario()
    a = sc.observables
    return float(sum(np.trace(a[j] @ a[(j + 1) % 5] @ rho).real for j in range(5)))


def default_completions(scenario: KcbsScenario | None = None) -> list[np.ndarray]:
    """Gram-Schmidt of fixed seed vectors against v_j: two columns spanning the -1 space."""
    sc = scenario or kcbs_scenario()
    seeds = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    out = []
    for v in sc.vectors:
        basis = [v.astype(complex)]
        for s in seeds:
            w = s.astype(complex)
            for b in basis:
                w = w - np.vdot(b, w) * b
            if np.linalg.norm(w) > 1e-6:
                basis.append(w / np.linalg.norm(w))
            if len(basis) == 3:
                break
        out.append(np.stack(basis[1:], axis=1))
    return out


def random_completions(seed, scenario: KcbsScenario | None = None) -> list[np.ndarray]:
    """Default completions rotated by seeded random 2x2 unitaries."""
    from .hilbert import haar_random_unitary

    rng = _rng(seed)
    return [c @ haar_random_unitary(2, rng) for c in default_completions(scenario)]


def kcbs_bases(completions=None, scenario: KcbsScenario | None = None) -> list[OrthonormalBasis]:
    sc = scenario or kcbs_scenario()
    comps = default_completions(sc) if completions is None else completions
    bases = []
    for j, (v, c) in enumerate(zip(sc.vectors, comps)):
        c = np.asarray(c, dtype=complex)
        if c.shape != (3, 2) or np.abs(c.conj().T @ c - np.eye(2)).max() > 1e-10 \
                or np.abs(v @ c).max() > 1e-10:
            raise KDError(f"completion {j} is not orthonormal within the -1 eigenspace")
        bases.append(OrthonormalBasis(np.column_stack([v, c]), f"A{j}", np.array([1.0, -1.0, -1.0])))
    return bases


@dataclass(frozen=True)
class KcbsReport:
    S_direct: float
    S_kd: float
    positive: bool
    bound_violated: bool


def kcbs_s_via_kd(rho, completions=None, scenario: KcbsScenario | None = None) -> KcbsReport:
    """S from the 5-extended distribution over the observables' eigenbases.

    The weight of each index tuple is a0 a1 + a1 a2 + a2 a3 + a3 a4 + a4 a0.
    When the distribution is entrywise positive S must respect S >= -3.
    """
    rho = check_density(rho)
    bases = kcbs_bases(completions, scenario)
    q = extended_kd(rho, bases)
    vals = [b.values for b in bases]
    grids = np.meshgrid(*vals, indexing="ij")
    weight = sum(grids[j] * grids[(j + 1) % 5] for j in range(5))
    s_kd = float(np.sum(weight * q.values).real)
    positive = is_kd_positive(q).is_positive
    s_direct = kcbs_s(rho, scenario)
    if positive and s_kd < -3 - 1e-9:
        raise KDError("positive distribution violates the non-contextual bound; numerical failure")
    return KcbsReport(s_direct, s_kd, positive, s_kd < -3 - 1e-9)
