"""Non-positivity measures, KD coherence, support uncertainty, positivity
geometry and complete incompatibility."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize, nnls

from .hilbert import (
    CapacityError,
    KDError,
    OrthonormalBasis,
    are_mutually_unbiased,
    as_state_vector,
    check_density,
    haar_random_state,
    pure_density,
    transition_matrix,
)
from .kd_core import KdDistribution, extended_kd, standard_kd

POSITIVITY_TOL = 1e-10
SUPPORT_TOL = 1e-10
MEMBERSHIP_TOL = 1e-8
RANK_TOL = 1e-9
MAX_INCOMPATIBILITY_DIM = 12


def _vals(Q) -> np.ndarray:
    return Q.values if isinstance(Q, KdDistribution) else np.asarray(Q, dtype=complex)


@dataclass(frozen=True)
class PositivityVerdict:
    is_positive: bool
    worst_index: tuple
    worst_value: complex
    tol: float


@dataclass(frozen=True)
class UncertaintyPoint:
    nA: int
    nB: int
    kd_positive: bool
    donoho_stark_ok: bool = True
    near_threshold: bool = False
    state_id: str = ""

    @property
    def nAB(self) -> int:
        return self.nA + self.nB


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    p: np.ndarray
    q: np.ndarray
    residual: float


@dataclass(frozen=True)
class IncompatibilityResult:
    completely_incompatible: bool
    witness: tuple | None  # (S, T) as sorted tuples of 0-based indices


def total_nonpositivity(Q) -> float:
    """Sum of entry moduli."""
    return float(np.abs(_vals(Q)).sum())


def is_kd_positive(Q, tol: float = POSITIVITY_TOL) -> PositivityVerdict:
    q = _vals(Q)
    violation = np.maximum(np.abs(q.imag), -q.real)
    idx = np.unravel_index(int(np.argmax(violation)), q.shape)
    return PositivityVerdict(bool(violation[idx] <= tol), tuple(int(i) for i in idx), complex(q[idx]), tol)


def _unitary_from_params(x, d):
    h = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    n_off = len(iu[0])
    h[iu] = x[:n_off] + 1j * x[n_off:2 * n_off]
    h = h + h.conj().T
    h[np.diag_indices(d)] = x[2 * n_off:]
    return expm(1j * h)


def kd_coherence(rho, A: OrthonormalBasis, n_restarts: int = 64, seed: int = 0, maxiter: int = 2000) -> float:
    """max over bases B of sum |Im Q(rho; A, B)|, by seeded Nelder-Mead restarts.

    Each restart draws its start from its own child seed, so increasing
    n_restarts only adds starts and the result never decreases.
    """
    rho = check_density(rho)
    d = A.dim
    children = np.random.SeedSequence(seed).spawn(n_restarts)
    ra = A.vectors.conj().T @ rho

    def neg(x):
        b = A.vectors @ _unitary_from_params(x, d)
        u = A.vectors.conj().T @ b
        q = u.conj() * (ra @ b)
        return -np.abs(q.imag).sum()

    best = 0.0
    for child in children:
        x0 = np.random.default_rng(child).uniform(-np.pi, np.pi, d * d)
        res = minimize(neg, x0, method="Nelder-Mead",
                       options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-13})
        best = max(best, -float(res.fun))
    return best


def l1_coherence(rho, A: OrthonormalBasis) -> float:
    r = A.vectors.conj().T @ check_density(rho) @ A.vectors
    return float(np.abs(r).sum() - np.abs(np.diag(r)).sum())


def mub_coherence_identity_check(rho, A: OrthonormalBasis, B: OrthonormalBasis) -> float:
    """|N(Q) - 1 - C_l1| with Q the 3-extended distribution over (A, B, A)."""
    if not are_mutually_unbiased(A, B, 1e-10):
        raise KDError("B is not mutually unbiased with respect to A")
    q = extended_kd(rho, [A, B, A])
    return abs(total_nonpositivity(q) - 1 - l1_coherence(rho, A))


def support_uncertainty(psi, A: OrthonormalBasis, B: OrthonormalBasis,
                        support_tol: float = SUPPORT_TOL, positivity_tol: float = POSITIVITY_TOL,
                        state_id: str = "") -> UncertaintyPoint:
    psi = as_state_vector(psi, "psi")
    ca = np.abs(A.vectors.conj().T @ psi)
    cb = np.abs(B.vectors.conj().T @ psi)
    na = int(np.sum(ca > support_tol))
    nb = int(np.sum(cb > support_tol))
    near = bool(np.any((ca > support_tol / 10) & (ca <= 10 * support_tol))
                or np.any((cb > support_tol / 10) & (cb <= 10 * support_tol)))
    big_m = np.abs(transition_matrix(A, B)).max()
    ds_ok = bool(na * nb >= 1 / big_m**2 - 1e-9)
    positive = is_kd_positive(standard_kd(pure_density(psi), A, B), positivity_tol).is_positive
    return UncertaintyPoint(na, nb, positive, ds_ok, near, state_id)


def positivity_polytope_membership(rho, A: OrthonormalBasis, B: OrthonormalBasis,
                                   tol: float = MEMBERSHIP_TOL) -> MembershipResult:
    """Decide rho in conv{|a_i><a_i|, |b_j><b_j|} by nonnegative least squares."""
    rho = check_density(rho)
    d = A.dim
    cols = np.concatenate([A.projectors(), B.projectors()]).reshape(2 * d, d * d)
    design = np.vstack([cols.real.T, cols.imag.T, np.ones((1, 2 * d))])
    target = np.concatenate([rho.reshape(-1).real, rho.reshape(-1).imag, [1.0]])
    coef, _ = nnls(design, target)
    residual = float(np.linalg.norm(design @ coef - target))
    return MembershipResult(residual <= tol, coef[:d], coef[d:], residual)


def _dependent(a_cols, b_cols) -> bool:
    m = np.hstack([a_cols, b_cols])
    s = np.linalg.svd(m, compute_uv=False)
    return bool(s[-1] <= RANK_TOL * s[0])


def complete_incompatibility(A: OrthonormalBasis, B: OrthonormalBasis) -> IncompatibilityResult:
    """True iff span{a_i: i in S} and span{b_j: j in T} meet only in 0 whenever #S + #T <= d.

    Intersections only grow with S and T, so square stacks (#S + #T = d)
    suffice; (S, T) and their complements are equivalent, so half are checked.
    A failing pair is shrunk greedily to an inclusion-minimal witness.
    """
    d = A.dim
    if d > MAX_INCOMPATIBILITY_DIM:
        raise CapacityError(f"exhaustive scan limited to d <= {MAX_INCOMPATIBILITY_DIM}")
    a, b = A.vectors, B.vectors
    full = frozenset(range(d))
    seen = set()
    for s_size in range(1, d):
        for S in itertools.combinations(range(d), s_size):
            for T in itertools.combinations(range(d), d - s_size):
                key = (S, T)
                if key in seen:
                    continue
                seen.add((tuple(sorted(full - set(S))), tuple(sorted(full - set(T)))))
                if _dependent(a[:, S], b[:, T]):
                    return IncompatibilityResult(False, _shrink(a, b, list(S), list(T)))
    return IncompatibilityResult(True, None)


def _shrink(a, b, S, T):
    changed = True
    while changed:
        changed = False
        for lst, other_is_T in ((S, False), (T, True)):
            for x in list(lst):
                if len(lst) == 1:
                    break
                trial = [y for y in lst if y != x]
                s2, t2 = (S, trial) if other_is_T else (trial, T)
                if _dependent(a[:, s2], b[:, t2]):
                    lst.remove(x)
                    changed = True
    return tuple(sorted(S)), tuple(sorted(T))


def _pair_superpositions(A: OrthonormalBasis):
    d = A.dim
    for i, j in itertools.combinations(range(d), 2):
        for phase in (1, -1, 1j, -1j):
            yield f"a{i}+{phase}a{j}", (A.vectors[:, i] + phase * A.vectors[:, j]) / np.sqrt(2)


def _sampler_states(A, B, sampler, seed):
    kind, _, arg = sampler.partition(":")
    if kind == "empty":
        return []
    if kind == "basis-states":
        return ([(f"a{i}", A.vectors[:, i]) for i in range(A.dim)]
                + [(f"b{j}", B.vectors[:, j]) for j in range(B.dim)])
    if kind == "pairs":
        return list(_pair_superpositions(A))
    if kind == "haar":
        n = int(arg) if arg else 100
        if seed is None:
            raise KDError("haar sampler requires an explicit seed")
        rng = np.random.default_rng(seed)
        return [(f"haar{t}", haar_random_state(A.dim, rng)) for t in range(n)]
    raise KDError(f"unknown sampler {sampler!r}; use basis-states, haar:<n>, pairs or empty")


def uncertainty_diagram(A: OrthonormalBasis, B: OrthonormalBasis, sampler: str = "basis-states",
                        seed: int | None = None, threads: int = 1) -> list[UncertaintyPoint]:
    """Support-uncertainty points for sampled pure states.

    sampler: "basis-states" (every vector of A and of B), "haar:<n>", "pairs" (equal superpositions of two
    A-basis vectors with phases 1, -1, i, -i) or "empty".
    """
    states = _sampler_states(A, B, sampler, seed)

    def one(item):
        sid, psi = item
        return support_uncertainty(psi, A, B, state_id=sid)

    if threads > 1 and len(states) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, states))
    return [one(s) for s in states]


def _pure_from_params(x, d):
    z = x[:d] + 1j * x[d:]
    return z / np.linalg.norm(z)


def maximize_nonpositivity(bases: Sequence[OrthonormalBasis], seed: int, n_restarts: int = 20) -> tuple[float, np.ndarray]:
    """Maximize N over pure states for the extended distribution on `bases`.

    BFGS from seeded random starts, then a Nelder-Mead polish of the best.
    Returns (N_max, maximizing state).
    """
    d = bases[0].dim
    vecs = [b.vectors for b in bases]
    chain = np.ones((d,) * len(bases), dtype=complex)
    k = len(bases)
    for l in range(1, k):
        t = vecs[l].conj().T @ vecs[l - 1]
        shape = [1] * k
        shape[l], shape[l - 1] = d, d
        chain = chain * t.T.reshape(shape)

    def neg(x):
        psi = _pure_from_params(x, d)
        left = vecs[0].conj().T @ psi
        right = psi.conj() @ vecs[-1]
        state = np.outer(left, right).reshape((d,) + (1,) * (k - 2) + (d,))
        return -np.abs(chain * state).sum()

    rng = np.random.default_rng(seed)
    best = (np.inf, None)
    for _ in range(n_restarts):
        res = minimize(neg, rng.standard_normal(2 * d), method="BFGS", options={"gtol": 1e-12})
        if res.fun < best[0]:
            best = (res.fun, res.x)
    res = minimize(neg, best[1], method="Nelder-Mead",
                   options={"maxiter": 20000, "xatol": 1e-12, "fatol": 1e-15})
    x = res.x if res.fun <= best[0] else best[1]
    return -float(neg(x)), _pure_from_params(x, d)
