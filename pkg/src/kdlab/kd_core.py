"""Kirkwood-Dirac distributions: standard, extended and POVM forms, symbols,
reconstruction, Bayesian conditioning and Dirac-ordered quantization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hilbert import (
    DimensionError,
    KDError,
    OrthonormalBasis,
    Povm,
    as_operator,
    check_density,
    transition_matrix,
)

OVERLAP_TOL = 1e-12
CONDITION_TOL = 1e-12


class SymbolUndefinedError(KDError):
    """A basis overlap vanishes, so the symbol or frame is not defined."""


class UndefinedConditionalError(KDError):
    pass


@dataclass(frozen=True)
class KdDistribution:
    """k-index complex quasi-probability tensor plus where it came from.

    `labels` names the basis or POVM of each axis, `outcomes` optionally holds
    the eigenvalue attached to each index of each axis, and `normalizer` is the
    probability divided out when the tensor is a conditional.
    """

    values: np.ndarray
    labels: tuple = ()
    kind: str = "standard"
    state: np.ndarray | None = field(default=None, repr=False)
    outcomes: tuple | None = None
    normalizer: complex | None = None

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def k(self) -> int:
        return self.values.ndim

    def total(self) -> complex:
        return complex(self.values.sum())

    def marginal(self, axes) -> np.ndarray:
        """Sum over every axis not in `axes`."""
        axes = (axes,) if np.isscalar(axes) else tuple(axes)
        other = tuple(a for a in range(self.k) if a not in axes)
        return self.values.sum(axis=other)

    def expectation(self, weights) -> complex:
        return complex(np.sum(np.asarray(weights) * self.values))


@dataclass(frozen=True)
class KdSymbol:
    values: np.ndarray


def _dims_match(rho, *objs):
    d = rho.shape[0]
    for o in objs:
        if o.dim != d:
            raise DimensionError(f"dimension mismatch: state has d={d}, {o.name or 'basis'} has d={o.dim}")


def standard_kd(rho, A: OrthonormalBasis, B: OrthonormalBasis) -> KdDistribution:
    """Q_ij = <b_j|a_i><a_i|rho|b_j>."""
    rho = check_density(rho)
    _dims_match(rho, A, B)
    u = transition_matrix(A, B)
    q = u.conj() * (A.vectors.conj().T @ rho @ B.vectors)
    return KdDistribution(q, (A.name, B.name), "standard", rho, (A.values, B.values))


def extended_kd(rho, bases: Sequence[OrthonormalBasis]) -> KdDistribution:
    """Q_{i1..ik} = <a^k_ik|a^(k-1)_i(k-1)> ... <a^2_i2|a^1_i1><a^1_i1|rho|a^k_ik>."""
    if len(bases) < 2:
        raise KDError("extended distribution needs at least two bases")
    rho = check_density(rho)
    _dims_match(rho, *bases)
    k = len(bases)
    # axes (i1, ik) from the state factor
    q = bases[0].vectors.conj().T @ rho @ bases[-1].vectors
    q = q.reshape((q.shape[0],) + (1,) * (k - 2) + (q.shape[1],))
    for l in range(1, k):
        t = transition_matrix(bases[l], bases[l - 1])  # [i_{l+1}, i_l]
        shape = [1] * k
        shape[l], shape[l - 1] = t.shape[0], t.shape[1]
        q = q * t.T.reshape(shape)
    labels = tuple(b.name for b in bases)
    return KdDistribution(q, labels, "extended", rho, tuple(b.values for b in bases))


def _as_povm(m) -> Povm:
    if isinstance(m, Povm):
        return m
    if isinstance(m, OrthonormalBasis):
        return Povm.from_basis(m)
    return Povm(tuple(m))


def povm_kd(rho, povms: Sequence) -> KdDistribution:
    """Q_{i1..ik} = Tr(M^k_ik ... M^1_i1 rho)."""
    if len(povms) < 1:
        raise KDError("at least one POVM is required")
    rho = check_density(rho)
    povms = [_as_povm(m) for m in povms]
    _dims_match(rho, *povms)
    x = np.einsum("iab,bc->iac", povms[0].elements, rho)
    for m in povms[1:]:
        x = np.einsum("jab,...bc->...jac", m.elements, x)
    q = np.trace(x, axis1=-2, axis2=-1)
    return KdDistribution(q, tuple(m.name for m in povms), "povm", rho, tuple(m.values for m in povms))


def _checked_overlaps(A, B) -> np.ndarray:
    u = transition_matrix(A, B)
    bad = np.argwhere(np.abs(u) <= OVERLAP_TOL)
    if len(bad):
        i, j = bad[0]
        raise SymbolUndefinedError(f"<a_{i}|b_{j}> vanishes; symbol and frame are undefined")
    return u


def kd_symbol(C, A: OrthonormalBasis, B: OrthonormalBasis) -> KdSymbol:
    """T_ij = <a_i|C|b_j>/<a_i|b_j>."""
    c = as_operator(C, "C")
    _dims_match(c, A, B)
    u = _checked_overlaps(A, B)
    return KdSymbol((A.vectors.conj().T @ c @ B.vectors) / u)


def overlap_from_symbol(T, Q) -> complex:
    """sum_ij conj(T_ij) Q_ij, equal to Tr(C^dagger rho)."""
    t = T.values if isinstance(T, KdSymbol) else np.asarray(T)
    q = Q.values if isinstance(Q, KdDistribution) else np.asarray(Q)
    return complex(np.sum(t.conj() * q))


def reconstruct_state(Q, A: OrthonormalBasis, B: OrthonormalBasis) -> np.ndarray:
    """rho = sum_ij Q_ij |a_i><b_j| / <b_j|a_i>."""
    q = Q.values if isinstance(Q, KdDistribution) else np.asarray(Q, dtype=complex)
    if q.shape != (A.dim, B.dim):
        raise DimensionError(f"distribution shape {q.shape} does not match bases")
    try:
        u = _checked_overlaps(A, B)
    except SymbolUndefinedError as exc:
        raise SymbolUndefinedError(f"partial information only: {exc}") from None
    return A.vectors @ (q / u.conj()) @ B.vectors.conj().T


def _values(Q):
    return Q.values if isinstance(Q, KdDistribution) else np.asarray(Q, dtype=complex)


def _rewrap(Q, values, normalizer, kind="conditional"):
    if isinstance(Q, KdDistribution):
        return KdDistribution(values, Q.labels, kind, Q.state, Q.outcomes, normalizer)
    return KdDistribution(values, (), kind, None, None, normalizer)


def condition_on_outcome(Q, axis: int, value: int) -> KdDistribution:
    """Divide the slice at `value` by its marginal probability; the axis is dropped."""
    q = _values(Q)
    sl = np.take(q, value, axis=axis)
    p = complex(sl.sum())
    if abs(p) <= CONDITION_TOL:
        raise UndefinedConditionalError(f"outcome {value} on axis {axis} has probability {abs(p):.3g}")
    if not isinstance(Q, KdDistribution):
        return _rewrap(Q, sl / p, p)
    keep = [a for a in range(q.ndim) if a != axis]
    labels = tuple(Q.labels[a] for a in keep) if Q.labels else ()
    outcomes = tuple(Q.outcomes[a] for a in keep) if Q.outcomes else None
    return KdDistribution(sl / p, labels, "conditional", Q.state, outcomes, p)


def condition_on_subset(Q, axis: int, subset) -> KdDistribution:
    """Zero entries outside `subset` along `axis`, renormalize by the subset probability."""
    q = _values(Q)
    mask = np.zeros(q.shape[axis], dtype=bool)
    mask[list(subset)] = True
    shape = [1] * q.ndim
    shape[axis] = q.shape[axis]
    kept = q * mask.reshape(shape)
    p = complex(kept.sum())
    if abs(p) <= CONDITION_TOL:
        raise UndefinedConditionalError(f"subset {sorted(subset)} on axis {axis} has probability {abs(p):.3g}")
    return _rewrap(Q, kept / p, p)


def dirac_quantize(h, A: OrthonormalBasis, B: OrthonormalBasis) -> np.ndarray:
    """sum_ij h_ij Pi_{a_i} Pi_{b_j}, with A ordered to the left of B."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (A.dim, B.dim):
        raise DimensionError(f"table shape {h.shape} does not match bases")
    u = transition_matrix(A, B)
    return A.vectors @ (h * u) @ B.vectors.conj().T
