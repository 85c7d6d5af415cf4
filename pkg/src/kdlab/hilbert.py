"""Dense Hilbert-space objects: bases, POVMs, spectral tools, random sampling.

Conventions: hbar = 1, operators are dense complex numpy arrays, a basis is
stored as a unitary matrix whose columns are the basis vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

MAX_DIM = 2**10

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIG_TOL = 1e-10
UNITARY_TOL = 1e-10
ORTHO_TOL = 1e-10
POVM_TOL = 1e-10
DEGENERACY_TOL = 1e-9

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


class KDError(ValueError):
    """Base class for all domain errors raised by kdlab."""


class DimensionError(KDError):
    pass


class CapacityError(KDError):
    pass


class NotHermitianError(KDError):
    pass


class NotDensityError(KDError):
    pass


class NotUnitaryError(KDError):
    pass


class NotPovmError(KDError):
    pass


class NotOrthonormalError(KDError):
    pass


def _check_dim(d):
    if int(d) != d or d < 1:
        raise DimensionError(f"invalid dimension {d!r}")
    if d > MAX_DIM:
        raise CapacityError(f"dimension {d} exceeds the dense cap {MAX_DIM}")
    return int(d)


def as_operator(op, name="operator") -> np.ndarray:
    m = np.asarray(op, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {m.shape}")
    _check_dim(m.shape[0])
    return m


def as_state_vector(psi, name="state") -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be a 1-d vector, got shape {v.shape}")
    _check_dim(v.shape[0])
    nrm = np.linalg.norm(v)
    if abs(nrm - 1) > 1e-10:
        raise NotDensityError(f"{name} is not normalized (norm {nrm:.3g})")
    return v


def is_hermitian(op, tol=HERMITIAN_TOL) -> bool:
    m = np.asarray(op)
    return np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def check_hermitian(op, tol=1e-10, name="operator") -> np.ndarray:
    m = as_operator(op, name)
    if not is_hermitian(m, tol):
        raise NotHermitianError(f"{name} is not Hermitian")
    return m


def check_density(rho, name="rho") -> np.ndarray:
    m = as_operator(rho, name)
    if not is_hermitian(m, HERMITIAN_TOL):
        raise NotDensityError(f"{name} is not Hermitian within {HERMITIAN_TOL}")
    tr = np.trace(m)
    if abs(tr - 1) > TRACE_TOL:
        raise NotDensityError(f"{name} has trace {tr.real:.15g}, expected 1")
    lo = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
    if lo < -EIG_TOL:
        raise NotDensityError(f"{name} has negative eigenvalue {lo:.3g}")
    return m


def check_unitary(u, tol=UNITARY_TOL, name="U") -> np.ndarray:
    m = as_operator(u, name)
    err = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
    if err > tol:
        raise NotUnitaryError(f"{name} is not unitary (Frobenius error {err:.3g})")
    return m


def pure_density(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class OrthonormalBasis:
    """Columns of `vectors` are the basis kets; `values` optionally labels them."""

    vectors: np.ndarray
    name: str = ""
    values: np.ndarray | None = None

    def __post_init__(self):
        v = as_operator(self.vectors, "basis vectors")
        err = np.max(np.abs(v.conj().T @ v - np.eye(v.shape[0])))
        if err > ORTHO_TOL:
            raise NotOrthonormalError(f"basis {self.name!r} not orthonormal (max deviation {err:.3g})")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        if self.values is not None:
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != (v.shape[0],):
                raise DimensionError("basis values must have one entry per vector")
            object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def vector(self, i) -> np.ndarray:
        return self.vectors[:, i]

    def projector(self, i) -> np.ndarray:
        return pure_density(self.vectors[:, i])

    def projectors(self) -> np.ndarray:
        """Stack of rank-one projectors, shape (d, d, d)."""
        v = self.vectors
        return np.einsum("ai,bi->iab", v, v.conj())

    def observable(self) -> np.ndarray:
        if self.values is None:
            raise KDError(f"basis {self.name!r} carries no eigenvalues")
        return (self.vectors * self.values) @ self.vectors.conj().T


@dataclass(frozen=True)
class Povm:
    """Positive operators summing to the identity."""

    elements: tuple
    name: str = ""
    values: np.ndarray | None = field(default=None)

    def __post_init__(self):
        els = np.asarray([as_operator(e, "POVM element") for e in self.elements])
        d = els.shape[1]
        for k, e in enumerate(els):
            if not is_hermitian(e, POVM_TOL):
                raise NotPovmError(f"POVM element {k} is not Hermitian")
            if np.linalg.eigvalsh((e + e.conj().T) / 2)[0] < -POVM_TOL:
                raise NotPovmError(f"POVM element {k} is not positive semidefinite")
        if np.linalg.norm(els.sum(axis=0) - np.eye(d)) > POVM_TOL:
            raise NotPovmError("POVM elements do not sum to the identity")
        els.setflags(write=False)
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self):
        return self.elements.shape[0]

    @classmethod
    def from_basis(cls, basis: OrthonormalBasis) -> "Povm":
        return cls(tuple(basis.projectors()), basis.name, basis.values)


def computational_basis(d: int) -> OrthonormalBasis:
    d = _check_dim(d)
    return OrthonormalBasis(np.eye(d, dtype=complex), "computational")


def make_dft_basis(d: int) -> OrthonormalBasis:
    """Vector j has components exp(2 pi i n j / d)/sqrt(d)."""
    d = _check_dim(d)
    n = np.arange(d)
    return OrthonormalBasis(np.exp(2j * np.pi * np.outer(n, n) / d) / np.sqrt(d), f"dft{d}")


def qubit_basis(label: str) -> OrthonormalBasis:
    """Eigenbasis of a Pauli matrix, +1 eigenvector first."""
    s = 1 / np.sqrt(2)
    table = {
        "Z": np.array([[1, 0], [0, 1]], dtype=complex),
        "X": np.array([[s, s], [s, -s]], dtype=complex),
        "Y": np.array([[s, s], [1j * s, -1j * s]], dtype=complex),
    }
    key = label.upper()
    if key not in table:
        raise KDError(f"unknown qubit basis {label!r}")
    return OrthonormalBasis(table[key], key, np.array([1.0, -1.0]))


def basis_from_unitary(u, name="") -> OrthonormalBasis:
    return OrthonormalBasis(check_unitary(u), name)


def eigenbasis(h, name="") -> OrthonormalBasis:
    """Eigenbasis of a Hermitian operator, ascending eigenvalues."""
    m = check_hermitian(h)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return OrthonormalBasis(v, name, w)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise KDError("an explicit seed is required")
    return np.random.default_rng(seed)


def haar_random_unitary(d: int, seed) -> np.ndarray:
    """QR of a complex Ginibre matrix with the R diagonal phases removed."""
    d = _check_dim(d)
    rng = _rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def haar_random_basis(d: int, seed, name="haar") -> OrthonormalBasis:
    return OrthonormalBasis(haar_random_unitary(d, seed), name)


def haar_random_state(d: int, seed) -> np.ndarray:
    rng = _rng(seed)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_density(d: int, seed, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre d x rank factor."""
    d = _check_dim(d)
    rng = _rng(seed)
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_hermitian(d: int, seed) -> np.ndarray:
    rng = _rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def transition_matrix(A: OrthonormalBasis, B: OrthonormalBasis) -> np.ndarray:
    """Entry (i, j) = <a_i|b_j>."""
    if A.dim != B.dim:
        raise DimensionError(f"basis dimensions differ: {A.dim} vs {B.dim}")
    return A.vectors.conj().T @ B.vectors


def min_overlap(A: OrthonormalBasis, B: OrthonormalBasis) -> float:
    """m_{A,B}: smallest modulus of <a_i|b_j>."""
    return float(np.abs(transition_matrix(A, B)).min())


def max_overlap(A: OrthonormalBasis, B: OrthonormalBasis) -> float:
    return float(np.abs(transition_matrix(A, B)).max())


def are_mutually_unbiased(A, B, tol=1e-10) -> bool:
    u = transition_matrix(A, B)
    return bool(np.max(np.abs(np.abs(u) ** 2 - 1 / A.dim)) <= tol)


def spectral_decompose(h, tol=DEGENERACY_TOL) -> list[tuple[float, np.ndarray]]:
    """Eigenvalue/projector pairs, ascending, with near-degenerate eigenvalues merged.

    Eigenvalues closer than tol * max(1, spectral range) are merged.
    """
    m = check_hermitian(h)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    thresh = tol * max(1.0, w[-1] - w[0])
    groups = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[groups[-1][-1]] <= thresh:
            groups[-1].append(k)
        else:
            groups.append([k])
    out = []
    for g in groups:
        vecs = v[:, g]
        out.append((float(np.mean(w[g])), vecs @ vecs.conj().T))
    return out


def matrix_exp_unitary(h, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h."""
    m = check_hermitian(h)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def tensor_product(ops: Sequence) -> np.ndarray:
    if len(ops) == 0:
        raise DimensionError("empty tensor product")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def partial_trace(op, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in `keep`."""
    m = np.asarray(op, dtype=complex)
    dims = [int(x) for x in dims]
    n = len(dims)
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise DimensionError(f"dims {dims} do not match operator shape {m.shape}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range")
    t = m.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    for k in sorted(traced, reverse=True):
        nk = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + nk)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)
