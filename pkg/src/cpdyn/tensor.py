"""Dense complex linear algebra on labelled tensor-product spaces.

Conventions used everywhere in this package:

* row-major tensor basis: the index of ``|i1 i2 ... in>`` is
  ``i1*d2*...*dn + ... + in`` (numpy ``kron`` order);
* direct-sum blocks on the system factor are concatenated in declaration
  order, row-major within each ``L x R`` block;
* ``vec`` is row-major flattening, so ``vec(A X B) = (A kron B.T) vec(X)``.

All values are immutable after construction and every function is a pure
function of its inputs; RNG state is always passed explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpaceLayout",
    "Operator",
    "SpectralDecomposition",
    "kron",
    "vec",
    "unvec",
    "basis_unit",
    "dagger",
    "partial_trace",
    "ad_u",
    "eig_hermitian",
    "random_haar_unitary",
    "random_density",
    "random_hermitian",
    "von_neumann_entropy",
    "swap_unitary",
    "psd_tolerance",
    "min_eigenvalue",
    "is_hermitian",
    "is_psd",
    "check_density",
    "check_unitary",
]

# Scale-aware PSD acceptance: min eigenvalue >= -PSD_TOL_FACTOR * max(1, ||m||).
PSD_TOL_FACTOR = 1e-9
HERM_TOL = 1e-9
# Eigenvalues below this are treated as exact zeros in entropy sums.
ENTROPY_EIG_CUTOFF = 1e-12


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor factors, each a (label, dimension) pair.

    ``block_structure`` optionally describes a direct-sum decomposition of
    the 'S' factor into L x R blocks, with blocks concatenated in order.
    """

    factors: tuple[tuple[str, int], ...]
    block_structure: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        for label, d in self.factors:
            if d < 1:
                raise ValueError(f"factor {label} has non-positive dimension {d}")
        if self.block_structure is not None:
            if "S" not in self.labels:
                raise ValueError("block_structure given but no 'S' factor")
            total = sum(l * r for l, r in self.block_structure)
            if total != self.dim_of("S"):
                raise ValueError(
                    f"block dims sum to {total}, expected dim(S)={self.dim_of('S')}"
                )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no factor labelled {label!r} in {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.position(label)]


@dataclass(frozen=True)
class Operator:
    """A square complex matrix tagged with its tensor-factor layout."""

    layout: SpaceLayout
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != self.layout.dim:
            raise ValueError(
                f"matrix dim {m.shape[0]} does not match layout dim {self.layout.dim}"
            )
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.layout.dim


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def kron(*mats: np.ndarray) -> np.ndarray:
    """Tensor product in row-major convention (left factor most significant)."""
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def vec(m: np.ndarray) -> np.ndarray:
    """Row-major vectorization."""
    return np.asarray(m, dtype=complex).reshape(-1)


def unvec(v: np.ndarray, rows: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    if rows is None:
        rows = int(round(math.isqrt(v.size)))
        if rows * rows != v.size:
            raise ValueError(f"cannot unvec length-{v.size} vector to a square matrix")
    return v.reshape(rows, v.size // rows)


def basis_unit(d: int, i: int, j: int) -> np.ndarray:
    """Matrix unit |i><j| on a d-dimensional space."""
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def partial_trace(m: np.ndarray, dims: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Trace out all tensor factors not listed in ``keep`` (by position).

    ``dims`` are the factor dimensions in row-major order; the result keeps
    the surviving factors in their original order.  The full trace is
    preserved: tr(result) = tr(m).
    """
    dims = tuple(dims)
    keep = tuple(sorted(keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep positions {keep} out of range for {n} factors")
    t = np.asarray(m, dtype=complex).reshape(dims + dims)
    # Trace the discarded axes pairwise, from the highest axis down so that
    # earlier axis numbers stay valid.
    for ax in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    d_keep = math.prod(dims[k] for k in keep) if keep else 1
    return t.reshape(d_keep, d_keep)


def partial_trace_op(op: Operator, keep: frozenset[str] | set[str]) -> Operator:
    """Label-based partial trace returning an Operator on the kept factors."""
    labels = op.layout.labels
    unknown = set(keep) - set(labels)
    if unknown:
        raise KeyError(f"unknown factor labels {sorted(unknown)}")
    positions = tuple(i for i, lab in enumerate(labels) if lab in keep)
    new_factors = tuple(f for f in op.layout.factors if f[0] in keep)
    out = partial_trace(op.mat, op.layout.dims, positions)
    return Operator(SpaceLayout(new_factors), out)


def ad_u(u: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Unitary conjugation U m U^dagger."""
    u = np.asarray(u, dtype=complex)
    m = np.asarray(m, dtype=complex)
    if u.shape != m.shape:
        raise ValueError(f"dimension mismatch: U is {u.shape}, m is {m.shape}")
    return u @ m @ u.conj().T


def eig_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues descending."""
    m = np.asarray(m, dtype=complex)
    herm_err = np.linalg.norm(m - m.conj().T)
    if herm_err > tol * max(1.0, np.linalg.norm(m)):
        raise ValueError(f"matrix is not Hermitian (deviation {herm_err:.3e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    order = np.argsort(w)[::-1]
    return SpectralDecomposition(w[order], v[:, order])


def random_haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix.

    The diagonal phase fix makes the distribution exactly Haar and the
    output a deterministic function of the RNG state.
    """
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Random density matrix of the given rank, from a Ginibre factor G G^dagger."""
    if rank < 1 or rank > dim:
        raise ValueError(f"rank must be in [1, {dim}], got {rank}")
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats, with 0 log 0 := 0."""
    w = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    w = w[w > ENTROPY_EIG_CUTOFF]
    return float(-(w * np.log(w)).sum())


def swap_unitary(d: int) -> np.ndarray:
    """Swap operator on a d x d bipartite space: |a,b> -> |b,a>."""
    u = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            u[b * d + a, a * d + b] = 1.0
    return u


def psd_tolerance(m: np.ndarray) -> float:
    """Scale-aware tolerance: a matrix counts as PSD down to -psd_tolerance(m)."""
    norm = np.linalg.norm(np.asarray(m), 2)
    return PSD_TOL_FACTOR * max(1.0, norm)


def min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(np.asarray(m, dtype=complex)).min())


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    m = np.asarray(m)
    return np.linalg.norm(m - m.conj().T) <= tol * max(1.0, np.linalg.norm(m))


def is_psd(m: np.ndarray) -> bool:
    return is_hermitian(m) and min_eigenvalue((m + dagger(m)) / 2) >= -psd_tolerance(m)


def check_density(rho: np.ndarray, name: str = "state") -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; returns the array."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho):
        raise ValueError(f"{name} is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"{name} has trace {tr}, expected 1")
    if min_eigenvalue((rho + dagger(rho)) / 2) < -psd_tolerance(rho):
        raise ValueError(f"{name} is not positive semidefinite")
    return rho


def check_unitary(u: np.ndarray, name: str = "unitary") -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if np.linalg.norm(u @ u.conj().T - np.eye(d)) > 1e-8 * d:
        raise ValueError(f"{name} is not unitary")
    return u
