"""Linear maps on operator spaces: matrix representations, Choi matrices,
Kraus decompositions, explicit operator-sum constructions, and Stinespring
dilations.

A map Psi with input dimension ``d_in`` and output dimension ``d_out`` is
stored as a ``(d_out**2, d_in**2)`` matrix acting on row-major vectorized
operators: column ``i*d_in + j`` is ``vec(Psi(|i><j|))``.

The Choi matrix is the unnormalized ``C = sum_ij |i><j| kron Psi(|i><j|)``;
it is PSD exactly when the map is completely positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import (
    dagger,
    is_hermitian,
    kron,
    min_eigenvalue,
    partial_trace,
    psd_tolerance,
    unvec,
    vec,
)

__all__ = [
    "ChannelMap",
    "KrausSet",
    "StinespringDilation",
    "choi",
    "channel_from_choi",
    "channel_from_function",
    "channel_from_kraus",
    "is_cp",
    "is_tp",
    "is_hermitian_preserving",
    "kraus_from_choi",
    "kraus_factorized",
    "kraus_classical_quantum",
    "reduced_dynamics",
    "trace_out_env_matrix",
    "choi_distance",
    "stinespring",
    "apply_dilation",
    "verify_fixed_point",
]

# Choi eigenvalues with |e| <= RANK_TOL_FACTOR * d_in are discarded.
RANK_TOL_FACTOR = 1e-10


@dataclass(frozen=True)
class ChannelMap:
    """Matrix representation of a linear map on vectorized operators."""

    d_in: int
    d_out: int
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        if m.shape != (self.d_out**2, self.d_in**2):
            raise ValueError(
                f"channel matrix shape {m.shape}, expected "
                f"({self.d_out**2}, {self.d_in**2})"
            )
        object.__setattr__(self, "mat", m)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return unvec(self.mat @ vec(x), self.d_out)


@dataclass(frozen=True)
class KrausSet:
    """Signed operator-sum representation {(e_i, E_i)}.

    ``coefficients`` are real; ``operators`` have shape (d_out, d_in).  When
    ``all_positive``, the map is CP and admits the plain Kraus form with
    operators sqrt(e_i) * E_i.
    """

    coefficients: tuple[float, ...]
    operators: tuple[np.ndarray, ...]
    all_positive: bool

    def positive_operators(self) -> list[np.ndarray]:
        if not self.all_positive:
            raise ValueError("Kraus set has negative coefficients")
        return [np.sqrt(e) * k for e, k in zip(self.coefficients, self.operators)]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return sum(e * k @ x @ dagger(k) for e, k in zip(self.coefficients, self.operators))

    def closure(self) -> np.ndarray:
        """sum_i e_i E_i^dag E_i; equals the input identity for TP maps."""
        return sum(e * dagger(k) @ k for e, k in zip(self.coefficients, self.operators))


@dataclass(frozen=True)
class StinespringDilation:
    """Unitary dilation V on (output space) x C with fixed ancilla inputs.

    ``apply_dilation`` reproduces the dilated CP map as
    ``x -> Tr_C( V (x kron |0..0><0..0|) V^dag )``.
    """

    d_in: int
    d_out: int
    d_anc: int
    unitary: np.ndarray = field(repr=False)


def channel_from_function(fn, d_in: int, d_out: int) -> ChannelMap:
    """Build the matrix representation by applying ``fn`` to matrix units."""
    cols = np.empty((d_out**2, d_in**2), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            x = np.zeros((d_in, d_in), dtype=complex)
            x[i, j] = 1.0
            cols[:, i * d_in + j] = vec(fn(x))
    return ChannelMap(d_in, d_out, cols)


def channel_from_kraus(k: KrausSet, d_in: int, d_out: int) -> ChannelMap:
    m = np.zeros((d_out**2, d_in**2), dtype=complex)
    for e, op in zip(k.coefficients, k.operators):
        m += e * np.kron(op, op.conj())
    return ChannelMap(d_in, d_out, m)


def choi(c: ChannelMap) -> np.ndarray:
    """Choi matrix C = sum_ij |i><j| kron Psi(|i><j|), unnormalized."""
    d_in, d_out = c.d_in, c.d_out
    t = c.mat.reshape(d_out, d_out, d_in, d_in)
    return t.transpose(2, 0, 3, 1).reshape(d_in * d_out, d_in * d_out)


def channel_from_choi(ch: np.ndarray, d_in: int, d_out: int) -> ChannelMap:
    t = np.asarray(ch, dtype=complex).reshape(d_in, d_out, d_in, d_out)
    m = t.transpose(1, 3, 0, 2).reshape(d_out**2, d_in**2)
    return ChannelMap(d_in, d_out, m)


def is_cp(ch: np.ndarray) -> bool:
    """CP test on a Choi matrix: Hermitian and PSD to scale-aware tolerance."""
    return is_hermitian(ch) and min_eigenvalue((ch + dagger(ch)) / 2) >= -psd_tolerance(ch)


def is_tp(c: ChannelMap, tol: float = 1e-9) -> bool:
    """Trace preservation: Tr_out of the Choi matrix equals the input identity."""
    ch = choi(c)
    marg = partial_trace(ch, (c.d_in, c.d_out), keep=(0,))
    return np.linalg.norm(marg - np.eye(c.d_in)) <= tol * c.d_in


def is_hermitian_preserving(c: ChannelMap, tol: float = 1e-9) -> bool:
    return is_hermitian(choi(c), tol)


def is_tp_on_domain(c: ChannelMap, domain_projector: np.ndarray, tol: float = 1e-9) -> bool:
    """Trace preservation restricted to a domain subspace of inputs.

    Checks that the trace functional composed with the channel agrees with
    the plain trace on the range of the projector.
    """
    lhs = vec(np.eye(c.d_out)).conj() @ (c.mat @ domain_projector)
    rhs = vec(np.eye(c.d_in)).conj() @ domain_projector
    return bool(np.linalg.norm(lhs - rhs) <= tol * c.d_in)


def kraus_from_choi(ch: np.ndarray, d_in: int, d_out: int) -> KrausSet:
    """Signed Kraus set from the eigendecomposition of a Hermitian Choi matrix.

    Coefficients are the retained eigenvalues; operators are unit-normalized
    reshaped eigenvectors, so the represented map is
    ``x -> sum_i e_i E_i x E_i^dag``.
    """
    ch = np.asarray(ch, dtype=complex)
    if not is_hermitian(ch):
        raise ValueError("Choi matrix is not Hermitian")
    w, v = np.linalg.eigh((ch + dagger(ch)) / 2)
    rank_tol = RANK_TOL_FACTOR * d_in
    coeffs = []
    ops = []
    for k in np.argsort(np.abs(w))[::-1]:
        if abs(w[k]) <= rank_tol:
            continue
        coeffs.append(float(w[k]))
        # Eigenvector index order is (input, output): component (i, a) is
        # the (a, i) entry of the Kraus operator.
        ops.append(v[:, k].reshape(d_in, d_out).T.copy())
    return KrausSet(tuple(coeffs), tuple(ops), all_positive=all(e > 0 for e in coeffs))


def trace_out_env_matrix(d_s: int, d_e: int) -> np.ndarray:
    """Matrix of Tr_E : vec L(H_S x H_E) -> vec L(H_S)."""
    d = d_s * d_e
    t = np.zeros((d_s**2, d**2), dtype=complex)
    for s in range(d_s):
        for sp in range(d_s):
            for e in range(d_e):
                t[s * d_s + sp, (s * d_e + e) * d + (sp * d_e + e)] = 1.0
    return t


def reduced_dynamics(u: np.ndarray, assign_mat: np.ndarray, d_s: int, d_e: int) -> ChannelMap:
    """Compose Tr_E, Ad_U and an assignment map into one channel on S.

    ``assign_mat`` maps vec L(H_S) -> vec L(H_S x H_E).
    """
    u = np.asarray(u, dtype=complex)
    d = d_s * d_e
    if u.shape != (d, d):
        raise ValueError(f"unitary shape {u.shape}, expected ({d}, {d})")
    if assign_mat.shape != (d**2, d_s**2):
        raise ValueError(
            f"assignment matrix shape {assign_mat.shape}, expected ({d**2}, {d_s**2})"
        )
    ad = np.kron(u, u.conj())
    return ChannelMap(d_s, d_s, trace_out_env_matrix(d_s, d_e) @ ad @ assign_mat)


def product_assignment_matrix(omega_e: np.ndarray, d_s: int) -> np.ndarray:
    """Matrix of the product assignment x -> x kron omega_E."""
    d_e = omega_e.shape[0]
    d = d_s * d_e
    m = np.zeros((d**2, d_s**2), dtype=complex)
    for i in range(d_s):
        for j in range(d_s):
            x = np.zeros((d_s, d_s), dtype=complex)
            x[i, j] = 1.0
            m[:, i * d_s + j] = vec(kron(x, omega_e))
    return m


def kraus_factorized(u: np.ndarray, omega_e: np.ndarray, d_s: int, d_e: int) -> KrausSet:
    """Operator-sum construction for a fixed environment state.

    With omega_E = sum_l lam_l |mu_l><mu_l|, the Kraus operators are
    ``E_kl = sqrt(lam_l) <k_E| U |mu_l>`` acting on H_S; the represented
    channel equals Tr_E ( U (rho kron omega_E) U^dag ) for every rho.
    """
    w, vmat = np.linalg.eigh(np.asarray(omega_e, dtype=complex))
    # Row index (s, e), column (s', e'): contract the environment slots.
    u4 = np.asarray(u, dtype=complex).reshape(d_s, d_e, d_s, d_e)
    coeffs = []
    ops = []
    for l in range(d_e):
        lam = w[l].real
        if lam <= 1e-14:
            continue
        mu = vmat[:, l]
        u_mu = np.einsum("sket,t->ske", u4, mu)  # still indexed by k_E
        for k in range(d_e):
            coeffs.append(1.0)
            ops.append(np.sqrt(lam) * u_mu[:, k, :])
    return KrausSet(tuple(coeffs), tuple(ops), all_positive=True)


def kraus_classical_quantum(
    u: np.ndarray, basis: np.ndarray, omegas, d_s: int, d_e: int
) -> KrausSet:
    """Operator-sum construction for classical-quantum initial correlations.

    ``basis`` holds the fixed orthonormal system basis as columns; each
    basis state i carries its own fixed environment state omegas[i].  The
    Kraus operators are ``D_ikl P_i`` with P_i the basis projector and
    ``D_ikl = sqrt(lam_il) <k_E| U |mu_il>``.
    """
    u4 = np.asarray(u, dtype=complex).reshape(d_s, d_e, d_s, d_e)
    coeffs = []
    ops = []
    for i in range(d_s):
        b = basis[:, i]
        proj = np.outer(b, b.conj())
        w, vmat = np.linalg.eigh(np.asarray(omegas[i], dtype=complex))
        for l in range(d_e):
            lam = w[l].real
            if lam <= 1e-14:
                continue
            mu = vmat[:, l]
            u_mu = np.einsum("sket,t->ske", u4, mu)
            for k in range(d_e):
                coeffs.append(1.0)
                ops.append(np.sqrt(lam) * u_mu[:, k, :] @ proj)
    return KrausSet(tuple(coeffs), tuple(ops), all_positive=True)


def choi_distance(a: ChannelMap, b: ChannelMap) -> float:
    """Frobenius norm of the Choi difference (basis-independent equality metric)."""
    return float(np.linalg.norm(choi(a) - choi(b)))


def stinespring(k: KrausSet, d_in: int, d_out: int) -> StinespringDilation:
    """Unitary dilation of a CP map given by a positive Kraus set.

    Builds the isometry W = sum_k (E_k x) kron |k_C> and completes it to a
    unitary V on output x C.  The input x is embedded as
    x kron |0><0| on the first d_out/d_in-worth of each block, i.e. the
    isometry columns sit at positions ``s * pad * d_anc`` where
    ``pad = d_out // d_in`` absorbs the fixed-environment reference state.
    """
    if not k.all_positive:
        raise ValueError("Stinespring dilation needs an all-positive Kraus set")
    if d_out % d_in != 0:
        raise ValueError("output dimension must be a multiple of the input dimension")
    ops = k.positive_operators()
    if np.linalg.norm(k.closure() - np.eye(d_in)) > 1e-8 * d_in:
        raise ValueError("dilation requires a trace-preserving Kraus set")
    d_anc = len(ops)
    n = d_out * d_anc
    w = np.zeros((n, d_in), dtype=complex)
    for c, op in enumerate(ops):
        for a in range(d_out):
            w[a * d_anc + c, :] += op[a, :]
    pad = d_out // d_in
    special = [s * pad * d_anc for s in range(d_in)]
    v = np.zeros((n, n), dtype=complex)
    for s, col in enumerate(special):
        v[:, col] = w[:, s]
    comp = _orthogonal_complement(w)
    rest = [c for c in range(n) if c not in set(special)]
    for c, col in zip(rest, range(comp.shape[1])):
        v[:, c] = comp[:, col]
    return StinespringDilation(d_in, d_out, d_anc, v)


def _orthogonal_complement(w: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of the column span of w."""
    n = w.shape[0]
    q, _ = np.linalg.qr(w)
    p = q @ dagger(q)
    u, s, _ = np.linalg.svd(np.eye(n) - p)
    rank = int((s > 1e-10).sum())
    return u[:, :rank]


def apply_dilation(dil: StinespringDilation, x: np.ndarray) -> np.ndarray:
    """Evaluate the dilated map: embed x at the reference ancilla states,
    conjugate by V, trace out C."""
    n = dil.d_out * dil.d_anc
    pad = dil.d_out // dil.d_in
    idx = [s * pad * dil.d_anc for s in range(dil.d_in)]
    big = np.zeros((n, n), dtype=complex)
    big[np.ix_(idx, idx)] = x
    out = dil.unitary @ big @ dagger(dil.unitary)
    return partial_trace(out, (dil.d_out, dil.d_anc), keep=(0,))


def verify_fixed_point(assign_mat: np.ndarray, d_s: int, d_e: int, samples) -> float:
    """Max deviation || Tr_E(Lambda(rho)) - rho || over the given domain states."""
    t = trace_out_env_matrix(d_s, d_e)
    worst = 0.0
    for rho in samples:
        out = unvec(t @ (assign_mat @ vec(rho)), d_s)
        worst = max(worst, float(np.linalg.norm(out - rho)))
    return worst
