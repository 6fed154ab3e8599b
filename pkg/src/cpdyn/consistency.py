"""Operator subspaces of L(H_S x H_E), their partial-trace kernels,
unitary-consistency checks, assignment maps and the end-to-end theorem
verifier.

A subspace is stored as an orthonormal basis of row-major vectorized
operators.  The kernel of the environment trace inside a subspace
parametrizes the freedom in choosing an assignment map; conjugating the
kernel into the trace kernel again is exactly unitary consistency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import (
    ChannelMap,
    choi,
    choi_distance,
    is_cp,
    is_tp,
    product_assignment_matrix,
    reduced_dynamics,
    trace_out_env_matrix,
)
from .tensor import (
    dagger,
    is_hermitian,
    kron,
    min_eigenvalue,
    random_haar_unitary,
    swap_unitary,
    unvec,
    vec,
)

__all__ = [
    "OperatorSubspace",
    "AssignmentMap",
    "ExplicitList",
    "AllUnitaries",
    "LocalProducts",
    "SwapOnly",
    "span_from_states",
    "full_space",
    "subspace_from_constraint",
    "kernel_tr_e",
    "u_consistency_violation",
    "is_u_consistent",
    "g_consistency_report",
    "sample_unitaries",
    "canonical_assignment",
    "assignment_from_matrix",
    "perturb_assignment",
    "witness_assignment",
    "theorem1_verify",
]

# Singular values below SPAN_RANK_FACTOR * largest are treated as zero.
SPAN_RANK_FACTOR = 1e-9
CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class OperatorSubspace:
    """Orthonormalized subspace of vectorized operators on S x E."""

    d_s: int
    d_e: int
    basis: np.ndarray = field(repr=False)  # shape (d^2, n), orthonormal columns

    def __post_init__(self):
        d = self.d_s * self.d_e
        b = np.asarray(self.basis, dtype=complex).reshape(d * d, -1)
        gram = b.conj().T @ b
        if np.linalg.norm(gram - np.eye(b.shape[1])) > 1e-8 * max(1, b.shape[1]):
            raise ValueError("subspace basis is not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection of an operator onto the subspace."""
        v = self.basis @ (self.basis.conj().T @ vec(x))
        return unvec(v, self.d_s * self.d_e)

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return np.linalg.norm(self.project(x) - x) <= tol * max(1.0, np.linalg.norm(x))


@dataclass(frozen=True)
class AssignmentMap:
    """Linear section of the environment trace on a declared domain.

    ``mat`` maps vec L(H_S) to vec L(H_S x H_E); ``domain_projector`` is the
    orthogonal projector onto Tr_E V inside vec L(H_S).  Flags are computed
    numerically at construction.
    """

    d_s: int
    d_e: int
    mat: np.ndarray = field(repr=False)
    domain_projector: np.ndarray = field(repr=False)
    trace_consistent: bool
    hermitian: bool
    cp: bool

    def apply(self, x: np.ndarray) -> np.ndarray:
        return unvec(self.mat @ vec(x), self.d_s * self.d_e)

    def as_channel(self) -> ChannelMap:
        return ChannelMap(self.d_s, self.d_s * self.d_e, self.mat)

    def choi(self) -> np.ndarray:
        return choi(self.as_channel())


@dataclass(frozen=True)
class ExplicitList:
    unitaries: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class AllUnitaries:
    samples: int = 100


@dataclass(frozen=True)
class LocalProducts:
    samples: int = 100


@dataclass(frozen=True)
class SwapOnly:
    pass


def span_from_states(states, d_s: int, d_e: int) -> OperatorSubspace:
    """Orthonormalized span of a list of operators; dimension is the
    numerical rank of the stack."""
    if not states:
        raise ValueError("need at least one spanning operator")
    d = d_s * d_e
    stack = np.column_stack([vec(s) for s in states])
    u, sv, _ = np.linalg.svd(stack, full_matrices=False)
    rank = int((sv > SPAN_RANK_FACTOR * sv[0]).sum()) if sv[0] > 0 else 0
    return OperatorSubspace(d_s, d_e, u[:, :rank])


def full_space(d_s: int, d_e: int) -> OperatorSubspace:
    d = d_s * d_e
    return OperatorSubspace(d_s, d_e, np.eye(d * d, dtype=complex))


def subspace_from_constraint(a: np.ndarray, d_s: int, d_e: int) -> OperatorSubspace:
    """Null space of a linear constraint matrix acting on vectorized operators."""
    _, sv, vh = np.linalg.svd(a)
    top = sv[0] if sv.size and sv[0] > 0 else 1.0
    rank = int((sv > SPAN_RANK_FACTOR * top).sum())
    return OperatorSubspace(d_s, d_e, vh[rank:].conj().T)


def kernel_tr_e(v: OperatorSubspace) -> OperatorSubspace:
    """The sub-subspace of directions with vanishing environment trace."""
    t = trace_out_env_matrix(v.d_s, v.d_e)
    r = t @ v.basis
    _, sv, vh = np.linalg.svd(r, full_matrices=True)
    top = sv[0] if sv.size and sv[0] > 0 else 1.0
    rank = int((sv > SPAN_RANK_FACTOR * top).sum())
    null_coeffs = vh[rank:].conj().T  # (n, n - rank), orthonormal
    basis = v.basis @ null_coeffs
    return OperatorSubspace(v.d_s, v.d_e, basis.reshape(v.basis.shape[0], -1))


def u_consistency_violation(v: OperatorSubspace, u: np.ndarray) -> float:
    """Worst norm of Tr_E(U Y U^dag) over kernel basis directions Y."""
    k = kernel_tr_e(v)
    if k.dim == 0:
        return 0.0
    t = trace_out_env_matrix(v.d_s, v.d_e)
    ad = np.kron(u, u.conj())
    out = t @ (ad @ k.basis)
    return float(np.linalg.norm(out, axis=0).max())


def is_u_consistent(v: OperatorSubspace, u: np.ndarray, tol: float = CONSISTENCY_TOL) -> bool:
    return u_consistency_violation(v, u) <= tol


def sample_unitaries(g, d_s: int, d_e: int, rng: np.random.Generator):
    """Concrete unitaries (with labels) representing a unitary-set spec."""
    if isinstance(g, ExplicitList):
        return [(f"explicit_{i}", u) for i, u in enumerate(g.unitaries)]
    if isinstance(g, AllUnitaries):
        return [
            (f"haar_{i}", random_haar_unitary(d_s * d_e, rng)) for i in range(g.samples)
        ]
    if isinstance(g, LocalProducts):
        return [
            (
                f"local_{i}",
                kron(random_haar_unitary(d_s, rng), random_haar_unitary(d_e, rng)),
            )
            for i in range(g.samples)
        ]
    if isinstance(g, SwapOnly):
        if d_s != d_e:
            raise ValueError("swap needs equal system and environment dimensions")
        return [("swap", swap_unitary(d_s))]
    raise TypeError(f"unknown unitary set spec {type(g).__name__}")


def g_consistency_report(v: OperatorSubspace, g, rng: np.random.Generator) -> dict:
    """Consistency of a subspace over a unitary set, with exact shortcuts.

    An empty kernel is consistent for every unitary.  Local product
    unitaries conjugate the kernel into itself exactly, so that variant is
    reported as exact as well; sampled violations are reported alongside.
    """
    kernel = kernel_tr_e(v)
    report = {
        "set": type(g).__name__,
        "dim_v": v.dim,
        "dim_v0": kernel.dim,
        "exact": False,
        "consistent": True,
        "worst_violation": 0.0,
        "checked": 0,
    }
    if kernel.dim == 0:
        report["exact"] = True
        return report
    if isinstance(g, LocalProducts):
        # Tr_E((U_S x U_E) Y (U_S x U_E)^dag) = U_S Tr_E(Y) U_S^dag = 0.
        report["exact"] = True
    t = trace_out_env_matrix(v.d_s, v.d_e)
    worst = 0.0
    for _, u in sample_unitaries(g, v.d_s, v.d_e, rng):
        out = t @ (np.kron(u, u.conj()) @ kernel.basis)
        worst = max(worst, float(np.linalg.norm(out, axis=0).max()))
        report["checked"] += 1
    report["worst_violation"] = worst
    report["consistent"] = report["exact"] or worst <= CONSISTENCY_TOL
    return report


def _assignment_flags(mat, d_s, d_e, domain_projector):
    t = trace_out_env_matrix(d_s, d_e)
    trace_consistent = (
        np.linalg.norm(t @ mat - domain_projector) <= 1e-8 * max(1, d_s)
    )
    ch = choi(ChannelMap(d_s, d_s * d_e, mat))
    hermitian = is_hermitian(ch)
    cp = is_cp(ch)
    return trace_consistent, hermitian, cp


def assignment_from_matrix(
    mat: np.ndarray, d_s: int, d_e: int, domain_projector: np.ndarray | None = None
) -> AssignmentMap:
    if domain_projector is None:
        domain_projector = np.eye(d_s * d_s, dtype=complex)
    tc, herm, cp = _assignment_flags(mat, d_s, d_e, domain_projector)
    return AssignmentMap(d_s, d_e, mat, domain_projector, tc, herm, cp)


def canonical_assignment(v: OperatorSubspace) -> AssignmentMap:
    """Minimum-Frobenius-norm right inverse of Tr_E restricted to V.

    The Moore-Penrose section is deterministic and basis independent;
    operators outside the domain Tr_E V are first projected onto it.
    """
    t = trace_out_env_matrix(v.d_s, v.d_e)
    r = t @ v.basis
    r_pinv = np.linalg.pinv(r, rcond=1e-12)
    mat = v.basis @ r_pinv
    domain_projector = r @ r_pinv
    tc, herm, cp = _assignment_flags(mat, v.d_s, v.d_e, domain_projector)
    return AssignmentMap(v.d_s, v.d_e, mat, domain_projector, tc, herm, cp)


def perturb_assignment(
    base: AssignmentMap, delta: np.ndarray, v0: OperatorSubspace, tol: float = 1e-8
) -> AssignmentMap:
    """Add a kernel-valued linear map to an assignment.

    ``delta`` maps vec L(H_S) into V0; trace consistency survives because
    every kernel direction vanishes under Tr_E.
    """
    delta = np.asarray(delta, dtype=complex)
    if delta.shape != base.mat.shape:
        raise ValueError(f"delta shape {delta.shape}, expected {base.mat.shape}")
    proj = v0.basis @ (v0.basis.conj().T @ delta)
    escape = np.linalg.norm(delta - proj)
    if escape > tol * max(1.0, np.linalg.norm(delta)):
        raise ValueError(f"delta range escapes the kernel (residual {escape:.3e})")
    mat = base.mat + delta
    tc, herm, cp = _assignment_flags(mat, base.d_s, base.d_e, base.domain_projector)
    return AssignmentMap(base.d_s, base.d_e, mat, base.domain_projector, tc, herm, cp)


def random_kernel_perturbation(
    v0: OperatorSubspace, rng: np.random.Generator, scale: float = 0.1
) -> np.ndarray:
    """A random linear map from vec L(H_S) into V0."""
    d_s = v0.d_s
    if v0.dim == 0:
        return np.zeros((v0.basis.shape[0], d_s * d_s), dtype=complex)
    coeffs = scale * (
        rng.normal(size=(v0.dim, d_s * d_s)) + 1j * rng.normal(size=(v0.dim, d_s * d_s))
    )
    return v0.basis @ coeffs


def witness_assignment(
    omega_e: np.ndarray, delta_e: np.ndarray, gamma: float, d_s: int
) -> AssignmentMap:
    """Hermitian, trace-consistent assignment that departs from CP-ness.

    x -> x kron omega_E + gamma * (x - tr(x) I/d_S) kron Delta with Delta a
    fixed traceless Hermitian environment direction; trace consistency
    holds for every gamma, CP fails beyond a finite threshold.
    """
    delta_e = np.asarray(delta_e, dtype=complex)
    if abs(np.trace(delta_e)) > 1e-10 or not is_hermitian(delta_e):
        raise ValueError("Delta must be traceless Hermitian")
    d_e = omega_e.shape[0]
    base = product_assignment_matrix(omega_e, d_s)
    pert = np.zeros_like(base)
    for i in range(d_s):
        for j in range(d_s):
            x = np.zeros((d_s, d_s), dtype=complex)
            x[i, j] = 1.0
            hat = x - np.trace(x) * np.eye(d_s) / d_s
            pert[:, i * d_s + j] = vec(kron(hat, delta_e))
    return assignment_from_matrix(base + gamma * pert, d_s, d_e)


def witness_gamma_threshold(
    omega_e: np.ndarray, delta_e: np.ndarray, d_s: int, hi: float = 64.0
) -> float:
    """Smallest gamma (by bisection) at which the witness assignment stops
    being CP."""
    if not witness_assignment(omega_e, delta_e, hi, d_s).cp:
        lo = 0.0
        for _ in range(50):
            mid = (lo + hi) / 2
            if witness_assignment(omega_e, delta_e, mid, d_s).cp:
                lo = mid
            else:
                hi = mid
        return hi
    raise ValueError("witness assignment stays CP up to the search cap")


def theorem1_verify(
    v: OperatorSubspace,
    g,
    rng: np.random.Generator,
    assignment: AssignmentMap | None = None,
    n_perturbations: int = 3,
    tol: float = CONSISTENCY_TOL,
) -> dict:
    """Check the subspace/assignment route to CP reduced dynamics.

    Reports (a) consistency of the subspace over the unitary set, (b) the
    CP flag of the assignment, and per-unitary CP/TP verdicts of the
    reduced channel together with its invariance under random kernel
    perturbations of the assignment.  The combined check passes when (a)
    and (b) imply CP dynamics and perturbation independence throughout.
    """
    kernel = kernel_tr_e(v)
    consistency = g_consistency_report(v, g, rng)
    assign = canonical_assignment(v) if assignment is None else assignment
    per_u = []
    for label, u in sample_unitaries(g, v.d_s, v.d_e, rng):
        psi = reduced_dynamics(u, assign.mat, v.d_s, v.d_e)
        ch = choi(psi)
        worst_pert = 0.0
        for _ in range(n_perturbations):
            delta = random_kernel_perturbation(kernel, rng)
            tilted = perturb_assignment(assign, delta, kernel)
            psi_t = reduced_dynamics(u, tilted.mat, v.d_s, v.d_e)
            worst_pert = max(worst_pert, choi_distance(psi, psi_t))
        per_u.append(
            {
                "unitary": label,
                "cp": bool(is_cp(ch)),
                "tp": bool(is_tp(psi)),
                "min_choi_eigenvalue": min_eigenvalue((ch + dagger(ch)) / 2),
                "perturbation_deviation": worst_pert,
            }
        )
    premises = bool(consistency["consistent"]) and bool(assign.cp)
    conclusion = all(rec["cp"] for rec in per_u) and all(
        rec["perturbation_deviation"] <= tol for rec in per_u
    )
    return {
        "dim_v": v.dim,
        "dim_v0": kernel.dim,
        "consistency": consistency,
        "assignment": {
            "trace_consistent": bool(assign.trace_consistent),
            "hermitian": bool(assign.hermitian),
            "cp": bool(assign.cp),
        },
        "per_unitary": per_u,
        "premises_hold": premises,
        "conclusion_holds": conclusion,
        "passed": (not premises) or conclusion,
    }
