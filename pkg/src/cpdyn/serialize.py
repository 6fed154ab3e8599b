"""JSON encoding of matrices, family specs and related value objects.

Complex matrices are stored as nested arrays of ``[re, im]`` pairs in
row-major order; family specs carry a ``variant`` tag.  The same encoding
is used by the CLI reports under ``--verbose``.
"""

from __future__ import annotations

import numpy as np

from .families import (
    ClassicalQuantumSpec,
    DirectSumSpec,
    FactorizedSpec,
    KernelExtendedSpec,
    MarkovBlocksSpec,
    MixedDirectSumSpec,
    SteeredSpec,
)

__all__ = ["mat_to_json", "mat_from_json", "spec_to_json", "spec_from_json"]


def mat_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def mat_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data])


def spec_to_json(spec) -> dict:
    if isinstance(spec, FactorizedSpec):
        return {
            "variant": "factorized",
            "d_s": spec.d_s,
            "omega_e": mat_to_json(spec.omega_e),
        }
    if isinstance(spec, ClassicalQuantumSpec):
        return {
            "variant": "classical-quantum",
            "basis": mat_to_json(spec.basis),
            "omegas": [mat_to_json(w) for w in spec.omegas],
        }
    if isinstance(spec, DirectSumSpec):
        return {
            "variant": "direct-sum",
            "block_dims": list(spec.block_dims),
            "omegas": [mat_to_json(w) for w in spec.omegas],
        }
    if isinstance(spec, MixedDirectSumSpec):
        return {
            "variant": "mixed-direct-sum",
            "block_dims": list(spec.block_dims),
            "m_prime": spec.m_prime,
            "omega_se": [mat_to_json(w) for w in spec.omega_se],
            "omegas": [mat_to_json(w) for w in spec.omegas],
        }
    if isinstance(spec, MarkovBlocksSpec):
        return {
            "variant": "markov-blocks",
            "blocks": [list(b) for b in spec.blocks],
            "d_e": spec.d_e,
            "omega_re": [mat_to_json(w) for w in spec.omega_re],
        }
    if isinstance(spec, SteeredSpec):
        return {
            "variant": "steered",
            "d_a": spec.d_a,
            "d_s": spec.d_s,
            "d_e": spec.d_e,
            "omega_ase": mat_to_json(spec.omega_ase),
        }
    if isinstance(spec, KernelExtendedSpec):
        return {
            "variant": "kernel-extended",
            "base": spec_to_json(spec.base),
            "kernel_basis": mat_to_json(spec.kernel_basis),
        }
    raise TypeError(f"cannot serialize {type(spec).__name__}")


def spec_from_json(data: dict):
    variant = data["variant"]
    if variant == "factorized":
        return FactorizedSpec(int(data["d_s"]), mat_from_json(data["omega_e"]))
    if variant == "classical-quantum":
        return ClassicalQuantumSpec(
            mat_from_json(data["basis"]),
            tuple(mat_from_json(w) for w in data["omegas"]),
        )
    if variant == "direct-sum":
        return DirectSumSpec(
            tuple(int(d) for d in data["block_dims"]),
            tuple(mat_from_json(w) for w in data["omegas"]),
        )
    if variant == "mixed-direct-sum":
        return MixedDirectSumSpec(
            tuple(int(d) for d in data["block_dims"]),
            int(data["m_prime"]),
            tuple(mat_from_json(w) for w in data["omega_se"]),
            tuple(mat_from_json(w) for w in data["omegas"]),
        )
    if variant == "markov-blocks":
        return MarkovBlocksSpec(
            tuple((int(l), int(r)) for l, r in data["blocks"]),
            int(data["d_e"]),
            tuple(mat_from_json(w) for w in data["omega_re"]),
        )
    if variant == "steered":
        return SteeredSpec(
            int(data["d_a"]),
            int(data["d_s"]),
            int(data["d_e"]),
            mat_from_json(data["omega_ase"]),
        )
    if variant == "kernel-extended":
        return KernelExtendedSpec(
            spec_from_json(data["base"]), mat_from_json(data["kernel_basis"])
        )
    raise ValueError(f"unknown family variant {variant!r}")
