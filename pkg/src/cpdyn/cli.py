"""Command-line harness: seeded verification sweeps with JSON reports.

Subcommands:

* ``verify-family`` — sample a family and unitaries, verify CP/TP of the
  reduced dynamics per trial;
* ``consistency``   — subspace dimensions and per-unitary consistency;
* ``theorem1``      — the full subspace/assignment/perturbation check;
* ``dpi``           — data-processing sweeps over Markov states plus a
  counterexample hunt on a non-Markov fixture;
* ``demo``          — the two worked swap / local-product scenarios.

Reports are deterministic functions of (command, config, seed) except for
the ``wall_time_s`` field.  Per-trial RNG streams are derived as
``seed XOR trial_index``.  Exit code is 0 iff the summary pass flag is set.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import channels, consistency, families, info
from .consistency import (
    AllUnitaries,
    ExplicitList,
    LocalProducts,
    SwapOnly,
    canonical_assignment,
    full_space,
    kernel_tr_e,
    perturb_assignment,
    random_kernel_perturbation,
    span_from_states,
    subspace_from_constraint,
    theorem1_verify,
)
from .tensor import (
    dagger,
    kron,
    min_eigenvalue,
    random_density,
    random_haar_unitary,
    vec,
)

SCHEMA_VERSION = 1
MAX_TOTAL_DIM = 64
SEED_ENV_VAR = "CPDYN_SEED"
DEFAULT_SEED = 2024

FAMILY_CHOICES = (
    "factorized",
    "classical-quantum",
    "direct-sum",
    "mixed-direct-sum",
    "markov-blocks",
    "steered",
    "kernel-extended",
)


def _parse_blocks(text: str) -> tuple[tuple[int, int], ...]:
    """Parse a block layout like '1x2,2x1' into ((1, 2), (2, 1))."""
    try:
        blocks = tuple(
            tuple(int(p) for p in part.split("x")) for part in text.split(",")
        )
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad block layout {text!r}") from None
    if any(len(b) != 2 or b[0] < 1 or b[1] < 1 for b in blocks):
        raise argparse.ArgumentTypeError(f"bad block layout {text!r}")
    return blocks


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(seed ^ trial)


def _unitary_set(name: str, samples: int):
    if name == "all":
        return AllUnitaries(samples)
    if name == "local":
        return LocalProducts(samples)
    if name == "swap":
        return SwapOnly()
    raise ValueError(f"unknown unitary set {name!r}")


def _check_dims(*dims: int):
    total = 1
    for d in dims:
        if d < 1:
            raise SystemExit(f"error: dimensions must be >= 1, got {d}")
        total *= d
    if total > MAX_TOTAL_DIM:
        raise SystemExit(
            f"error: total dimension {total} exceeds the hard cap {MAX_TOTAL_DIM}"
        )


def _random_spec(family: str, args, rng: np.random.Generator):
    ds, de, da = args.ds, args.de, args.da
    if family == "factorized":
        return families.FactorizedSpec(ds, random_density(de, de, rng))
    if family == "classical-quantum":
        return families.ClassicalQuantumSpec(
            random_haar_unitary(ds, rng),
            tuple(random_density(de, de, rng) for _ in range(ds)),
        )
    if family == "direct-sum":
        dims = tuple(l * r for l, r in args.blocks)
        return families.DirectSumSpec(
            dims, tuple(random_density(de, de, rng) for _ in dims)
        )
    if family == "mixed-direct-sum":
        dims = tuple(l * r for l, r in args.blocks)
        m_prime = max(1, len(dims) // 2)
        return families.MixedDirectSumSpec(
            dims,
            m_prime,
            tuple(random_density(d * de, d * de, rng) for d in dims[:m_prime]),
            tuple(random_density(de, de, rng) for _ in dims[m_prime:]),
        )
    if family == "markov-blocks":
        return families.MarkovBlocksSpec(
            args.blocks,
            de,
            tuple(random_density(r * de, r * de, rng) for _, r in args.blocks),
        )
    if family == "steered":
        mspec = families.random_markov_state_spec(da, args.blocks, de, rng)
        return families.SteeredSpec(da, mspec.d_s, de, families.build_markov_state(mspec))
    if family == "kernel-extended":
        base = families.MarkovBlocksSpec(
            args.blocks,
            de,
            tuple(random_density(r * de, r * de, rng) for _, r in args.blocks),
        )
        ambient_kernel = kernel_tr_e(full_space(base.d_s, de))
        n_dir = min(3, ambient_kernel.dim)
        coeffs = rng.normal(size=(ambient_kernel.dim, n_dir))
        sub = np.linalg.qr(ambient_kernel.basis @ coeffs)[0]
        return families.KernelExtendedSpec(base, sub)
    raise ValueError(f"unknown family {family!r}")


def _spec_dims(spec) -> tuple[int, int]:
    return spec.d_s, spec.d_e


def _family_members(spec, rng: np.random.Generator, n: int):
    return [
        families.sample_member(spec, families.random_params(spec, rng))
        for _ in range(n)
    ]


def _verify_family_trial(args, trial: int) -> dict:
    rng = _trial_rng(args.seed, trial)
    spec = _random_spec(args.family, args, rng)
    ds, de = _spec_dims(spec)
    # The assignment is built from the span of the widest family containing
    # the sampled members: steered sets reuse their underlying block family,
    # kernel extensions reuse their base.
    if isinstance(spec, families.SteeredSpec):
        span_spec = families.MarkovBlocksSpec(args.blocks, de, spec_omega_re(args, spec))
    elif isinstance(spec, families.KernelExtendedSpec):
        span_spec = spec.base
    else:
        span_spec = spec
    members = _family_members(span_spec, rng, ds * ds + 2)
    v = span_from_states(members, ds, de)
    assign = canonical_assignment(v)
    g = _unitary_set(args.g, 1)
    label, u = consistency.sample_unitaries(g, ds, de, rng)[0]
    psi = channels.reduced_dynamics(u, assign.mat, ds, de)
    ch = channels.choi(psi)
    min_eig = min_eigenvalue((ch + dagger(ch)) / 2)
    rec = {
        "trial": trial,
        "unitary": label,
        "cp": bool(channels.is_cp(ch)),
        "tp": bool(channels.is_tp_on_domain(psi, assign.domain_projector)),
        "min_choi_eigenvalue": float(min_eig),
        "assignment_cp": bool(assign.cp),
    }
    if args.family == "factorized":
        k = channels.kraus_factorized(u, spec.omega_e, ds, de)
        direct = channels.channel_from_kraus(k, ds, ds)
        rec["construction_choi_distance"] = channels.choi_distance(psi, direct)
        rec["kraus_closure_error"] = float(
            np.linalg.norm(k.closure() - np.eye(ds))
        )
    if args.family == "markov-blocks":
        member = members[0]
        fit = families.structure_fit(member, spec.blocks, spec.omega_re, de)
        rec["structure_residual"] = fit.residual
    if args.family == "steered":
        member = families.sample_member(spec, families.random_params(spec, rng))
        rec["steered_in_span"] = bool(v.contains(member))
    return rec


def spec_omega_re(args, spec: "families.SteeredSpec"):
    """Recover the fixed R,E block states from a steered spec's tripartite
    state (they are its conditional blocks by construction)."""
    da, de = spec.d_a, spec.d_e
    d_s = spec.d_s
    out = []
    off = 0
    for l, r in args.blocks:
        idx = []
        for a in range(da):
            for li in range(l):
                for ri in range(r):
                    for e in range(de):
                        idx.append((a * d_s + off + li * r + ri) * de + e)
        blk = spec.omega_ase[np.ix_(idx, idx)]
        marg = blk.reshape(da * l, r * de, da * l, r * de)
        w = np.einsum("awav->wv", marg)
        tr = np.trace(w).real
        out.append(w / tr if tr > 1e-12 else np.eye(r * de) / (r * de))
        off += l * r
    return tuple(out)


def cmd_verify_family(args) -> dict:
    if args.family in (
        "direct-sum",
        "mixed-direct-sum",
        "markov-blocks",
        "steered",
        "kernel-extended",
    ):
        ds = sum(l * r for l, r in args.blocks)
    else:
        ds = args.ds
    _check_dims(ds, args.de)
    args.ds = ds
    if args.family == "kernel-extended" and args.g == "all":
        args.g = "local"  # arbitrary unitaries void the kernel freedom
    trials = [_verify_family_trial(args, t) for t in range(args.trials)]
    ok = [t["cp"] and t["tp"] for t in trials]
    summary = {
        "pass": all(ok),
        "n_trials": len(trials),
        "n_pass": sum(ok),
        "worst_min_choi_eigenvalue": min(t["min_choi_eigenvalue"] for t in trials),
        "worst_residual": max(
            (t.get("construction_choi_distance", 0.0) for t in trials), default=0.0
        ),
    }
    return {"trials": trials, "summary": summary}


def _build_subspace(args, rng: np.random.Generator):
    ds, de = args.ds, args.de
    if args.family == "full":
        return full_space(ds, de)
    if args.family == "random":
        states = [random_density(ds * de, ds * de, rng) for _ in range(args.span_states)]
        return span_from_states(states, ds, de)
    spec = _random_spec(args.family, args, rng)
    base = spec.base if isinstance(spec, families.KernelExtendedSpec) else spec
    members = _family_members(base, rng, ds * ds + 2)
    return span_from_states(members, spec.d_s, spec.d_e)


def cmd_consistency(args) -> dict:
    if args.family in ("direct-sum", "mixed-direct-sum", "markov-blocks", "kernel-extended"):
        args.ds = sum(l * r for l, r in args.blocks)
    _check_dims(args.ds, args.de)
    rng = np.random.default_rng(args.seed)
    v = _build_subspace(args, rng)
    g = _unitary_set(args.g, args.trials)
    report = consistency.g_consistency_report(v, g, rng)
    kernel = kernel_tr_e(v)
    trials = [
        {
            "trial": i,
            "violation": consistency.u_consistency_violation(
                v, consistency.sample_unitaries(g, v.d_s, v.d_e, _trial_rng(args.seed, i))[0][1]
            ),
        }
        for i in range(min(args.trials, 10))
    ]
    summary = {
        "pass": bool(report["consistent"]),
        "dim_v": v.dim,
        "dim_v0": kernel.dim,
        "worst_violation": report["worst_violation"],
        "exact": report["exact"],
    }
    return {"trials": trials, "summary": summary}


def cmd_theorem1(args) -> dict:
    if args.family in ("direct-sum", "mixed-direct-sum", "markov-blocks", "kernel-extended"):
        args.ds = sum(l * r for l, r in args.blocks)
    _check_dims(args.ds, args.de)
    rng = np.random.default_rng(args.seed)
    v = _build_subspace(args, rng)
    g = _unitary_set(args.g, args.trials)
    report = theorem1_verify(v, g, rng, tol=args.tol)
    summary = {
        "pass": bool(report["passed"]),
        "dim_v": report["dim_v"],
        "dim_v0": report["dim_v0"],
        "premises_hold": report["premises_hold"],
        "worst_min_choi_eigenvalue": min(
            (r["min_choi_eigenvalue"] for r in report["per_unitary"]), default=0.0
        ),
    }
    return {"trials": report["per_unitary"], "theorem": report, "summary": summary}


def ghz_state(d_a: int = 2, d_s: int = 2, d_e: int = 2) -> np.ndarray:
    """Tripartite GHZ-type pure state; deliberately not Markov."""
    dim = d_a * d_s * d_e
    psi = np.zeros(dim, dtype=complex)
    k = min(d_a, d_s, d_e)
    for i in range(k):
        psi[(i * d_s + i) * d_e + i] = 1.0
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def cmd_dpi(args) -> dict:
    _check_dims(args.da, args.ds, args.de)
    trials = []
    worst_delta = np.inf
    worst_cmi = 0.0
    for t in range(args.trials):
        rng = _trial_rng(args.seed, t)
        mspec = families.random_markov_state_spec(args.da, args.blocks, args.de, rng)
        omega = families.build_markov_state(mspec)
        cmi = info.conditional_mutual_information(omega, args.da, mspec.d_s, args.de)
        deltas = []
        for _ in range(args.unitaries_per_state):
            u = random_haar_unitary(mspec.d_s * args.de, rng)
            rep = info.dpi_check(omega, args.da, mspec.d_s, args.de, u)
            deltas.append(rep.delta)
        worst = min(deltas)
        worst_delta = min(worst_delta, worst)
        worst_cmi = max(worst_cmi, abs(cmi))
        trials.append({"trial": t, "cmi": cmi, "worst_delta": worst})
    rng = np.random.default_rng(args.seed)
    hunt = info.search_dpi_violation(
        ghz_state(args.da, args.ds, args.de),
        args.da,
        args.ds,
        args.de,
        rng,
        draws=args.search_draws,
    )
    summary = {
        "pass": bool(worst_delta >= -args.tol and hunt["found"]),
        "markov_worst_delta": float(worst_delta),
        "markov_worst_cmi": float(worst_cmi),
        "non_markov_search": hunt,
    }
    return {"trials": trials, "summary": summary}


def _demo1(args) -> dict:
    """Fixed environment marginal, swap-only evolution.

    The subspace is every operator whose system trace is proportional to a
    fixed environment state; the reduced dynamics collapses to the constant
    channel onto that state and stays CP and assignment independent.
    """
    ds = de = args.ds
    _check_dims(ds, de)
    rng = np.random.default_rng(args.seed)
    omega_e = np.diag([0.7, 0.3] + [0.0] * (de - 2)).astype(complex) if de == 2 else (
        np.eye(de, dtype=complex) / de
    )
    d = ds * de
    # Constraint: Tr_S X - tr(X) omega_E = 0.
    t_s = np.zeros((de * de, d * d), dtype=complex)
    for e in range(de):
        for ep in range(de):
            for s in range(ds):
                t_s[e * de + ep, (s * de + e) * d + (s * de + ep)] = 1.0
    constraint = t_s - np.outer(vec(omega_e), vec(np.eye(d)).conj())
    v = subspace_from_constraint(constraint, ds, de)
    kernel = kernel_tr_e(v)
    canon = canonical_assignment(v)
    prod_mat = channels.product_assignment_matrix(omega_e, ds)
    product = perturb_assignment(canon, prod_mat - canon.mat, kernel)
    report = theorem1_verify(v, SwapOnly(), rng, assignment=product, tol=args.tol)
    # The swap turns any member into its system marginal read on S.
    psi = channels.reduced_dynamics(
        consistency.sample_unitaries(SwapOnly(), ds, de, rng)[0][1], product.mat, ds, de
    )
    constant = channels.channel_from_function(
        lambda x: np.trace(x) * omega_e, ds, ds
    )
    const_dist = channels.choi_distance(psi, constant)
    summary = {
        "pass": bool(
            report["passed"]
            and report["premises_hold"]
            and const_dist <= 1e-8
            and v.dim == ds * ds * de * de - de * de + 1
            and kernel.dim == (ds * ds - 1) * (de * de - 1)
        ),
        "dim_v": v.dim,
        "dim_v0": kernel.dim,
        "constant_channel_distance": float(const_dist),
        "canonical_assignment_cp": bool(canon.cp),
        "product_assignment_cp": bool(product.cp),
        "worst_perturbation_deviation": max(
            r["perturbation_deviation"] for r in report["per_unitary"]
        ),
    }
    return {"trials": report["per_unitary"], "theorem": report, "summary": summary}


def _demo2(args) -> dict:
    """Full operator space, local product evolutions.

    The canonical assignment attaches a maximally mixed environment; the
    reduced dynamics is exactly the system-side unitary conjugation for
    every sampled product unitary, for any kernel perturbation.
    """
    ds, de = args.ds, args.de
    _check_dims(ds, de)
    rng = np.random.default_rng(args.seed)
    v = full_space(ds, de)
    kernel = kernel_tr_e(v)
    assign = canonical_assignment(v)
    per_u = []
    for i in range(args.trials):
        u_s = random_haar_unitary(ds, rng)
        u_e = random_haar_unitary(de, rng)
        psi = channels.reduced_dynamics(kron(u_s, u_e), assign.mat, ds, de)
        target = channels.channel_from_function(lambda x: u_s @ x @ dagger(u_s), ds, ds)
        dist = channels.choi_distance(psi, target)
        delta = random_kernel_perturbation(kernel, rng)
        tilted = perturb_assignment(assign, delta, kernel)
        psi_t = channels.reduced_dynamics(kron(u_s, u_e), tilted.mat, ds, de)
        per_u.append(
            {
                "trial": i,
                "cp": bool(channels.is_cp(channels.choi(psi))),
                "unitary_conjugation_distance": float(dist),
                "perturbation_deviation": channels.choi_distance(psi, psi_t),
            }
        )
    summary = {
        "pass": bool(
            all(r["cp"] for r in per_u)
            and all(r["unitary_conjugation_distance"] <= 1e-8 for r in per_u)
            and all(r["perturbation_deviation"] <= args.tol for r in per_u)
            and kernel.dim == ds * ds * (de * de - 1)
        ),
        "dim_v": v.dim,
        "dim_v0": kernel.dim,
        "canonical_assignment_cp": bool(assign.cp),
        "worst_perturbation_deviation": max(r["perturbation_deviation"] for r in per_u),
    }
    return {"trials": per_u, "summary": summary}


def cmd_demo(args) -> dict:
    if args.example == 1:
        return _demo1(args)
    return _demo2(args)


def _config_echo(args) -> dict:
    skip = {"func", "out", "verbose"}
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if k == "blocks" and v is not None:
            cfg[k] = [list(b) for b in v]
        else:
            cfg[k] = v
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpdyn",
        description="Verify complete positivity of reduced open-system dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=50):
        p.add_argument("--ds", type=int, default=2, help="system dimension")
        p.add_argument("--de", type=int, default=2, help="environment dimension")
        p.add_argument("--da", type=int, default=2, help="ancilla dimension")
        p.add_argument(
            "--blocks",
            type=_parse_blocks,
            default=((1, 2), (2, 1)),
            help="system block layout, e.g. '1x2,2x1'",
        )
        p.add_argument("--trials", type=int, default=trials)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--out", type=str, default=None, help="report output path")
        p.add_argument("--verbose", action="store_true")
        p.add_argument("--g", choices=("all", "local", "swap"), default="all")

    p = sub.add_parser("verify-family", help="CP/TP sweep over one family")
    p.add_argument("--family", choices=FAMILY_CHOICES, required=True)
    common(p)
    p.set_defaults(func=cmd_verify_family)

    p = sub.add_parser("consistency", help="subspace consistency report")
    p.add_argument(
        "--family",
        choices=FAMILY_CHOICES + ("full", "random"),
        default="markov-blocks",
    )
    p.add_argument("--span-states", type=int, default=4)
    common(p)
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("theorem1", help="end-to-end subspace/assignment check")
    p.add_argument(
        "--family",
        choices=FAMILY_CHOICES + ("full", "random"),
        default="markov-blocks",
    )
    p.add_argument("--span-states", type=int, default=4)
    common(p, trials=10)
    p.set_defaults(func=cmd_theorem1)

    p = sub.add_parser("dpi", help="data processing inequality sweeps")
    p.add_argument("--unitaries-per-state", type=int, default=10)
    p.add_argument("--search-draws", type=int, default=500)
    common(p, trials=20)
    p.set_defaults(func=cmd_dpi)

    p = sub.add_parser("demo", help="worked swap / local-product scenarios")
    p.add_argument("example", type=int, choices=(1, 2))
    common(p, trials=10)
    p.set_defaults(func=cmd_demo)

    return parser


def run(argv=None) -> tuple[dict, int]:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = int(os.environ.get(SEED_ENV_VAR, DEFAULT_SEED))
    if args.trials < 1:
        parser.error("--trials must be >= 1")
    if args.tol <= 0:
        parser.error("--tol must be positive")
    start = time.monotonic()
    body = args.func(args)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": _config_echo(args),
        **body,
        "wall_time_s": time.monotonic() - start,
    }
    report["config_hash"] = hashlib.sha256(
        json.dumps(report["config"], sort_keys=True).encode()
    ).hexdigest()
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return report, 0 if report["summary"]["pass"] else 1


def main(argv=None) -> int:
    _, code = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
