import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpdyn.channels import (
    ChannelMap,
    KrausSet,
    apply_dilation,
    channel_from_choi,
    channel_from_function,
    channel_from_kraus,
    choi,
    choi_distance,
    is_cp,
    is_hermitian_preserving,
    is_tp,
    is_tp_on_domain,
    kraus_classical_quantum,
    kraus_factorized,
    kraus_from_choi,
    product_assignment_matrix,
    reduced_dynamics,
    stinespring,
    trace_out_env_matrix,
    verify_fixed_point,
)
from cpdyn.tensor import (
    ad_u,
    kron,
    min_eigenvalue,
    partial_trace,
    random_density,
    random_haar_unitary,
    random_hermitian,
    vec,
)


def identity_channel(d):
    return channel_from_function(lambda x: x, d, d)


def transpose_channel(d):
    return channel_from_function(lambda x: x.T, d, d)


def depolarizing_channel(d, p):
    return channel_from_function(
        lambda x: (1 - p) * x + p * np.trace(x) * np.eye(d) / d, d, d
    )


def test_channel_matrix_column_convention():
    # Column i*d+j of the identity channel is vec(|i><j|) itself.
    c = identity_channel(2)
    assert np.allclose(c.mat, np.eye(4))


def test_channel_apply_matches_function(rng):
    d = 3
    u = random_haar_unitary(d, rng)
    c = channel_from_function(lambda x: u @ x @ u.conj().T, d, d)
    x = random_hermitian(d, rng)
    assert np.allclose(c.apply(x), u @ x @ u.conj().T)


def test_choi_of_identity_is_maximally_entangled():
    # Oracle: C = sum_ij |ii><jj|, a rank-one matrix of trace d.
    ch = choi(identity_channel(2))
    phi = np.zeros(4)
    phi[0] = phi[3] = 1.0
    assert np.allclose(ch, np.outer(phi, phi))


def test_choi_channel_round_trip(rng):
    for d_in, d_out in [(2, 2), (2, 3), (3, 2)]:
        m = rng.normal(size=(d_out**2, d_in**2)) + 1j * rng.normal(
            size=(d_out**2, d_in**2)
        )
        c = channel_from_choi(choi(ChannelMap(d_in, d_out, m)), d_in, d_out)
        assert np.allclose(c.mat, m)


def test_transpose_map_is_positive_but_not_cp():
    c = transpose_channel(2)
    ch = choi(c)
    assert is_tp(c)
    assert is_hermitian_preserving(c)
    assert not is_cp(ch)
    # Oracle: the transpose Choi is the swap operator, min eigenvalue -1.
    assert abs(min_eigenvalue(ch) + 1.0) < 1e-12


def test_depolarizing_is_cp_tp():
    for p in (0.0, 0.3, 1.0):
        c = depolarizing_channel(3, p)
        assert is_cp(choi(c))
        assert is_tp(c)


def test_kraus_from_choi_reconstructs_channel(rng):
    d = 2
    u = random_haar_unitary(d * d, rng)
    omega = random_density(d, d, rng)
    c = reduced_dynamics(u, product_assignment_matrix(omega, d), d, d)
    k = kraus_from_choi(choi(c), d, d)
    assert k.all_positive
    rebuilt = channel_from_kraus(k, d, d)
    assert choi_distance(c, rebuilt) < 1e-10
    x = random_hermitian(d, rng)
    assert np.allclose(k.apply(x), c.apply(x))
    assert np.linalg.norm(k.closure() - np.eye(d)) < 1e-10


def test_kraus_from_choi_signed_for_transpose():
    k = kraus_from_choi(choi(transpose_channel(2)), 2, 2)
    assert not k.all_positive
    assert min(k.coefficients) < 0
    with pytest.raises(ValueError):
        k.positive_operators()
    rebuilt = channel_from_kraus(k, 2, 2)
    assert choi_distance(transpose_channel(2), rebuilt) < 1e-10


def test_kraus_from_choi_rejects_non_hermitian():
    with pytest.raises(ValueError):
        kraus_from_choi(np.array([[0.0, 1.0], [0.0, 0.0]]), 1, 1)


def test_trace_out_env_matrix_matches_partial_trace(rng):
    for d_s, d_e in [(2, 2), (2, 3), (3, 2)]:
        t = trace_out_env_matrix(d_s, d_e)
        x = random_hermitian(d_s * d_e, rng)
        out = (t @ vec(x)).reshape(d_s, d_s)
        assert np.allclose(out, partial_trace(x, (d_s, d_e), keep=(0,)))


def test_reduced_dynamics_matches_direct_evaluation(rng):
    d_s = d_e = 2
    omega = random_density(d_e, d_e, rng)
    u = random_haar_unitary(d_s * d_e, rng)
    c = reduced_dynamics(u, product_assignment_matrix(omega, d_s), d_s, d_e)
    rho = random_density(d_s, d_s, rng)
    direct = partial_trace(ad_u(u, kron(rho, omega)), (d_s, d_e), keep=(0,))
    assert np.allclose(c.apply(rho), direct)
    with pytest.raises(ValueError):
        reduced_dynamics(np.eye(3), product_assignment_matrix(omega, d_s), d_s, d_e)


def test_fixed_env_kraus_construction_agrees_with_composition(rng):
    for d_s, d_e in [(2, 2), (3, 3)]:
        omega = random_density(d_e, d_e, rng)
        u = random_haar_unitary(d_s * d_e, rng)
        k = kraus_factorized(u, omega, d_s, d_e)
        assert k.all_positive
        assert np.linalg.norm(k.closure() - np.eye(d_s)) < 1e-10
        built = channel_from_kraus(k, d_s, d_s)
        via = reduced_dynamics(u, product_assignment_matrix(omega, d_s), d_s, d_e)
        assert choi_distance(built, via) < 1e-9


def test_fixed_env_kraus_drops_zero_eigenvalues(rng):
    omega = np.diag([1.0, 0.0]).astype(complex)  # pure environment
    u = random_haar_unitary(4, rng)
    k = kraus_factorized(u, omega, 2, 2)
    assert len(k.operators) == 2  # only d_e operators survive


def test_classical_quantum_kraus_agrees_on_basis_diagonal_states(rng):
    d_s = d_e = 2
    basis = random_haar_unitary(d_s, rng)
    omegas = [random_density(d_e, d_e, rng) for _ in range(d_s)]
    u = random_haar_unitary(d_s * d_e, rng)
    k = kraus_classical_quantum(u, basis, omegas, d_s, d_e)
    assert k.all_positive
    p = rng.dirichlet(np.ones(d_s))
    rho = sum(
        p[i] * np.outer(basis[:, i], basis[:, i].conj()) for i in range(d_s)
    )
    joint = sum(
        p[i] * kron(np.outer(basis[:, i], basis[:, i].conj()), omegas[i])
        for i in range(d_s)
    )
    direct = partial_trace(ad_u(u, joint), (d_s, d_e), keep=(0,))
    assert np.linalg.norm(k.apply(rho) - direct) < 1e-10


def test_choi_distance_basics(rng):
    c = depolarizing_channel(2, 0.5)
    assert choi_distance(c, c) == 0.0
    assert choi_distance(identity_channel(2), transpose_channel(2)) > 1.0


def test_stinespring_dilation_reproduces_channel(rng):
    d = 2
    omega = random_density(d, d, rng)
    u = random_haar_unitary(d * d, rng)
    c = reduced_dynamics(u, product_assignment_matrix(omega, d), d, d)
    k = kraus_from_choi(choi(c), d, d)
    dil = stinespring(k, d, d)
    v = dil.unitary
    assert np.linalg.norm(v @ v.conj().T - np.eye(v.shape[0])) < 1e-9
    x = random_hermitian(d, rng)
    assert np.linalg.norm(apply_dilation(dil, x) - c.apply(x)) < 1e-9


def test_stinespring_rejects_signed_and_non_tp_sets():
    signed = kraus_from_choi(choi(transpose_channel(2)), 2, 2)
    with pytest.raises(ValueError):
        stinespring(signed, 2, 2)
    shrinking = KrausSet((1.0,), (0.5 * np.eye(2),), all_positive=True)
    with pytest.raises(ValueError):
        stinespring(shrinking, 2, 2)


def test_is_tp_on_domain(rng):
    d_s = d_e = 2
    omega = random_density(d_e, d_e, rng)
    assign = product_assignment_matrix(omega, d_s)
    c = reduced_dynamics(random_haar_unitary(4, rng), assign, d_s, d_e)
    assert is_tp_on_domain(c, np.eye(d_s * d_s))
    # Halving the map breaks trace preservation on the full domain but keeps
    # it on the trivial one.
    half = reduced_dynamics(np.eye(4), 0.5 * assign, d_s, d_e)
    assert not is_tp_on_domain(half, np.eye(d_s * d_s))
    assert is_tp_on_domain(half, np.zeros((d_s * d_s, d_s * d_s)))


def test_verify_fixed_point_product_assignment(rng):
    d_s, d_e = 2, 3
    assign = product_assignment_matrix(random_density(d_e, d_e, rng), d_s)
    samples = [random_density(d_s, d_s, rng) for _ in range(20)]
    assert verify_fixed_point(assign, d_s, d_e, samples) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.0, 1.0))
def test_random_unitary_reduction_is_cp_tp(seed, p):
    r = np.random.default_rng(seed)
    d = 2
    omega = (1 - p) * random_density(d, d, r) + p * np.eye(d) / d
    u = random_haar_unitary(d * d, r)
    c = reduced_dynamics(u, product_assignment_matrix(omega, d), d, d)
    assert is_cp(choi(c))
    assert is_tp(c)
