import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdlab.hilbert import (
    PAULI_X, PAULI_Z, CapacityError, KDError, haar_random_unitary, pure_density,
    random_density, random_hermitian, spectral_decompose,
)
from kdlab.nonclassicality import total_nonpositivity
from kdlab.thermo_chaos import (
    SpinChainConfig, characteristic_function, commutator_norm, crooks_ratios, jarzynski_check,
    kd_work_distribution, linear_response_work, nonpositivity_trace, otoc, otoc_from_characteristic,
    otoc_from_kd, otoc_kd, partition_function, pauli_operator, tfim_hamiltonian, thermal_state,
    tpm_distribution,
)

seeds = st.integers(0, 2**32 - 1)


def random_drive(seed, d=4):
    rng = np.random.default_rng(seed)
    return random_hermitian(d, rng), random_hermitian(d, rng), haar_random_unitary(d, rng)


def test_tpm_without_drive():
    h = random_hermitian(4, 1)
    dist = tpm_distribution(thermal_state(h, 0.7), h, h, np.eye(4))
    assert abs(dist.weight_at(0.0) - 1) < 1e-12 and abs(dist.total() - 1) < 1e-12


@pytest.mark.parametrize("seed", range(50))
def test_fluctuation_theorems(seed):
    h0, ht, u = random_drive(seed)
    beta = 0.3 + seed / 50
    lhs, rhs = jarzynski_check(h0, ht, u, beta)
    assert abs(lhs - rhs) <= 1e-10 * max(1, rhs)
    rows = crooks_ratios(h0, ht, u, beta)
    assert rows
    for _, ratio, expected in rows:
        assert abs(ratio - expected) <= 1e-8 * expected
    kd = kd_work_distribution(thermal_state(h0, beta), h0, ht, u)
    z = partition_function(ht, beta) / partition_function(h0, beta)
    assert abs(kd.expectation(lambda w: np.exp(-beta * w)) - z) < 1e-10 * max(1, z)


@given(seeds)
def test_work_distribution_moments_and_marginals(seed):
    h0, ht, u = random_drive(seed)
    rho = random_density(4, seed + 1)
    kd = kd_work_distribution(rho, h0, ht, u)
    tpm = tpm_distribution(rho, h0, ht, u)
    assert abs(kd.total() - 1) < 1e-10 and abs(tpm.total() - 1) < 1e-10
    assert np.all(tpm.weights.real >= -1e-12) and np.all(np.abs(tpm.weights.imag) < 1e-12)
    diff = np.trace(ht @ u @ rho @ u.conj().T).real - np.trace(h0 @ rho).real
    assert abs(kd.mean() - diff) < 1e-10


@given(seeds)
def test_kd_equals_tpm_for_block_diagonal_states(seed):
    h0, ht, u = random_drive(seed)
    rho = sum(np.random.default_rng(seed).uniform() * p for _, p in spectral_decompose(h0))
    rho = rho / np.trace(rho)
    kd = kd_work_distribution(rho, h0, ht, u)
    tpm = tpm_distribution(rho, h0, ht, u)
    for w, p in zip(tpm.support, tpm.weights):
        assert abs(kd.weight_at(w) - p) < 1e-12
    assert len(kd.support) == len(tpm.support)


def test_coherent_qubit_work_is_nonclassical():
    h0, ht = PAULI_Z / 2, PAULI_Z / 2
    u = np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]], dtype=complex)
    found = False
    for phase in np.linspace(0, 2 * np.pi, 17):
        rho = pure_density(np.array([1, np.exp(1j * phase)]) / np.sqrt(2))
        w = kd_work_distribution(rho, h0, ht, u).weights
        found |= bool(np.any(w.real < -1e-9) or np.any(np.abs(w.imag) > 1e-9))
    assert found


def _drive(t, tau=2.0):
    return np.sin(np.pi * t / tau) * PAULI_X


def test_linear_response_commuting_and_diagonal():
    h0 = PAULI_Z / 2
    r = linear_response_work(h0, lambda t: np.sin(np.pi * t / 2) * PAULI_Z, np.diag([0.6, 0.4]), 0.05, 2.0)
    assert abs(r.prediction) < 1e-14 and abs(r.exact) < 1e-10
    r = linear_response_work(h0, _drive, np.diag([0.6, 0.4]).astype(complex), 0.05, 2.0)
    assert abs(r.prediction) < 1e-14


def test_linear_response_scaling_split():
    rho = pure_density(np.array([np.cos(0.3), 1j * np.sin(0.3)]))
    r1 = linear_response_work(PAULI_Z / 2, _drive, rho, 1e-1, 2.0)
    r2 = linear_response_work(PAULI_Z / 2, _drive, rho, 1e-2, 2.0)
    assert abs(r1.prediction / r2.prediction - 10) < 1e-9
    assert abs(r2.prediction) > 1e-3
    ratio = abs(r1.exact - r1.prediction) / abs(r2.exact - r2.prediction)
    assert 50 <= ratio <= 200


def test_linear_response_list_protocol_and_errors():
    ts = np.linspace(0, 2.0, 41)
    proto = [(t, _drive(t)) for t in ts]
    rho = pure_density(np.array([1, 1]) / np.sqrt(2))
    a = linear_response_work(PAULI_Z / 2, proto, rho, 0.01, 2.0, n_steps=400)
    b = linear_response_work(PAULI_Z / 2, _drive, rho, 0.01, 2.0, n_steps=400)
    assert abs(a.prediction - b.prediction) < 1e-5
    with pytest.raises(KDError):
        linear_response_work(PAULI_Z / 2, lambda t: PAULI_X, rho, 0.01, 2.0)
    with pytest.raises(KDError):
        linear_response_work(PAULI_Z / 2, _drive, rho, 0.5, 2.0)


def test_tfim_hamiltonian():
    h = tfim_hamiltonian(SpinChainConfig(2, 1.0, 0.0, 0.0))
    assert np.allclose(h, np.diag([-1, 1, 1, -1]))
    with pytest.raises(CapacityError):
        SpinChainConfig(9)
    with pytest.raises(KDError):
        SpinChainConfig(3, J=0)


def test_otoc_basics():
    c = SpinChainConfig(4)
    assert abs(otoc(c, t=0.0) - 1) < 1e-12
    q = otoc_kd(c, t=0.0)
    assert abs(total_nonpositivity(q) - 1) < 1e-9
    inf = np.eye(16) / 16
    for t in np.linspace(0, 5, 7):
        assert otoc(c, inf, t).real <= 1 + 1e-10


def test_commutator_identity():
    c = SpinChainConfig(4)
    for t in np.random.default_rng(0).uniform(0, 6, 20):
        assert abs(commutator_norm(c, t=t) - 2 * (1 - otoc(c, t=t).real)) < 1e-10


def test_otoc_kd_average_and_marginals():
    c = SpinChainConfig(4)
    for t in np.linspace(0.1, 6, 20):
        q = otoc_kd(c, t=t)
        assert abs(otoc_from_kd(q) - otoc(c, t=t)) < 1e-9
        p = q.values.sum(axis=(1, 2, 3))
        rho = q.state
        born = [np.trace(P @ rho) for _, P in spectral_decompose(pauli_operator(4, 3, "Z"))]
        assert np.max(np.abs(p - born)) < 1e-10


def test_otoc_kd_negative_real_part_while_scrambling():
    c = SpinChainConfig(5, 1.0, 1.05, 0.5, 1.0)
    worst = min(otoc_kd(c, t=t).values.real.min() for t in np.linspace(0.5, 5, 10))
    assert worst < -1e-6


def test_characteristic_function():
    c = SpinChainConfig(3)
    q = otoc_kd(c, t=1.3)
    assert abs(characteristic_function(q, [0, 0, 0, 0]) - 1) < 1e-12
    h = 1e-5
    d1 = (characteristic_function(q, [h, 0, 0, 0]) - characteristic_function(q, [-h, 0, 0, 0])) / (2 * h)
    mean_v1 = np.einsum("a,abcd->", q.outcomes[0], q.values)
    assert abs(d1 - mean_v1) < 1e-8
    assert abs(otoc_from_characteristic(q) - otoc(c, t=1.3)) < 1e-5


def test_trace_commuting_evolution_and_start():
    c = SpinChainConfig(4, 1.0, 0.0, 0.0)
    tr = nonpositivity_trace(c, times=np.linspace(0, 4, 9))
    assert all(abs(r.N - 1) < 1e-9 for r in tr.rows)
    tr = nonpositivity_trace(SpinChainConfig(4), times=np.linspace(0, 4, 9))
    assert abs(tr.rows[0].N - 1) < 1e-9
    with pytest.raises(KDError):
        nonpositivity_trace(SpinChainConfig(3), times=[1.0, 0.0])


def test_trace_threads_match_serial():
    c = SpinChainConfig(4)
    ts = np.linspace(0, 3, 7)
    a, b = nonpositivity_trace(c, times=ts), nonpositivity_trace(c, times=ts, threads=3)
    assert [r.N for r in a.rows] == [r.N for r in b.rows]


def test_scrambling_interval_exceeds_integrable():
    ts = np.arange(0, 30.001, 0.1)
    scr = nonpositivity_trace(SpinChainConfig(5, 1.0, 1.05, 0.5, 1.0), times=ts, threads=4)
    integ = nonpositivity_trace(SpinChainConfig(5, 1.0, 1.05, 0.0, 1.0), times=ts, threads=4)
    assert integ.t_int is not None and scr.t_int is not None
    assert scr.t_int > integ.t_int
