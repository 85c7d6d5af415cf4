"""Acceptance gate: one PASS/FAIL line per criterion.

Run with `pytest tests/test_acceptance.py -s` or `python3 tests/test_acceptance.py`.
Each check returns (passed, detail); the pytest wrapper prints the line and
asserts the verdict.
"""
import itertools
import time

import numpy as np
import pytest

from kdlab.hilbert import (
    PAULI_X, PAULI_Z, OrthonormalBasis, Povm, computational_basis, haar_random_basis,
    haar_random_state, haar_random_unitary, make_dft_basis, min_overlap, pure_density,
    qubit_basis, random_density, random_hermitian, spectral_decompose,
)
from kdlab.kd_core import (
    extended_kd, kd_symbol, overlap_from_symbol, povm_kd, reconstruct_state, standard_kd,
)
from kdlab.nonclassicality import (
    complete_incompatibility, is_kd_positive, maximize_nonpositivity,
    positivity_polytope_membership, support_uncertainty, total_nonpositivity,
)
from kdlab.weak_measurement import (
    CircuitSpec, circuit_probability, circuit_sample, simulate_von_neumann, weak_value,
)
from kdlab import metrology as met
from kdlab import thermo_chaos as tc
from kdlab import foundations as fd


def _born(rho, basis):
    return np.real(np.einsum("ai,ab,bi->i", basis.vectors.conj(), rho, basis.vectors))


def ac01_normalization_marginals():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(2, 5))
        rho = random_density(d, rng)
        bases = [haar_random_basis(d, rng) for _ in range(k)]
        q = extended_kd(rho, bases).values
        worst = max(worst, abs(q.sum() - 1))
        for axis, b in enumerate(bases):
            other = tuple(a for a in range(k) if a != axis)
            worst = max(worst, np.abs(q.sum(axis=other) - _born(rho, b)).max())
    return worst < 1e-10, f"max deviation {worst:.2e} over 1000 instances"


def ac02_reconstruction():
    rng = np.random.default_rng(102)
    worst = 0.0
    done = 0
    while done < 100:
        d = int(rng.integers(2, 9))
        A, B = haar_random_basis(d, rng), haar_random_basis(d, rng)
        if min_overlap(A, B) <= 1e-6:
            continue
        rho = random_density(d, rng)
        worst = max(worst, np.linalg.norm(reconstruct_state(standard_kd(rho, A, B), A, B) - rho))
        done += 1
    return worst < 1e-9, f"max Frobenius error {worst:.2e}"


def ac03_overlap_formula():
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 9))
        A, B = haar_random_basis(d, rng), haar_random_basis(d, rng)
        rho = random_density(d, rng)
        C = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        direct = np.trace(C.conj().T @ rho)
        worst = max(worst, abs(direct - overlap_from_symbol(kd_symbol(C, A, B), standard_kd(rho, A, B))))
    return worst < 1e-9, f"max deviation {worst:.2e}"


def ac04_commuting_positivity():
    rng = np.random.default_rng(104)
    worst_re, worst_im = 0.0, 0.0
    for _ in range(100):
        d = int(rng.integers(2, 7))
        k = int(rng.integers(2, 5))
        u = haar_random_unitary(d, rng)
        povms = []
        for _ in range(k):
            n = int(rng.integers(2, d + 2))
            w = rng.dirichlet(np.ones(n), size=d).T  # n outcomes, columns sum to 1
            povms.append(Povm(tuple(u @ np.diag(x) @ u.conj().T for x in w)))
        q = povm_kd(random_density(d, rng), povms).values
        worst_re = min(worst_re, q.real.min())
        worst_im = max(worst_im, np.abs(q.imag).max())
    return worst_re >= -1e-12 and worst_im <= 1e-12, f"min Re {worst_re:.2e}, max |Im| {worst_im:.2e}"


def ac05_max_nonpositivity():
    n2, _ = maximize_nonpositivity([qubit_basis("Z"), qubit_basis("X")], seed=5)
    n3, _ = maximize_nonpositivity([computational_basis(3), make_dft_basis(3)], seed=5)
    chirp = np.exp(2j * np.pi * np.arange(3) ** 2 / 3) / np.sqrt(3)
    n3c = total_nonpositivity(standard_kd(pure_density(chirp), computational_basis(3), make_dft_basis(3)))
    n_chain, _ = maximize_nonpositivity([qubit_basis("Z"), qubit_basis("X"), qubit_basis("Y")], seed=5)
    ok = (abs(n2 - np.sqrt(2)) < 1e-6 and abs(n3 - np.sqrt(3)) < 1e-6 and abs(n3c - np.sqrt(3)) < 1e-6
          and abs(n_chain - 2) < 1e-4)
    return ok, f"d=2 {n2:.9f}, d=3 {n3:.9f} (chirp {n3c:.9f}), Z-X-Y chain {n_chain:.7f}"


def ac06_qubit_example():
    psi = np.array([np.cos(np.pi / 8), np.sin(np.pi / 8)])
    q = standard_kd(pure_density(psi), qubit_basis("Z"), qubit_basis("X"))
    target = np.array([[0.60355, 0.25], [0.25, -0.10355]])
    err = np.abs(q.values - target).max()
    n = total_nonpositivity(q)
    return err < 1e-5 and abs(n - 1.20711) < 1e-5, f"max entry error {err:.2e}, N = {n:.6f}"


def ac07_circuit():
    rng = np.random.default_rng(107)
    worst = 0.0
    worst_z = 0.0
    for d in (2, 3, 4):
        for k in (1, 2, 3):
            rho = random_density(d, rng)
            bases = [haar_random_basis(d, rng) for _ in range(k)]
            q = (extended_kd(rho, bases).values if k > 1 else
                 povm_kd(rho, [Povm.from_basis(bases[0])]).values)
            for idx in itertools.product(range(d), repeat=k):
                for s in (0, 1):
                    part = q[idx].real if s == 0 else q[idx].imag
                    worst = max(worst, abs(circuit_probability(CircuitSpec(rho, tuple(bases), idx, s)) - (1 + part) / 2))
            for n in range(3):
                idx = tuple(int(x) for x in rng.integers(0, d, k))
                spec = CircuitSpec(rho, tuple(bases), idx, n % 2, shots=100_000, seed=1000 * d + 10 * k + n)
                p = circuit_probability(spec)
                est, _ = circuit_sample(spec)
                worst_z = max(worst_z, abs(est - p) / np.sqrt(max(p * (1 - p), 1e-300) / spec.shots))
    return worst < 1e-12 and worst_z < 5, f"exact max error {worst:.2e}; sampled max {worst_z:.2f} sigma"


def _meter_relative_error(g):
    psi = np.array([np.cos(np.pi / 8), np.sin(np.pi / 8)])
    post = np.array([1, -1]) / np.sqrt(2)
    proj = np.diag([1.0, 0.0])
    aw = weak_value(proj, psi, post)
    meter, _ = simulate_von_neumann(psi, proj, g, 1.0, post)
    return abs(meter.mean_position() / g - aw.real), abs(meter.mean_position() - g * aw.real)


def ac08_weak_meter():
    e2, a2 = _meter_relative_error(1e-2)
    e3, a3 = _meter_relative_error(1e-3)
    ratio = e2 / e3
    return 50 <= ratio <= 200, (f"relative-error ratio {ratio:.1f} (g=1e-2: {e2:.2e}, g=1e-3: {e3:.2e}); "
                                f"absolute-error ratio {a2 / a3:.0f}")


def ac09_metrology():
    rng = np.random.default_rng(109)
    fd_err = fish_err = ps_err = 0.0
    bound_ok = True
    for _ in range(100):
        d = int(rng.integers(2, 4))
        f = random_density(d, rng)
        sc = met.EncodingScenario(random_hermitian(d, rng), haar_random_state(d, rng),
                                  haar_random_basis(d, rng), f / np.linalg.eigvalsh(f)[-1])
        th = float(rng.uniform(-3, 3))
        h = 1e-5
        fdiff = (met.outcome_probabilities(sc, th + h) - met.outcome_probabilities(sc, th - h)) / (2 * h)
        fd_err = max(fd_err, np.abs(met.outcome_derivative(sc, th) - fdiff).max())
        fish_err = max(fish_err, abs(met.fisher_information(sc, th) - met.fisher_information_kd(sc, th)))
        ips = met.postselected_qfi(sc, th)
        ps_err = max(ps_err, abs(ips - met.postselected_qfi_kd(sc, th)))
        if is_kd_positive(met.postselection_kd(sc, th), 1e-10).is_positive:
            bound_ok &= ips <= sc.spectral_gap() ** 2 + 1e-9
    base = met.EncodingScenario(PAULI_Z / 2, np.array([1, 1]) / np.sqrt(2), qubit_basis("X"))
    found = None
    for alpha in np.linspace(0, np.pi, 61):
        for leak in (0.1, 0.01):
            sc = base.with_filter(met.qubit_filter(alpha, np.pi, leak))
            try:
                ips = met.postselected_qfi(sc, 0.0)
            except met.ZeroPostselectionError:
                continue
            if ips > sc.spectral_gap() ** 2 + 1e-6 and (found is None or ips > found[0]):
                q = met.postselection_kd(sc, 0.0)
                found = (ips, alpha, leak, abs(q.normalizer), total_nonpositivity(q),
                         is_kd_positive(q, 1e-10).is_positive)
    anomalous_ok = found is not None and not found[5]
    ok = fd_err < 1e-6 and fish_err < 1e-9 and ps_err < 1e-9 and bound_ok and anomalous_ok
    extra = ("none found" if found is None else
             f"I_ps={found[0]:.3g} > (Δa)²=1 at alpha={found[1]:.3f}, leak={found[2]}, p={found[3]:.3g}, N={found[4]:.3g}")
    return ok, (f"finite-diff {fd_err:.1e}, Fisher forms {fish_err:.1e}, post-selected forms {ps_err:.1e}, "
                f"positive-case bound {'held' if bound_ok else 'VIOLATED'}; anomalous filter: {extra}")


def ac10_thermodynamics():
    rng = np.random.default_rng(110)
    jz = cr = mom = blk = 0.0
    for _ in range(50):
        h0, ht, u = random_hermitian(4, rng), random_hermitian(4, rng), haar_random_unitary(4, rng)
        beta = float(rng.uniform(0.2, 2))
        lhs, rhs = tc.jarzynski_check(h0, ht, u, beta)
        jz = max(jz, abs(lhs - rhs) / max(1, rhs))
        cr = max([cr] + [abs(r / e - 1) for _, r, e in tc.crooks_ratios(h0, ht, u, beta)])
        rho = random_density(4, rng)
        kd = tc.kd_work_distribution(rho, h0, ht, u)
        energy = np.trace(ht @ u @ rho @ u.conj().T).real - np.trace(h0 @ rho).real
        mom = max(mom, abs(kd.mean() - energy))
        block = sum(float(rng.uniform()) * p for _, p in spectral_decompose(h0))
        block = block / np.trace(block)
        kdb = tc.kd_work_distribution(block, h0, ht, u)
        tpm = tc.tpm_distribution(block, h0, ht, u)
        blk = max([blk] + [abs(kdb.weight_at(w) - p) for w, p in zip(tpm.support, tpm.weights)])
    drive = lambda t: np.sin(np.pi * t / 2.0) * PAULI_X
    rho = pure_density(np.array([np.cos(0.3), 1j * np.sin(0.3)]))
    r1 = tc.linear_response_work(PAULI_Z / 2, drive, rho, 1e-1, 2.0)
    r2 = tc.linear_response_work(PAULI_Z / 2, drive, rho, 1e-2, 2.0)
    lin = r1.prediction / r2.prediction
    quad = abs(r1.exact - r1.prediction) / abs(r2.exact - r2.prediction)
    ok = jz < 1e-10 and cr < 1e-8 and mom < 1e-10 and blk < 1e-12 and abs(lin - 10) < 1e-9 and 50 <= quad <= 200
    return ok, (f"Jarzynski {jz:.1e}, Crooks {cr:.1e}, first moment {mom:.1e}, block-diagonal {blk:.1e}; "
                f"linear response: prediction ratio {lin:.6f}, remainder ratio {quad:.1f}")


def ac11_otoc():
    c4 = tc.SpinChainConfig(4)
    avg = max(abs(tc.otoc_from_kd(tc.otoc_kd(c4, t=t)) - tc.otoc(c4, t=t)) for t in np.linspace(0, 6, 20))
    c3 = tc.SpinChainConfig(3)
    char = max(abs(tc.otoc_from_characteristic(tc.otoc_kd(c3, t=t)) - tc.otoc(c3, t=t)) for t in (0.0, 0.7, 1.9))
    n0 = total_nonpositivity(tc.otoc_kd(c4, t=0.0))
    ts = np.arange(0, 30.001, 0.1)
    scr = tc.nonpositivity_trace(tc.SpinChainConfig(5, 1.0, 1.05, 0.5, 1.0), times=ts, threads=4)
    integ = tc.nonpositivity_trace(tc.SpinChainConfig(5, 1.0, 1.05, 0.0, 1.0), times=ts, threads=4)
    order = scr.t_int is not None and integ.t_int is not None and scr.t_int > integ.t_int
    fmt = lambda tr: "none" if tr.t_int is None else f"{tr.t_int:.1f}{' (censored, lower bound)' if tr.censored else ''}"
    ok = avg < 1e-9 and char < 1e-5 and abs(n0 - 1) < 1e-9 and order
    return ok, (f"KD average {avg:.1e}, characteristic {char:.1e}, N(0)-1 {abs(n0 - 1):.1e}; "
                f"t_int scrambling {fmt(scr)} vs integrable {fmt(integ)}")


def ac12_foundations():
    h = fd.mach_zehnder_histories()
    mz = max(abs(fd.histories_overlap(h["H0"], h["H1"]) - 0.25), abs(fd.histories_overlap(h["H+"], h["H-"])),
             abs(fd.histories_overlap(h["H+"], h["H+"]) - 1))
    A, B, C = (fd.equatorial_basis(x) for x in (0.0, np.pi / 3, 2 * np.pi / 3))
    grid = np.linspace(0, np.pi, 721)
    lgs = [fd.lg_correlator(0, fd.equatorial_basis(0.0), fd.equatorial_basis(t), fd.equatorial_basis(2 * t)) for t in grid]
    L = fd.lg_correlator(0, A, B, C)
    bw = fd.lg_weak_value_form(0, A, B, C).weak_values
    rho = pure_density([0, 0, 1])
    reps = [fd.kcbs_s_via_kd(rho)] + [fd.kcbs_s_via_kd(rho, fd.random_completions(s)) for s in range(3)]
    target = 5 - 4 * np.sqrt(5)
    s_err = abs(reps[0].S_direct - target)
    inv = max(abs(r.S_kd - reps[0].S_kd) for r in reps)
    dk = max(abs(r.S_kd - r.S_direct) for r in reps)
    lg_ok = abs(L - 1.5) < 1e-12 and abs(max(lgs) - 1.5) < 1e-9 and np.nanmax(bw.real) > 1
    ok = mz < 1e-12 and lg_ok and s_err < 1e-9 and inv < 1e-9 and dk < 1e-9
    return ok, (f"MZ {mz:.1e}; LG max {max(lgs):.9f}, Re B_w {np.nanmax(bw.real):.4f}; "
                f"KCBS S {reps[0].S_direct:.9f}, completion spread {inv:.1e}, direct-vs-KD {dk:.1e}")


def ac13_geometry():
    rng = np.random.default_rng(113)
    sat = True
    for d in (3, 4, 6):
        A, B = computational_basis(d), haar_random_basis(d, rng)
        for basis in (A, B):
            for i in range(d):
                p = support_uncertainty(basis.vector(i), A, B)
                sat &= p.nAB == d + 1 and p.kd_positive
    positives = {}
    members_ok = True
    for d in (3, 5, 7):
        A, F = computational_basis(d), make_dft_basis(d)
        u = F.vectors
        count = 0
        for _ in range(10_000):
            psi = haar_random_state(d, rng)
            q = np.conj(u) * psi[:, None] * (psi.conj() @ u)[None, :]
            if is_kd_positive(q, 1e-10).is_positive:
                count += 1
        positives[d] = count
        for _ in range(200):
            w = rng.dirichlet(np.ones(2 * d))
            rho = sum(w[i] * A.projector(i) for i in range(d)) + sum(w[d + j] * F.projector(j) for j in range(d))
            members_ok &= positivity_polytope_membership(rho, A, F).member
            members_ok &= is_kd_positive(standard_kd(rho, A, F), 1e-10).is_positive
    r3 = complete_incompatibility(computational_basis(3), make_dft_basis(3))
    r4 = complete_incompatibility(computational_basis(4), make_dft_basis(4))
    ok = sat and all(v == 0 for v in positives.values()) and members_ok and r3.completely_incompatible \
        and not r4.completely_incompatible and r4.witness is not None
    return ok, (f"basis-state saturation {'ok' if sat else 'FAILED'}; KD-positive Haar states {positives}; "
                f"polytope members positive {'ok' if members_ok else 'FAILED'}; "
                f"DFT3 incompatible {r3.completely_incompatible}, DFT4 witness {r4.witness}")


CRITERIA = [
    (1, "normalization and Born marginals", ac01_normalization_marginals, 30),
    (2, "reconstruction round trip", ac02_reconstruction, 10),
    (3, "overlap formula", ac03_overlap_formula, None),
    (4, "commuting-POVM positivity", ac04_commuting_positivity, None),
    (5, "maximal non-positivity", ac05_max_nonpositivity, 120),
    (6, "qubit worked example", ac06_qubit_example, None),
    (7, "circuit equivalence", ac07_circuit, None),
    (8, "weak-value meter scaling", ac08_weak_meter, None),
    (9, "metrology identities", ac09_metrology, None),
    (10, "thermodynamics", ac10_thermodynamics, None),
    (11, "OTOC", ac11_otoc, None),
    (12, "foundations", ac12_foundations, None),
    (13, "geometry", ac13_geometry, 300),
]


def evaluate(number, title, check, budget):
    t0 = time.perf_counter()
    passed, detail = check()
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        passed = False
        detail += f"; runtime {dt:.1f}s exceeds {budget}s"
    line = f"AC{number:02d} {'PASS' if passed else 'FAIL'}  {title}: {detail} [{dt:.2f}s]"
    return bool(passed), line


@pytest.mark.parametrize("number,title,check,budget", CRITERIA, ids=[f"AC{c[0]:02d}" for c in CRITERIA])
def test_acceptance(number, title, check, budget, capsys):
    passed, line = evaluate(number, title, check, budget)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


if __name__ == "__main__":
    results = [evaluate(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(p for p, _ in results) else 1)
