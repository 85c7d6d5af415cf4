"""Command-line front end: `kdlab <command> ...` or `kdlab run scenario.json`.

Exit codes: 0 success, 1 validation error, 2 numerical self-check failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import foundations as fd
from . import metrology as met
from . import nonclassicality as nc
from . import thermo_chaos as tc
from . import weak_measurement as wm
from .hilbert import (
    PAULIS,
    KDError,
    OrthonormalBasis,
    computational_basis,
    haar_random_basis,
    haar_random_unitary,
    make_dft_basis,
    min_overlap,
    pure_density,
    qubit_basis,
    random_density,
    random_hermitian,
)
from .kd_core import extended_kd, standard_kd
from .serialization import (
    VERSION,
    dumps_json,
    kd_csv_rows,
    kd_to_json,
    load_json,
    parse_matrix,
    parse_vector,
    state_from_json,
    write_csv,
)

SCENARIO_VERSIONS = {"kdlab/1"}
SCENARIO_FIELDS = {"version", "command", "params", "seed", "output", "tolerances"}
TOLERANCE_FLAGS = {"positivity": "positivity_tol", "self_check": "self_check_tol"}


class ValidationError(KDError):
    pass


class NumericalCheckError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


# input helpers -------------------------------------------------------------------

def _state(spec: str, field="state") -> np.ndarray:
    return state_from_json(load_json(spec), field)


def _basis(spec: str, d: int | None = None, field="basis") -> OrthonormalBasis:
    s = spec.strip()
    if s.upper() in ("Z", "X", "Y"):
        return qubit_basis(s)
    if s in ("computational", "dft") or s.startswith("haar:"):
        if d is None:
            raise ValidationError(f"{field}: basis {s!r} needs a dimension")
        if s == "computational":
            return computational_basis(d)
        if s == "dft":
            return make_dft_basis(d)
        return haar_random_basis(d, int(s.split(":", 1)[1]), s)
    obj = load_json(s)
    if not isinstance(obj, dict) or "vectors" not in obj:
        raise ValidationError(f"{field}: basis file needs a 'vectors' field (columns as kets)")
    vals = obj.get("values")
    return OrthonormalBasis(parse_matrix(obj["vectors"], f"{field}.vectors"), obj.get("name", field),
                            None if vals is None else np.asarray(vals, dtype=float))


def _vector(spec: str, field: str) -> np.ndarray:
    s = spec.strip()
    if s and all(c in "0123456789" for c in s):
        v = np.zeros(len(s), dtype=complex)
        if s.count("1") != 1 or set(s) - {"0", "1"}:
            raise ValidationError(f"{field}: digit strings must be one-hot, e.g. 001")
        v[s.index("1")] = 1
        return v
    obj = load_json(s)
    v = parse_vector(obj["vector"] if isinstance(obj, dict) else obj, field)
    n = np.linalg.norm(v)
    if abs(n - 1) > 1e-10:
        raise ValidationError(f"{field} is not normalized")
    return v


def _operator(spec: str, field: str) -> np.ndarray:
    s = spec.strip()
    scale = 1.0
    if "/" in s and s.split("/")[0].upper() in PAULIS:
        s, den = s.split("/")
        scale = 1 / float(den)
    if s.upper() in PAULIS:
        return PAULIS[s.upper()] * scale
    obj = load_json(s)
    return parse_matrix(obj["matrix"] if isinstance(obj, dict) else obj, field)


def _times(spec: str) -> np.ndarray:
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ValidationError("--times must look like start:stop:step") from None
    if step <= 0 or b < a:
        raise ValidationError("--times needs step > 0 and stop >= start")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def _need_seed(args):
    if args.seed is None:
        raise ValidationError(f"{args.command}: an explicit --seed is required")
    return args.seed


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("KDLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError("KDLAB_THREADS must be an integer") from None
    return 1


def _check(ok: bool, what: str):
    if not ok:
        raise NumericalCheckError(f"self-check failed: {what}")


def _emit(args, text: str):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _table(q: np.ndarray) -> str:
    rows = ["i\\j" + "".join(f"{j:>28}" for j in range(q.shape[1]))]
    for i in range(q.shape[0]):
        cells = "".join(f"{q[i, j].real + 0.0:>+14.6g}{q[i, j].imag + 0.0:>+13.6g}j" for j in range(q.shape[1]))
        rows.append(f"{i:<3}" + cells)
    return "\n".join(rows) + "\n"


# commands --------------------------------------------------------------------------

def cmd_kd(args):
    rho = _state(args.state)
    d = rho.shape[0]
    specs = args.bases.split(",") if args.bases else [args.basis_a, args.basis_b]
    if any(s is None for s in specs):
        raise ValidationError("kd: give --basis-a and --basis-b, or --bases")
    bases = [_basis(s, d, f"basis {n}") for n, s in enumerate(specs)]
    q = standard_kd(rho, *bases) if len(bases) == 2 else extended_kd(rho, bases)
    tol = args.self_check_tol
    _check(abs(q.total() - 1) <= tol, "distribution does not sum to 1")
    _check(np.abs(q.marginal(0) - np.real(np.diag(bases[0].vectors.conj().T @ rho @ bases[0].vectors))).max() <= tol,
           "first marginal differs from the Born rule")
    if args.format == "json":
        _emit(args, dumps_json(kd_to_json(q)))
    elif args.format == "csv":
        header = [f"i{n + 1}" for n in range(q.k)] + ["re", "im"]
        _emit(args, write_csv(header, kd_csv_rows(q), args.seed, "kd"))
    else:
        if q.k != 2:
            raise ValidationError("table format needs two bases; use json or csv")
        _emit(args, _table(q.values))


def cmd_witness(args):
    rho = _state(args.state)
    d = rho.shape[0]
    A, B = _basis(args.basis_a, d, "basis-a"), _basis(args.basis_b, d, "basis-b")
    q = standard_kd(rho, A, B)
    verdict = nc.is_kd_positive(q, args.positivity_tol)
    n = nc.total_nonpositivity(q)
    _check(n >= 1 - 1e-10, "total non-positivity below 1")
    out = {
        "total_nonpositivity": n,
        "kd_positive": verdict.is_positive,
        "worst_entry": {"index": list(verdict.worst_index), "value": verdict.worst_value},
        "tolerance": verdict.tol,
        "l1_coherence_in_A": nc.l1_coherence(rho, A),
    }
    if args.coherence_restarts > 0:
        out["kd_coherence"] = nc.kd_coherence(rho, A, args.coherence_restarts, _need_seed(args))
        out["seed"] = args.seed
    _emit(args, dumps_json(out))


def cmd_geometry(args):
    d = args.dim
    A = _basis(args.basis_a, d, "basis-a")
    B = _basis(args.basis_b, d, "basis-b")
    if args.incompatibility:
        res = nc.complete_incompatibility(A, B)
        _emit(args, dumps_json({"completely_incompatible": res.completely_incompatible,
                                "witness": None if res.witness is None else
                                {"S": list(res.witness[0]), "T": list(res.witness[1])}}))
        return
    seed = _need_seed(args) if args.sampler.startswith("haar") else args.seed
    pts = nc.uncertainty_diagram(A, B, args.sampler, seed, _threads(args))
    if B.dim == A.dim and min_overlap(A, B) > 1e-12:
        _check(all(p.nAB <= d + 1 for p in pts if p.kd_positive), "KD-positive point above d+1")
    rows = [[p.nA, p.nB, int(p.kd_positive), p.state_id] for p in pts]
    _emit(args, write_csv(["n_A", "n_B", "kd_positive", "state_id"], rows, seed, "geometry"))


def cmd_weak(args):
    psi_i = _vector(args.pre, "pre")
    psi_f = _vector(args.post, "post")
    a = _operator(args.observable, "observable")
    aw = wm.weak_value(a, psi_i, psi_f)
    out = {"weak_value": aw, "postselection_overlap": abs(np.vdot(psi_f, psi_i)) ** 2}
    if args.g is not None:
        meter, p = wm.simulate_von_neumann(psi_i, a, args.g, args.sigma, psi_f)
        out.update({"g": args.g, "sigma": args.sigma, "meter_mean_position": meter.mean_position(),
                    "meter_mean_momentum": meter.mean_momentum(), "first_order_shift": args.g * aw.real,
                    "success_probability": p})
    _emit(args, dumps_json(out))


def cmd_circuit(args):
    rho = _state(args.state)
    d = rho.shape[0]
    bases = tuple(_basis(s, d, f"basis {n}") for n, s in enumerate(args.bases.split(",")))
    idx = tuple(int(x) for x in args.indices.split(","))
    spec = wm.CircuitSpec(rho, bases, idx, args.s, args.shots, args.seed)
    exact = wm.circuit_probability(spec)
    q = extended_kd(rho, bases).values[idx] if len(bases) >= 2 else np.trace(bases[0].projector(idx[0]) @ rho)
    target = (1 + (q.real if args.s == 0 else q.imag)) / 2
    _check(abs(exact - target) <= 1e-12 + args.self_check_tol, "circuit probability differs from the KD entry")
    out = {"exact": exact, "kd_entry": complex(q)}
    if args.shots > 0:
        _need_seed(args)
        est, se = wm.circuit_sample(spec)
        out.update({"estimate": est, "stderr": se, "shots": args.shots, "seed": args.seed})
    _emit(args, dumps_json(out))


def _metrology_scenario(args):
    a = _operator(args.generator, "generator")
    psi = _vector(args.psi, "psi")
    F = _basis(args.measurement, a.shape[0], "measurement")
    filt = None
    if args.filter:
        al, ph, lk = (float(x) for x in args.filter.split(","))
        filt = met.qubit_filter(al, ph, lk)
    return met.EncodingScenario(a, psi, F, filt)


def cmd_metrology(args):
    sc = _metrology_scenario(args)
    if args.sweep:
        n = args.sweep
        rows = []
        for al in np.linspace(0, np.pi, n):
            s2 = sc.with_filter(met.qubit_filter(al, np.pi, args.leak))
            try:
                ips = met.postselected_qfi(s2, args.theta)
                q = met.postselection_kd(s2, args.theta)
            except met.ZeroPostselectionError:
                continue
            rows.append([args.theta, float(al), met.fisher_information(sc, args.theta), ips,
                         float(abs(q.normalizer)), nc.total_nonpositivity(q)])
        _emit(args, write_csv(["theta", "filter_param", "I", "I_ps", "p_ps", "N_conditional"], rows,
                              args.seed, "metrology"))
        return
    I = met.fisher_information(sc, args.theta)
    Ikd = met.fisher_information_kd(sc, args.theta)
    iq = met.qfi_pure(sc, args.theta)
    _check(abs(I - Ikd) <= 1e-9, "Fisher information direct vs KD form")
    _check(I <= iq + 1e-9, "Fisher information exceeds QFI")
    out = {"theta": args.theta, "fisher": I, "fisher_kd": Ikd, "qfi": iq,
           "outcome_derivative": met.outcome_derivative(sc, args.theta)}
    if sc.filter is not None:
        rep = met.distillation_report(sc, args.theta)
        q = met.postselection_kd(sc, args.theta)
        v = nc.is_kd_positive(q, args.positivity_tol)
        _check(abs(rep.qfi_postselected - met.postselected_qfi_kd(sc, args.theta)) <= 1e-9,
               "post-selected QFI direct vs KD form")
        out.update({"qfi_postselected": rep.qfi_postselected, "p_postselection": rep.p_postselection,
                    "efficiency": rep.efficiency, "conditional_positive": v.is_positive,
                    "conditional_nonpositivity": nc.total_nonpositivity(q),
                    "spectral_gap_sq": sc.spectral_gap() ** 2})
    _emit(args, dumps_json(out))


def cmd_thermo(args):
    if args.scenario_matrices:
        obj = load_json(args.scenario_matrices)
        h0 = parse_matrix(obj["h0"], "h0")
        ht = parse_matrix(obj["htau"], "htau")
        u = parse_matrix(obj["u"], "u")
        rho = parse_matrix(obj["rho"], "rho") if "rho" in obj else tc.thermal_state(h0, args.beta)
        for name, m in (("htau", ht), ("u", u), ("rho", rho)):
            if m.shape != h0.shape:
                raise ValidationError(f"field {name!r} has shape {m.shape}, expected {h0.shape}")
    else:
        seed = _need_seed(args)
        rng = np.random.default_rng(seed)
        d = args.dim
        h0, ht = random_hermitian(d, rng), random_hermitian(d, rng)
        u = haar_random_unitary(d, rng)
        rho = random_density(d, rng) if args.coherent else tc.thermal_state(h0, args.beta)
    tpm = tc.tpm_distribution(tc.thermal_state(h0, args.beta), h0, ht, u)
    kd = tc.kd_work_distribution(rho, h0, ht, u)
    lhs, rhs = tc.jarzynski_check(h0, ht, u, args.beta)
    crooks = tc.crooks_ratios(h0, ht, u, args.beta)
    crooks_err = max((abs(r / e - 1) for _, r, e in crooks), default=0.0)
    energy = np.trace(ht @ u @ rho @ u.conj().T).real - np.trace(h0 @ rho).real
    _check(abs(lhs - rhs) <= 1e-10 * max(1, abs(rhs)), "Jarzynski equality")
    _check(crooks_err <= 1e-8, "Crooks ratio")
    _check(abs(kd.mean() - energy) <= 1e-10, "KD first moment")
    out = {"beta": args.beta, "jarzynski_lhs": lhs, "z_ratio": rhs, "crooks_max_rel_error": crooks_err,
           "kd_mean_work": kd.mean(), "energy_change": energy,
           "tpm": {"support": tpm.support, "weights": tpm.weights.real},
           "kd": {"support": kd.support, "weights": kd.weights}}
    _emit(args, dumps_json(out))


def cmd_otoc(args):
    ts = _times(args.times)
    cfg = tc.SpinChainConfig(args.n, args.j, args.g, args.h, args.beta, times=tuple(ts))
    tr = tc.nonpositivity_trace(cfg, threads=_threads(args))
    if abs(ts[0]) < 1e-15 and cfg.w_site != cfg.v_site:
        _check(abs(tr.rows[0].N - 1) <= 1e-9, "N(0) = 1")
    rows = [[r.t, r.F.real, r.F.imag, r.C, r.N] for r in tr.rows]
    _emit(args, write_csv(["t", "ReF", "ImF", "C", "N"], rows, args.seed, "otoc"))


def cmd_foundations(args):
    if args.experiment == "kcbs":
        v = _vector(args.state or "001", "state")
        comps = fd.random_completions(args.seed) if args.seed is not None else None
        rep = fd.kcbs_s_via_kd(pure_density(v), comps)
        _check(abs(rep.S_direct - rep.S_kd) <= 1e-9, "KCBS direct vs KD")
        out = {"S_direct": rep.S_direct, "S_kd": rep.S_kd, "positive": rep.positive,
               "bound_violated": rep.bound_violated}
    elif args.experiment == "lg":
        th = args.theta
        A, B, C = (fd.equatorial_basis(x) for x in (0.0, th, 2 * th))
        L = fd.lg_correlator(0, A, B, C)
        wv = fd.lg_weak_value_form(0, A, B, C)
        _check(abs(L - wv.L) <= 1e-10, "LG weak-value form")
        out = {"theta": th, "L": L, "weak_values": wv.weak_values, "anomalous": wv.anomalous}
    else:
        h = fd.mach_zehnder_histories()
        out = {f"Q({a},{b})": fd.histories_overlap(h[a], h[b])
               for a in ("H0", "H1", "H+", "H-") for b in ("H0", "H1", "H+", "H-")
               if (a in ("H0", "H1")) == (b in ("H0", "H1"))}
    _emit(args, dumps_json(out))


COMMANDS = {
    "kd": cmd_kd, "witness": cmd_witness, "geometry": cmd_geometry, "weak": cmd_weak,
    "circuit": cmd_circuit, "metrology": cmd_metrology, "thermo": cmd_thermo, "otoc": cmd_otoc,
    "foundations": cmd_foundations,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--output", "-o")
    common.add_argument("--threads", type=int)
    common.add_argument("--positivity-tol", type=float, default=1e-10)
    common.add_argument("--self-check-tol", type=float, default=1e-10)

    p = _Parser(prog="kdlab", description="Kirkwood-Dirac quasi-probability toolkit")
    p.add_argument("--version", action="version", version=f"kdlab {VERSION}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("kd", parents=[common], help="standard or extended KD distribution")
    s.add_argument("--state", required=True)
    s.add_argument("--basis-a")
    s.add_argument("--basis-b")
    s.add_argument("--bases", help="comma-separated list for the extended form")
    s.add_argument("--format", choices=["table", "json", "csv"], default="table")

    s = sub.add_parser("witness", parents=[common], help="non-positivity and coherence")
    s.add_argument("--state", required=True)
    s.add_argument("--basis-a", required=True)
    s.add_argument("--basis-b", required=True)
    s.add_argument("--coherence-restarts", type=int, default=0)

    s = sub.add_parser("geometry", parents=[common], help="uncertainty diagram or incompatibility")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--basis-a", default="computational")
    s.add_argument("--basis-b", default="dft")
    s.add_argument("--sampler", default="basis-states")
    s.add_argument("--incompatibility", action="store_true")

    s = sub.add_parser("weak", parents=[common], help="weak value and meter simulation")
    s.add_argument("--pre", required=True)
    s.add_argument("--post", required=True)
    s.add_argument("--observable", required=True)
    s.add_argument("--g", type=float)
    s.add_argument("--sigma", type=float, default=1.0)

    s = sub.add_parser("circuit", parents=[common], help="ancilla readout of a KD entry")
    s.add_argument("--state", required=True)
    s.add_argument("--bases", required=True)
    s.add_argument("--indices", required=True)
    s.add_argument("--s", type=int, choices=[0, 1], default=0)
    s.add_argument("--shots", type=int, default=0)

    s = sub.add_parser("metrology", parents=[common], help="Fisher information and post-selection")
    s.add_argument("--generator", default="Z/2")
    s.add_argument("--psi", required=True)
    s.add_argument("--measurement", default="X")
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--filter", help="qubit filter alpha,phi,leak")
    s.add_argument("--sweep", type=int, default=0, help="sweep filter angle over n points")
    s.add_argument("--leak", type=float, default=0.01)

    s = sub.add_parser("thermo", parents=[common], help="work distributions and fluctuation theorems")
    s.add_argument("--scenario-matrices", help="JSON with h0, htau, u and optional rho")
    s.add_argument("--dim", type=int, default=4)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--coherent", action="store_true")

    s = sub.add_parser("otoc", parents=[common], help="OTOC and KD non-positivity trace")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--j", type=float, default=1.0)
    s.add_argument("--g", type=float, default=1.05)
    s.add_argument("--h", type=float, default=0.5)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--times", default="0:5:0.1")

    s = sub.add_parser("foundations", parents=[common], help="KCBS, Leggett-Garg, Mach-Zehnder")
    s.add_argument("experiment", choices=["kcbs", "lg", "mz"])
    s.add_argument("--state")
    s.add_argument("--theta", type=float, default=np.pi / 3)

    s = sub.add_parser("validate", help="check a scenario file without running it")
    s.add_argument("scenario")
    s = sub.add_parser("run", help="execute a scenario file")
    s.add_argument("scenario")
    return p


def _scenario_argv(path: str) -> list[str]:
    """Validate a scenario file and translate it into command-line arguments."""
    sc = load_json(path)
    if not isinstance(sc, dict):
        raise ValidationError("scenario must be a JSON object")
    unknown = set(sc) - SCENARIO_FIELDS
    if unknown:
        raise ValidationError(f"unknown scenario field(s): {', '.join(sorted(unknown))}")
    if sc.get("version") not in SCENARIO_VERSIONS:
        raise ValidationError(f"unsupported version {sc.get('version')!r}; expected one of {sorted(SCENARIO_VERSIONS)}")
    cmd = sc.get("command")
    if cmd not in COMMANDS:
        raise ValidationError(f"unknown command {cmd!r}")
    argv = [cmd]
    params = sc.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError("params must be an object")
    params = dict(params)
    if cmd == "foundations":
        argv.append(str(params.pop("experiment", "kcbs")))
    for key, val in params.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif isinstance(val, (dict, list)):
            _validate_inline(key, val)
            argv += [flag, dumps_json(val)]
        else:
            argv += [flag, str(val)]
    if sc.get("seed") is not None:
        argv += ["--seed", str(int(sc["seed"]))]
    if sc.get("output"):
        argv += ["--output", str(sc["output"])]
    for k, v in (sc.get("tolerances") or {}).items():
        if k not in TOLERANCE_FLAGS:
            raise ValidationError(f"unknown tolerance {k!r}; known: {sorted(TOLERANCE_FLAGS)}")
        argv += ["--" + TOLERANCE_FLAGS[k].replace("_", "-"), str(float(v))]
    build_parser().parse_args(argv)
    return argv


def _validate_inline(key, val):
    if key == "state":
        state_from_json(val, "params.state")
    elif key == "scenario_matrices":
        if not isinstance(val, dict):
            raise ValidationError("params.scenario_matrices must be an object")
        mats = {k: parse_matrix(v, f"params.scenario_matrices.{k}") for k, v in val.items()}
        shapes = {m.shape for m in mats.values()}
        if len(shapes) > 1:
            ref = mats.get("h0", next(iter(mats.values()))).shape
            bad = [k for k, m in mats.items() if m.shape != ref]
            raise ValidationError(f"field params.scenario_matrices.{bad[0]} has the wrong dimension")


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "validate":
            _scenario_argv(args.scenario)
            sys.stdout.write("ok\n")
            return 0
        if args.command == "run":
            args = build_parser().parse_args(_scenario_argv(args.scenario))
        COMMANDS[args.command](args)
        return 0
    except NumericalCheckError as exc:
        sys.stderr.write(f"kdlab: {exc}\n")
        return 2
    except (KDError, ValueError) as exc:
        sys.stderr.write(f"kdlab: error: {exc}\n")
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
