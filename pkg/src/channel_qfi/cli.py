"""Command-line front end.

Channels come in as JSON documents, either explicit Kraus matrices with
their derivatives or a named builtin with parameters. Reports go out as
deterministic JSON (sorted keys, no timestamps, matrices as row-major
[re, im] pairs); sweep presets emit CSV with 12-significant-digit
floats. Exit codes: 0 success, 2 bad input, 3 mathematically
inapplicable request, 4 solver trouble, 1 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import json
import multiprocessing
import os
import sys

import numpy as np

from . import catalog, dephasing, qec, qfi
from .channel import TAU_HNKS, ParamChannel, hnks, param_channel
from .errors import DomainError, InputError, SolverError

SCHEMA = 1
VERSION = "0.1.0"

BUILTINS = ("dephasing", "depolarizing", "amplitude_damping", "pauli",
            "interferometer", "unitary")


# ---------------------------------------------------------------------------
# channel documents
# ---------------------------------------------------------------------------

def _mat_to_json(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in M]


def _mat_from_json(obj, name: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} is not a numeric matrix: {exc}")
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InputError(f"{name} must be a matrix of [re, im] pairs, "
                         f"got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _rotate_z(channel: ParamChannel, omega: float) -> ParamChannel:
    """Precompose a qubit channel with the z rotation at the given angle;
    the derivative convention (rotation first) commutes through."""
    U = np.diag([np.exp(-0.5j * omega), np.exp(0.5j * omega)])
    return param_channel([K @ U for K in channel.kraus],
                         [dK @ U for dK in channel.dkraus],
                         label=channel.label)


def _builtin_channel(name: str, params: dict, omega) -> ParamChannel:
    params = dict(params or {})
    try:
        if name == "dephasing":
            if omega is not None:
                params["phi"] = float(omega)
            return dephasing.dephasing_channel(dephasing.DephasingParams(**params))
        if name == "unitary":
            return dephasing.dephasing_channel(dephasing.DephasingParams(
                p=0.0, phi=float(omega or 0.0), dp=0.0,
                dphi=float(params.get("dphi", 1.0))))
        if name == "depolarizing":
            ch = catalog.depolarizing_channel(catalog.DepolarizingParams(**params))
            return _rotate_z(ch, float(omega)) if omega else ch
        if name == "amplitude_damping":
            ch = catalog.ad_channel(**params)
            return _rotate_z(ch, float(omega)) if omega else ch
        if name == "pauli":
            return catalog.pauli_channel(params["probs"],
                                         params.get("dprobs"))
        if name == "interferometer":
            return catalog.interferometer_channel(
                int(params["M"]), float(params["p"]), float(omega or 0.0))
    except KeyError as exc:
        raise InputError(f"builtin {name!r} is missing parameter {exc}")
    except TypeError as exc:
        raise InputError(f"bad parameters for builtin {name!r}: {exc}")
    raise InputError(f"unknown builtin {name!r}; choose from "
                     + ", ".join(BUILTINS))


def channel_from_document(doc) -> ParamChannel:
    if not isinstance(doc, dict):
        raise InputError("channel document must be a JSON object")
    if "builtin" in doc:
        return _builtin_channel(str(doc["builtin"]), doc.get("params"),
                                doc.get("omega"))
    for key in ("kraus", "dkraus"):
        if key not in doc:
            raise InputError(f"channel document lacks {key!r} "
                             "(or a 'builtin' name)")
    kraus = [_mat_from_json(m, f"kraus[{i}]")
             for i, m in enumerate(doc["kraus"])]
    dkraus = [_mat_from_json(m, f"dkraus[{i}]")
              for i, m in enumerate(doc["dkraus"])]
    if len(kraus) != len(dkraus):
        raise InputError("kraus and dkraus lists differ in length")
    d_out = int(doc.get("d_out", kraus[0].shape[0]))
    d_in = int(doc.get("d_in", kraus[0].shape[1]))
    for i, K in enumerate(kraus):
        if K.shape != (d_out, d_in):
            raise InputError(f"kraus[{i}] has shape {K.shape}, "
                             f"expected ({d_out}, {d_in})")
    return param_channel(kraus, dkraus, label=str(doc.get("label", "")))


def load_channel(path: str) -> ParamChannel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read channel file: {exc}")
    except json.JSONDecodeError as exc:
        raise InputError(f"channel file is not valid JSON: {exc}")
    return channel_from_document(doc)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _require_finite(node, path="report"):
    if isinstance(node, dict):
        for k, v in node.items():
            _require_finite(v, f"{path}.{k}")
    elif isinstance(node, (list, tuple)):
        for i, v in enumerate(node):
            _require_finite(v, f"{path}[{i}]")
    elif isinstance(node, float) and not np.isfinite(node):
        raise SolverError(f"non-finite value at {path}")


def _emit(report: dict) -> None:
    _require_finite(report)
    print(json.dumps(report, sort_keys=True, indent=2))


def _base_report(command: str, args) -> dict:
    return {
        "schema": SCHEMA,
        "version": VERSION,
        "command": command,
        "tolerances": {"eps_gap": args.eps_gap, "tau_hnks": args.tau_hnks},
    }


def _hnks_json(decision) -> dict:
    return {"in_span": decision.in_span,
            "residual": decision.residual,
            "borderline": decision.borderline,
            "span_dim": decision.span_dim}


def cmd_qfi(args) -> int:
    channel = load_channel(args.channel)
    report = _base_report("qfi", args)
    report["label"] = channel.label
    decision = hnks(channel, tol=args.tau_hnks)
    report["hnks"] = _hnks_json(decision)
    if args.n == 1:
        rep = qfi.channel_qfi_single(channel, eps_gap=args.eps_gap)
        report["F1"] = rep.value
    else:
        rep = qfi.n_copy_qfi(channel, args.n, eps_gap=args.eps_gap)
        report["F1"] = rep.details["single_use"]
        report["F_n"] = rep.value
        report["n_copy_bounds"] = {"lower": rep.details["lower"],
                                   "upper": rep.details["upper"]}
    report["n"] = args.n
    report["regime"] = rep.regime
    report["optimal_h"] = _mat_to_json(rep.optimal_h)
    report["solver"] = {"iterations": rep.details.get("iterations"),
                        "rel_gap": rep.details.get("rel_gap")}
    if decision.in_span:
        report["F_sql"] = qfi.sql_constant(channel, eps_gap=args.eps_gap).value
    else:
        report["F_hl"] = qfi.hl_constant(channel, eps_gap=args.eps_gap).value
    _emit(report)
    return 0


def cmd_hnks(args) -> int:
    channel = load_channel(args.channel)
    report = _base_report("hnks", args)
    report["label"] = channel.label
    report["hnks"] = _hnks_json(hnks(channel, tol=args.tau_hnks))
    _emit(report)
    return 0


def cmd_code(args) -> int:
    channel = load_channel(args.channel)
    report = _base_report("code", args)
    report["label"] = channel.label
    decision = hnks(channel, tol=args.tau_hnks)
    report["hnks"] = _hnks_json(decision)
    if decision.in_span:
        protocol = qec.sql_protocol(channel, eta=args.eta, eps=args.epsilon)
        logical = qec.logical_channel(channel, protocol.code,
                                      protocol.recovery)
        report.update({
            "regime": "SQL",
            "F_sql": qfi.sql_constant(channel, eps_gap=args.eps_gap).value,
            "eta": args.eta,
            "achieved": protocol.achieved,
            "gap": protocol.gap,
            "code": {"C": _mat_to_json(protocol.code.C),
                     "D": _mat_to_json(protocol.code.D),
                     "eps": protocol.code.eps,
                     "A0": _mat_to_json(protocol.code.A0),
                     "A1": _mat_to_json(protocol.code.A1)},
            "recovery": {"G": _mat_to_json(protocol.recovery.G),
                         "eps": protocol.recovery.eps,
                         "T": _mat_to_json(protocol.recovery.T)},
        })
    else:
        code, signal = qec.hl_code(channel)
        recovery = qec.hl_recovery(channel, code)
        logical = qec.logical_channel(channel, code, recovery)
        report.update({
            "regime": "HL",
            "F_hl": qfi.hl_constant(channel, eps_gap=args.eps_gap).value,
            "achieved": abs(logical.dxi) ** 2,
            "signal_bound": signal,
            "code": {"A0": _mat_to_json(code.A0),
                     "A1": _mat_to_json(code.A1)},
            "recovery": {"R": _mat_to_json(recovery.R),
                         "Q": _mat_to_json(recovery.Q)},
        })
    report["xi"] = [logical.xi.real, logical.xi.imag]
    report["dxi"] = [logical.dxi.real, logical.dxi.imag]
    report["abs_xi"] = abs(logical.xi)
    _emit(report)
    return 0


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fig3_chunk(task):
    pz, chunk, axis = task
    return catalog.fig3_sweep(pz, grid=chunk, grid_y=axis)


def _sweep_fig3(out: str, jobs: int) -> list:
    axis = np.linspace(0.0, 0.45, 91)
    if jobs > 1:
        chunks = [(0.1, c, axis) for c in np.array_split(axis, jobs) if c.size]
        with multiprocessing.Pool(jobs) as pool:
            parts = pool.map(_fig3_chunk, chunks)
        rows = [r for part in parts for r in part]
    else:
        rows = catalog.fig3_sweep(0.1, grid=axis)
    path = os.path.join(out, "fig3.csv")
    _write_csv(path, ["px", "py", "F1", "F_sql"],
               [(r["px"], r["py"], r["F1"], r["F_sql"]) for r in rows])
    return [path]


def _sweep_fig4(out: str) -> list:
    rules = (0.9, 0.5, 0.1, 0.0)
    deltas = (np.pi / 4.0) * np.arange(1, 92) / 92.0
    paths = []
    for p in (0.5, 0.001):
        columns = {rule: catalog.fig4_sweep(p, rule, deltas) for rule in rules}
        rows = []
        for i, delta in enumerate(deltas):
            row = [float(delta)]
            row.extend(columns[rule][i]["ratio"] for rule in rules)
            rows.append(row)
        path = os.path.join(out, f"fig4_p{p}.csv")
        _write_csv(path, ["delta", "ratio_eps_0.9delta", "ratio_eps_0.5delta",
                          "ratio_eps_0.1delta", "ratio_limit"], rows)
        paths.append(path)
    return paths


def _sweep_squeezed(out: str) -> list:
    params = dephasing.DephasingParams(p=0.1, phi=0.0, dp=0.0, dphi=1.0)
    rows = dephasing.squeezed_asymptote_check(params, (4, 6, 8, 10))
    path = os.path.join(out, "squeezed.csv")
    _write_csv(path, ["N", "mu", "nu", "qfi", "qfi_per_qubit", "F_sql_u"],
               [(r["N"], r["mu"], r["nu"], r["qfi"], r["qfi_per_qubit"],
                 r["f_sql_u"]) for r in rows])
    return [path]


def cmd_sweep(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    jobs = args.jobs or int(os.environ.get("CHANNEL_QFI_JOBS", "1") or 1)
    if args.preset == "fig3":
        paths = _sweep_fig3(args.out, jobs)
    elif args.preset == "fig4":
        paths = _sweep_fig4(args.out)
    else:
        paths = _sweep_squeezed(args.out)
    for path in paths:
        print(path)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _random_block(rng, d: int) -> np.ndarray:
    C = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    C += d * np.eye(d)
    return C / np.linalg.norm(C)


def _verify_checks(seed: int, scale: float) -> list:
    checks = []

    def add(name, value, threshold):
        thr = threshold * scale
        checks.append({"name": name, "value": float(value),
                       "threshold": float(thr),
                       "pass": bool(value <= thr)})

    dpar = catalog.DepolarizingParams(0.1, 0.2, 0.1)
    dch = catalog.depolarizing_channel(dpar)
    forms = catalog.depolarizing_closed_forms(dpar)
    add("depolarizing F1 closed form vs solver",
        abs(qfi.channel_qfi_single(dch).value - forms["F1"]), 1e-6)
    add("depolarizing F_sql closed form vs solver",
        abs(qfi.sql_constant(dch).value - forms["F_sql"]), 1e-6)

    zpar = dephasing.DephasingParams(p=0.1, phi=0.2, dp=0.3, dphi=0.7)
    zch = dephasing.dephasing_channel(zpar)
    zforms = dephasing.closed_form_bounds(zpar)
    add("dephasing F1 closed form vs solver",
        abs(qfi.channel_qfi_single(zch).value - zforms["F1"]), 1e-6)
    add("dephasing F_sql closed form vs solver",
        abs(qfi.sql_constant(zch).value - zforms["F_sql_u"]), 1e-6)

    add("amplitude damping F_sql closed form vs solver",
        abs(qfi.sql_constant(catalog.ad_channel(0.5)).value - 4.0), 1e-6)

    rng = np.random.default_rng(seed)
    for k in range(3):
        C = _random_block(rng, 2)
        Ct = qec.sql_find_Ctilde(zch, C)
        f = qec.f_value(zch, C, Ct)
        quad, _ = qfi.min_h_quad(zch, C, constrain_beta_zero=True)
        add(f"duality gap at random code block {k}",
            abs(f - quad) / (1.0 + abs(quad)), 1e-5)

    val, _ = qfi.max_min_qfi(zch, iters=80)
    f1 = qfi.channel_qfi_single(zch).value
    add("minimax saddle gap", abs(f1 - val) / (1.0 + f1), 1e-5)

    xch = catalog.depolarizing_channel(catalog.DepolarizingParams(0.3, 0.0, 0.0))
    code, signal = qec.hl_code(xch)
    recovery = qec.hl_recovery(xch, code)
    logical = qec.logical_channel(xch, code, recovery)

    def gram(A):
        rho = A @ A.conj().T
        return np.array([[np.trace(Ki.conj().T @ Kj @ rho)
                          for Kj in xch.kraus] for Ki in xch.kraus])

    add("hl code error-matching residual",
        float(np.max(np.abs(gram(code.A0) - gram(code.A1)))), 1e-7)
    add("hl logical coherence off unity", abs(abs(logical.xi) - 1.0), 1e-7)
    add("hl achieved vs constant",
        abs(abs(logical.dxi) ** 2 - signal ** 2) / (1.0 + signal ** 2),
        1e-5)

    split = dephasing.qfi_split_check(zpar, dephasing.ghz_state(3))
    add("dephasing split residual",
        abs(split["F"] - split["F_p"] - split["F_phi"]) / (1.0 + split["F"]),
        1e-7)

    photons = catalog.optimal_photon_distribution(2, 0.3)
    add("interferometer diagonal reduction vs full solver",
        abs(photons["F1"] - photons["F1_full"]) / (1.0 + photons["F1_full"]),
        1e-6)
    return checks


def cmd_verify(args) -> int:
    scale = float(os.environ.get("CHANNEL_QFI_TOL_SCALE", "1") or 1.0)
    checks = _verify_checks(args.seed, scale)
    passed = all(c["pass"] for c in checks)
    if args.json:
        _emit({"schema": SCHEMA, "version": VERSION, "command": "verify",
               "seed": args.seed, "tolerance_scale": scale,
               "checks": checks, "passed": passed})
    else:
        for c in checks:
            tag = "PASS" if c["pass"] else "FAIL"
            print(f"{tag}  {c['name']}: {c['value']:.3e} "
                  f"(threshold {c['threshold']:.3e})")
        n_fail = sum(not c["pass"] for c in checks)
        print(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="channel-qfi",
        description="Asymptotic channel QFI and error-corrected protocols")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--eps-gap", type=float, default=1e-10,
                       dest="eps_gap", help="solver duality-gap tolerance")
        p.add_argument("--tau-hnks", type=float, default=TAU_HNKS,
                       dest="tau_hnks", help="span-membership tolerance")

    p_qfi = sub.add_parser("qfi", help="channel QFI and regime constant")
    p_qfi.add_argument("--channel", required=True, help="channel JSON file")
    p_qfi.add_argument("--n", type=int, default=1,
                       help="number of channel copies (brute force, small)")
    common(p_qfi)
    p_qfi.set_defaults(func=cmd_qfi)

    p_hnks = sub.add_parser("hnks", help="span membership of the generator")
    p_hnks.add_argument("--channel", required=True)
    common(p_hnks)
    p_hnks.set_defaults(func=cmd_hnks)

    p_code = sub.add_parser("code", help="optimal code and recovery")
    p_code.add_argument("--channel", required=True)
    p_code.add_argument("--eta", type=float, default=0.05,
                        help="target gap below the bounded constant")
    p_code.add_argument("--epsilon", type=float, default=1e-3,
                        help="starting perturbation strength")
    common(p_code)
    p_code.set_defaults(func=cmd_code)

    p_sweep = sub.add_parser("sweep", help="figure-data CSV emission")
    p_sweep.add_argument("--preset", required=True,
                         choices=("fig3", "fig4", "squeezed"))
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=0,
                         help="parallel workers (default CHANNEL_QFI_JOBS or 1)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_ver = sub.add_parser("verify", help="run the built-in invariant suite")
    p_ver.add_argument("--json", action="store_true",
                       help="machine-readable summary")
    p_ver.add_argument("--seed", type=int, default=0,
                       help="seed for the randomized duality probes")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
