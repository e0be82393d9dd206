"""Command-line front end.

Every subcommand writes its CSV files, a ``manifest.txt`` with the fully
resolved configuration and (where relevant) an orbital file under
``--out``, then prints a one-line summary. The manifest uses the same
``key=value`` format as ``--config`` so a run can be replayed with
``qicas <subcommand> --config out/manifest.txt``.

Exit codes: 0 success, 1 domain or file error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analysis import (
    PipelineConfig,
    format_summary,
    pearson,
    run_pipeline,
    scan_random_bases,
    verify_bound,
    write_bound_csv,
    write_scan_csv,
)
from .casci import casci_energy, natural_occupations
from .errors import QicasError
from .fci import SolverOptions, ground_state
from .hamiltonian import build_hubbard, read_fcidump, read_orbitals, transform_integrals, write_orbitals
from .measures import (
    entropy_profile,
    f_qi,
    f_qi_all,
    mutual_information_matrix,
    suggest_cas_size,
    threshold_diagram,
    write_diagram_csv,
    write_mi_csv,
)
from .optimizer import QicasConfig, minimize_total_entropy, optimize, write_history_csv
from .partition import CasPartition
from .rdm import compute_rdms, write_profile_csv
from .rotation import OrbitalRotation, rotate_rdms

SUBCOMMANDS = ("solve", "rdm", "entropy", "qicas", "casci", "scan", "bound", "size", "pipeline")
MANIFEST = "manifest.txt"


class UsageError(Exception):
    pass


# ------------------------------------------------------------ arg types

def _hubbard(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected L,t,U, got {text!r}")
    try:
        return int(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected L,t,U, got {text!r}") from None


def _cas(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected n_cas,d_cas, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected n_cas,d_cas, got {text!r}") from None


def _index_list(text: str):
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected orbital indices, got {text!r}") from None


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple) and len(value) and isinstance(value[0], (int, float)):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# --------------------------------------------------------------- parser

def _common(scan=False, qicas=False, cas=False, basis=False) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    src = p.add_argument_group("input")
    src.add_argument("--hubbard", type=_hubbard, metavar="L,t,U", help="Hubbard chain in the site basis")
    src.add_argument("--periodic", type=_bool, nargs="?", const=True, default=False,
                     help="close the Hubbard chain into a ring")
    src.add_argument("--fcidump", metavar="PATH", help="FCIDUMP integral file")
    src.add_argument("--nelec", type=int, help="electron count (default: file header / half filling)")
    src.add_argument("--ms2", type=int, help="2*S_z of the target sector")
    p.add_argument("--out", default="qicas-out", help="output directory (default: %(default)s)")
    p.add_argument("--config", metavar="PATH", help="key=value file; explicit flags win")
    p.add_argument("--precision", type=int, default=9, help="decimals in CSV output")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for restarts and scans")
    solver = p.add_argument_group("eigensolver")
    solver.add_argument("--tol", type=float, default=SolverOptions.tol)
    solver.add_argument("--max-iter", type=int, default=SolverOptions.max_iter)
    solver.add_argument("--max-space-dim", type=int, default=SolverOptions.max_space_dim)
    if cas:
        p.add_argument("--cas", type=_cas, metavar="N,D", help="active electrons and orbitals")
        p.add_argument("--active", type=_index_list, metavar="I,J,...",
                       help="explicit active orbitals (default: after the closed shell)")
    if basis:
        p.add_argument("--basis-file", metavar="PATH", help="orbital file (default: input basis)")
    if qicas:
        q = p.add_argument_group("optimizer")
        q.add_argument("--seed", type=int, default=QicasConfig.seed)
        q.add_argument("--restarts", type=int, default=QicasConfig.restarts)
        q.add_argument("--eps1", type=float, default=QicasConfig.eps1)
        q.add_argument("--eps2", type=float, default=None, help="cycle tolerance (default 10*eps1)")
        q.add_argument("--coarse-step", type=float, default=QicasConfig.coarse_step)
        q.add_argument("--fine-step", type=float, default=QicasConfig.fine_step)
        q.add_argument("--n-cycle", type=int, default=QicasConfig.n_cycle)
        q.add_argument("--scope", choices=("or", "xor"), default="or",
                       help="rotate pairs touching any non-active orbital (or) "
                            "or exactly one (xor)")
        q.add_argument("--select", choices=("energy", "f_qi"), default=QicasConfig.select,
                       help="restart selection criterion")
    if scan:
        s = p.add_argument_group("scan")
        s.add_argument("--n", type=int, default=200, help="number of sampled bases")
        s.add_argument("--scale", type=float, default=0.2, help="perturbation scale (radians)")
        if not qicas:
            s.add_argument("--seed", type=int, default=0)
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="qicas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    specs = {
        "solve": ("exact ground-state energy", {}),
        "rdm": ("one-orbital spectra and spin-resolved 1-RDMs", {}),
        "entropy": ("orbital entropies, mutual information and F_QI", {"cas": True, "basis": True}),
        "qicas": ("minimise the out-of-CAS correlation", {"cas": True, "qicas": True}),
        "casci": ("CASCI energy in a given basis", {"cas": True, "basis": True}),
        "scan": ("F_QI and CASCI energy over perturbed bases",
                 {"cas": True, "basis": True, "scan": True}),
        "bound": ("check the energy/correlation inequality chain", {"cas": True, "basis": True}),
        "size": ("active-space size from a threshold diagram", {"qicas": True}),
        "pipeline": ("solve, optimise, CASCI, bound check (and optional scan)",
                     {"cas": True, "qicas": True, "scan": True}),
    }
    subparsers = {}
    for name, (help_text, flags) in specs.items():
        sp = sub.add_parser(name, help=help_text, parents=[_common(**flags)])
        if name == "size":
            sp.add_argument("--min-run", type=int, default=5, help="plateau length in thresholds")
        if name == "pipeline":
            sp.add_argument("--min-run", type=int, default=5)
            sp.add_argument("--select-size", type=_bool, nargs="?", const=True, default=False,
                            help="also run the threshold-diagram size selection")
            sp.set_defaults(n=0)
        subparsers[name] = sp
    return parser, subparsers


def _read_config(path: str, sp: argparse.ArgumentParser) -> dict:
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror}") from None
    actions = {a.dest: a for a in sp._actions if a.dest != "help"}
    values = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value, got {raw!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest in ("command", "config", "version"):
            continue
        if dest not in actions:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        action = actions[dest]
        if value == "":
            values[dest] = None
            continue
        conv = action.type or str
        try:
            values[dest] = conv(value)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{path}:{n}: bad value for {key}: {exc}") from None
        if action.choices is not None and values[dest] not in action.choices:
            raise UsageError(f"{path}:{n}: {key} must be one of {sorted(action.choices)}")
    return values


def parse_args(argv):
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = subparsers[args.command]
        sp.set_defaults(**_read_config(args.config, sp))
        args = parser.parse_args(argv)
    if (args.hubbard is None) == (args.fcidump is None):
        parser.error("exactly one of --hubbard or --fcidump is required")
    return args


# -------------------------------------------------------------- helpers

def _hamiltonian(args):
    if args.hubbard is not None:
        sites, t, u = args.hubbard
        n_elec = sites if args.nelec is None else args.nelec
        ms2 = args.ms2 if args.ms2 is not None else n_elec % 2
        return build_hubbard(sites, t, u, periodic=args.periodic, n_elec=n_elec, ms2=ms2)
    try:
        h = read_fcidump(args.fcidump)
    except OSError as exc:
        raise OSError(f"cannot read FCIDUMP {args.fcidump}: {exc.strerror}") from None
    except QicasError as exc:
        raise type(exc)(f"{args.fcidump}: {exc}") from exc
    changes = {}
    if args.nelec is not None:
        changes["n_elec"] = args.nelec
    if args.ms2 is not None:
        changes["ms2"] = args.ms2
    elif args.nelec is not None:
        changes["ms2"] = args.nelec % 2
    return h.replace(**changes) if changes else h


def _solver(args) -> SolverOptions:
    return SolverOptions(tol=args.tol, max_iter=args.max_iter, max_space_dim=args.max_space_dim)


def _qicas_config(args) -> QicasConfig:
    return QicasConfig(coarse_step=args.coarse_step, fine_step=args.fine_step, eps1=args.eps1,
                       eps2=args.eps2, n_cycle=args.n_cycle, rotation_scope=args.scope,
                       seed=args.seed, restarts=args.restarts, select=args.select)


def _basis(args, d: int):
    if getattr(args, "basis_file", None) is None:
        return None
    try:
        u = read_orbitals(args.basis_file)
    except OSError as exc:
        raise OSError(f"cannot read orbital file {args.basis_file}: {exc.strerror}") from None
    except QicasError as exc:
        raise type(exc)(f"{args.basis_file}: {exc}") from exc
    if u.shape != (d, d):
        raise ValueError(f"{args.basis_file}: orbital matrix is {u.shape}, system has d={d}")
    return OrbitalRotation(u)


def _partition(args, h, required=True):
    if args.cas is None:
        if required:
            raise UsageError("--cas n_cas,d_cas is required")
        return None
    n_cas, d_cas = args.cas
    if args.active is not None:
        if len(args.active) != d_cas:
            raise UsageError(f"--active lists {len(args.active)} orbitals, --cas says {d_cas}")
        return CasPartition.from_active(h.d, h.n_elec, n_cas, args.active)
    return CasPartition.from_sizes(h.d, h.n_elec, n_cas, d_cas)


def _table(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fields(pairs, p: int) -> str:
    return _table([(k, f"{v:.{p}f}" if isinstance(v, float) else v) for k, v in pairs],
                  ["field", "value"])


def _manifest(args) -> str:
    skip = {"config"}
    lines = [f"# qicas {__version__}", f"command={args.command}"]
    for key in sorted(vars(args)):
        if key in skip or key == "command":
            continue
        lines.append(f"{key}={_format_value(getattr(args, key))}")
    return "\n".join(lines) + "\n"


def _write_outputs(out: str, files: dict) -> None:
    try:
        os.makedirs(out, exist_ok=True)
        for name, text in files.items():
            with open(os.path.join(out, name), "w", newline="") as f:
                f.write(text)
    except OSError as exc:
        where = exc.filename or out
        raise OSError(f"cannot write output under {where}: {exc.strerror}") from None


# ---------------------------------------------------------- subcommands

def cmd_solve(args, h):
    e, _ = ground_state(h, opts=_solver(args))
    p = args.precision
    return {"energy.csv": _fields([("e_fci", e)], p)}, f"E = {e:.{p}f}"


def cmd_rdm(args, h):
    _, psi = ground_state(h, opts=_solver(args))
    rdms = compute_rdms(psi)
    p = args.precision
    buf = io.StringIO()
    write_profile_csv(rdms, buf, p)
    rows = [(i, j, f"{rdms.gamma_a[i, j]:.{p}f}", f"{rdms.gamma_b[i, j]:.{p}f}")
            for i in range(h.d) for j in range(h.d)]
    files = {"profile.csv": buf.getvalue(),
             "rdm1.csv": _table(rows, ["i", "j", "gamma_alpha", "gamma_beta"])}
    occ = " ".join(f"{x:.{min(p, 4)}f}" for x in rdms.occupancies())
    return files, f"occupancies = {occ}"


def cmd_entropy(args, h):
    u = _basis(args, h.d)
    if u is not None:
        h = transform_integrals(h, u)
    _, psi = ground_state(h, opts=_solver(args))
    rdms = compute_rdms(psi)
    p = args.precision
    buf = io.StringIO()
    write_profile_csv(rdms, buf, p)
    files = {"profile.csv": buf.getvalue()}
    buf = io.StringIO()
    write_mi_csv(mutual_information_matrix(psi), buf, p)
    files["mutual_information.csv"] = buf.getvalue()
    pairs = [("f_qi_all", f_qi_all(rdms))]
    part = _partition(args, h, required=False)
    if part is not None:
        pairs.append(("f_qi", f_qi(rdms, part)))
    files["entropy.csv"] = _fields(pairs, p)
    return files, ", ".join(f"{k} = {v:.{p}f}" for k, v in pairs)


def cmd_qicas(args, h):
    part = _partition(args, h)
    _, psi = ground_state(h, opts=_solver(args))
    rdms = compute_rdms(psi)
    res = optimize(rdms, part, _qicas_config(args), jobs=args.jobs, hamiltonian=h)
    p = args.precision
    cas = casci_energy(h, res.u_star, res.partition, opts=_solver(args))
    buf = io.StringIO()
    write_history_csv(res, buf, p)
    part = res.partition
    summary = [("f_qi_initial", res.history[0]), ("f_qi_star", res.f_star),
               ("e_casci", cas.e_total), ("restart", res.restart),
               ("accepted_steps", len(res.accepted_steps)),
               ("closed", " ".join(map(str, part.closed))),
               ("active", " ".join(map(str, part.active))),
               ("virtual", " ".join(map(str, part.virtual)))]
    restarts = sorted(res.all_restarts, key=lambda r: r.restart)
    files = {"history.csv": buf.getvalue(), "orbitals.txt": write_orbitals(res.u_star),
             "qicas.csv": _fields(summary, p),
             "restarts.csv": _table([(r.restart, f"{r.f_star:.{p}f}") for r in restarts],
                                    ["restart", "f_qi"])}
    return files, f"F_QI* = {res.f_star:.{p}f}, E_CASCI = {cas.e_total:.{p}f}"


def cmd_casci(args, h):
    part = _partition(args, h)
    cas = casci_energy(h, _basis(args, h.d), part, opts=_solver(args))
    p = args.precision
    occ = natural_occupations(cas.active_psi) if cas.active_psi is not None else []
    files = {"casci.csv": _fields([("e_total", cas.e_total), ("e_core_eff", cas.e_core_eff)], p),
             "casci_occupations.csv": _table([(i, f"{n:.{p}f}") for i, n in enumerate(occ)],
                                             ["index", "occupation"])}
    return files, f"E_CASCI = {cas.e_total:.{p}f}"


def cmd_scan(args, h):
    part = _partition(args, h)
    center = _basis(args, h.d)
    samples = scan_random_bases(h, part, args.n, center=center, scale=args.scale, seed=args.seed,
                                jobs=args.jobs, opts=_solver(args))
    buf = io.StringIO()
    write_scan_csv(samples, buf, args.precision)
    r = pearson(samples) if len(samples) > 1 else float("nan")
    return {"scan.csv": buf.getvalue()}, f"{len(samples)} samples, pearson = {r:.{args.precision}f}"


def cmd_bound(args, h):
    part = _partition(args, h)
    rep = verify_bound(h, _basis(args, h.d), part, opts=_solver(args))
    buf = io.StringIO()
    write_bound_csv(rep, buf, args.precision)
    p = args.precision
    return {"bound.csv": buf.getvalue()}, (
        f"delta_e = {rep.delta_e:.{p}f}, k*F_QI = {rep.k * rep.f_qi:.{p}f}, "
        f"chain {'ok' if rep.ok else 'VIOLATED'}")


def cmd_size(args, h):
    _, psi = ground_state(h, opts=_solver(args))
    res = minimize_total_entropy(compute_rdms(psi), _qicas_config(args), jobs=args.jobs)
    prof = entropy_profile(res.rdms)
    diagram = threshold_diagram(prof)
    buf = io.StringIO()
    write_diagram_csv(diagram, buf)
    files = {"threshold.csv": buf.getvalue(), "orbitals.txt": write_orbitals(res.u_star)}
    buf = io.StringIO()
    write_profile_csv(res.rdms, buf, args.precision)
    files["profile.csv"] = buf.getvalue()
    d_cas, (lo, hi) = suggest_cas_size(diagram, args.min_run, h.d)
    files["size.csv"] = _fields([("f_qi_all", res.f_star), ("d_cas", d_cas),
                                 ("plateau_start", lo), ("plateau_end", hi)], args.precision)
    return files, f"D_CAS = {d_cas} (plateau {lo:.2f}-{hi:.2f})"


def cmd_pipeline(args, h):
    n_cas, d_cas = args.cas if args.cas is not None else (None, None)
    cfg = PipelineConfig(n_cas=n_cas, d_cas=d_cas, active=args.active,
                         qicas=_qicas_config(args), select_size=args.select_size,
                         min_run=args.min_run, scan_n=args.n, scan_scale=args.scale,
                         scan_seed=args.seed, jobs=args.jobs, precision=args.precision,
                         solver=_solver(args))
    rep = run_pipeline(h, cfg)
    files = dict(rep.files)
    files["summary.txt"] = format_summary(rep.summary, args.precision)
    s, p = rep.summary, args.precision
    return files, (f"E_FCI = {s['e_fci']:.{p}f}, E_CASCI = {s['e_casci']:.{p}f}, "
                   f"F_QI* = {s['f_qi_star']:.{p}f}")


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"qicas: usage error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qicas: error: {exc}", file=sys.stderr)
        return 1
    try:
        h = _hamiltonian(args)
        files, line = COMMANDS[args.command](args, h)
        files[MANIFEST] = _manifest(args)
        _write_outputs(args.out, files)
    except UsageError as exc:
        print(f"qicas {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (QicasError, OSError, ValueError) as exc:
        print(f"qicas {args.command}: error: {exc}", file=sys.stderr)
        return 1
    print(line)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
