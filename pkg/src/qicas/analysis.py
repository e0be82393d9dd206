"""Energy/correlation bound checks, random-basis scans and the end-to-end
pipeline."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import IO

import numpy as np

from .casci import casci_energy, natural_occupations
from .errors import DegeneratePartitionError, QicasError
from .fci import SolverOptions, apply_hamiltonian, ground_state, project_cas, spectral_bounds
from .hamiltonian import MolecularHamiltonian, transform_integrals, write_orbitals
from .measures import (
    LN4,
    entropy_profile,
    f_qi,
    inverse_binary_entropy,
    suggest_cas_size,
    threshold_diagram,
    write_diagram_csv,
)
from .optimizer import QicasConfig, minimize_total_entropy, optimize, write_history_csv
from .partition import CasPartition
from .rdm import compute_rdms, write_profile_csv
from .rotation import OrbitalRotation, random_perturbation, rotate_rdms

logger = logging.getLogger(__name__)

__all__ = ["BoundReport", "ScanSample", "PipelineConfig", "verify_bound", "scan_random_bases",
           "run_pipeline", "write_scan_csv", "write_bound_csv", "pearson"]

SLACK = 1e-9


@dataclass
class BoundReport:
    e_fci: float
    e_casci: float
    delta_e: float
    delta_e_prime: float
    delta_e_max: float
    epsilon: float
    f_qi: float
    k: float
    chain_ok: dict
    epsilon_lt_half: bool
    tight_bound: float | None = None

    @property
    def ok(self) -> bool:
        return all(self.chain_ok.values())


@dataclass(frozen=True)
class ScanSample:
    f_qi: float
    e_casci: float
    seed: int


def verify_bound(h: MolecularHamiltonian, u, part: CasPartition, bounds=None,
                 opts: SolverOptions | None = None) -> BoundReport:
    """Evaluate every link of the chain

        dE <= dE' <= dE_max * eps,   F_QI >= ln(4) * eps  (eps < 1/2),
        dE <= dE_max / ln(4) * F_QI

    in the basis ``u``. ``dE'`` is the energy of the renormalised CAS
    projection of the exact ground state, measured directly. Links
    (c) and (d) are only asserted when ``eps < 1/2``.
    """
    h_rot = transform_integrals(h, u) if u is not None else h
    e_fci, psi = ground_state(h_rot, opts=opts)
    e_min, e_max = bounds if bounds is not None else spectral_bounds(h, opts=opts)
    delta_max = e_max - e_min
    proj, weight = project_cas(psi, part)
    if proj is None:
        raise DegeneratePartitionError(f"CAS projection weight {weight:.2e} is numerically zero")
    eps = min(max(1.0 - weight, 0.0), 1.0)
    e_prime = float(proj.coeffs @ apply_hamiltonian(h_rot, proj))
    e_cas = casci_energy(h_rot, None, part, opts=opts).e_total
    fq = f_qi(compute_rdms(psi), part)
    de, dep = e_cas - e_fci, e_prime - e_fci
    k = delta_max / LN4
    lt_half = eps < 0.5
    chain = {
        "a": de <= dep + SLACK,
        "b": dep <= delta_max * eps + SLACK,
        "c": (fq >= LN4 * eps - SLACK) if lt_half else True,
        "d": (de <= k * fq + SLACK) if lt_half else True,
    }
    tight = delta_max * inverse_binary_entropy(fq) if fq < np.log(2.0) else None
    return BoundReport(e_fci=e_fci, e_casci=e_cas, delta_e=de, delta_e_prime=dep,
                       delta_e_max=delta_max, epsilon=eps, f_qi=fq, k=k, chain_ok=chain,
                       epsilon_lt_half=lt_half, tight_bound=tight)


def _scan_one(args):
    h, rdms, part, center, scale, seed, opts = args
    u = random_perturbation(center, scale, seed)
    fq = f_qi(rotate_rdms(rdms, u), part)
    e = casci_energy(h, u, part, opts=opts).e_total
    return ScanSample(fq, e, seed)


def scan_random_bases(h: MolecularHamiltonian, part: CasPartition, n: int, center=None,
                      scale: float = 0.2, seed: int = 0, rdms=None, jobs: int = 1,
                      opts: SolverOptions | None = None) -> list:
    """F_QI and CASCI energy for ``n`` random perturbations of ``center``.

    Sample ``k`` uses seed ``seed + k``. F_QI is taken from the exact ground
    state of ``h`` rotated into each basis; rows come back sorted by F_QI.
    """
    if center is None:
        center = np.eye(h.d)
    center = np.asarray(getattr(center, "u", center))
    if rdms is None:
        rdms = compute_rdms(ground_state(h, opts=opts)[1])
    tasks = [(h, rdms, part, center, scale, seed + k, opts) for k in range(n)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            samples = list(pool.map(_scan_one, tasks))
    else:
        samples = [_scan_one(t) for t in tasks]
    return sorted(samples, key=lambda s: (s.f_qi, s.seed))


def pearson(samples) -> float:
    x = np.array([s.f_qi for s in samples])
    y = np.array([s.e_casci for s in samples])
    return float(np.corrcoef(x, y)[0, 1])


def write_scan_csv(samples, sink: IO[str], precision: int = 9) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["f_qi", "e_casci", "seed"])
    for s in samples:
        writer.writerow([f"{s.f_qi:.{precision}f}", f"{s.e_casci:.{precision}f}", s.seed])


def write_bound_csv(report: BoundReport, sink: IO[str], precision: int = 9) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["field", "value"])
    for key, value in asdict(report).items():
        if key == "chain_ok":
            for link, ok in value.items():
                writer.writerow([f"chain_{link}", ok])
        elif isinstance(value, float):
            writer.writerow([key, f"{value:.{precision}f}"])
        else:
            writer.writerow([key, value])


# ------------------------------------------------------------ pipeline

@dataclass
class PipelineConfig:
    n_cas: int | None = None
    d_cas: int | None = None
    active: tuple | None = None
    qicas: QicasConfig = field(default_factory=QicasConfig)
    select_size: bool = False
    min_run: int = 5
    scan_n: int = 0
    scan_scale: float = 0.2
    scan_seed: int = 0
    bound: bool = True
    jobs: int = 1
    precision: int = 9
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class PipelineReport:
    summary: dict
    files: dict
    partition: CasPartition
    u_star: OrbitalRotation
    bound: BoundReport | None = None
    scan: list | None = None


def _guess_n_cas(occ: np.ndarray, active, n_elec: int) -> int:
    rest = [i for i in range(len(occ)) if i not in set(active)]
    n_closed = int(sum(occ[i] > 1.0 for i in rest))
    return n_elec - 2 * n_closed


def run_pipeline(h: MolecularHamiltonian, cfg: PipelineConfig | None = None) -> PipelineReport:
    """solve -> RDMs -> [size selection] -> QICAS -> CASCI -> bound check.

    Every CSV is returned as text in ``report.files`` (name -> content) so
    callers decide where to write it. Stage failures are re-raised with the
    stage name prefixed.
    """
    cfg = cfg or PipelineConfig()
    p = cfg.precision
    files: dict = {}
    summary: dict = {"d": h.d, "n_elec": h.n_elec, "ms2": h.ms2}

    def stage(name, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except QicasError as exc:
            raise type(exc)(f"[{name}] {exc}") from exc

    e_fci, psi = stage("solve", ground_state, h, opts=cfg.solver)
    summary["e_fci"] = e_fci
    rdms = stage("rdm", compute_rdms, psi)
    buf = io.StringIO()
    write_profile_csv(rdms, buf, p)
    files["profile.csv"] = buf.getvalue()

    start = np.eye(h.d)
    d_cas, n_cas, active = cfg.d_cas, cfg.n_cas, cfg.active
    if cfg.select_size or d_cas is None:
        tot = stage("size", minimize_total_entropy, rdms, cfg.qicas, jobs=cfg.jobs)
        prof = entropy_profile(tot.rdms)
        diagram = stage("size", threshold_diagram, prof)
        buf = io.StringIO()
        write_diagram_csv(diagram, buf)
        files["threshold.csv"] = buf.getvalue()
        suggested, span = stage("size", suggest_cas_size, diagram, cfg.min_run, h.d)
        summary["f_qi_all_min"] = tot.f_star
        summary["suggested_d_cas"] = suggested
        summary["plateau"] = f"{span[0]:.2f}-{span[1]:.2f}"
        if d_cas is None:
            d_cas = suggested
            order = np.argsort(-prof.entropies, kind="stable")
            active = tuple(sorted(int(i) for i in order[:d_cas]))
            if n_cas is None:
                n_cas = _guess_n_cas(prof.occupancies, active, h.n_elec)
            start = tot.u_star.u
    if n_cas is None:
        raise ValueError("n_cas must be given when d_cas is")
    if active is None:
        part0 = CasPartition.from_sizes(h.d, h.n_elec, n_cas, d_cas)
    else:
        part0 = CasPartition.from_active(h.d, h.n_elec, n_cas, active)
    summary["n_cas"], summary["d_cas"] = n_cas, d_cas

    work = rotate_rdms(rdms, start)
    res = stage("qicas", optimize, work, part0, cfg.qicas, jobs=cfg.jobs,
                hamiltonian=transform_integrals(h, start))
    u_star = OrbitalRotation(res.u_star.u @ start)
    part = res.partition
    summary["f_qi_initial"] = res.history[0]
    summary["f_qi_star"] = res.f_star
    summary["accepted_steps"] = len(res.accepted_steps)
    summary["cycles"] = len(res.cycle_counts)
    summary["closed"] = " ".join(map(str, part.closed))
    summary["active"] = " ".join(map(str, part.active))
    summary["virtual"] = " ".join(map(str, part.virtual))
    buf = io.StringIO()
    write_history_csv(res, buf, p)
    files["history.csv"] = buf.getvalue()
    files["orbitals.txt"] = write_orbitals(u_star)

    cas = stage("casci", casci_energy, h, u_star, part, opts=cfg.solver)
    summary["e_casci"] = cas.e_total
    summary["e_core_eff"] = cas.e_core_eff
    summary["delta_e"] = cas.e_total - e_fci
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "occupation"])
    if cas.active_psi is not None:
        for i, n in enumerate(natural_occupations(cas.active_psi)):
            writer.writerow([i, f"{n:.{p}f}"])
    files["casci_occupations.csv"] = buf.getvalue()

    report = PipelineReport(summary=summary, files=files, partition=part, u_star=u_star)
    if cfg.bound:
        bound = stage("bound", verify_bound, h, u_star, part, opts=cfg.solver)
        report.bound = bound
        summary["bound_k"] = bound.k
        summary["epsilon"] = bound.epsilon
        summary["chain_ok"] = bound.ok
        buf = io.StringIO()
        write_bound_csv(bound, buf, p)
        files["bound.csv"] = buf.getvalue()
    if cfg.scan_n:
        samples = stage("scan", scan_random_bases, h, part, cfg.scan_n, u_star, cfg.scan_scale,
                        cfg.scan_seed, jobs=cfg.jobs, opts=cfg.solver)
        report.scan = samples
        summary["scan_pearson"] = pearson(samples)
        buf = io.StringIO()
        write_scan_csv(samples, buf, p)
        files["scan.csv"] = buf.getvalue()
    return report


def format_summary(summary: dict, precision: int = 9) -> str:
    lines = []
    for key, value in summary.items():
        if isinstance(value, float):
            value = f"{value:.{precision}f}"
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"
