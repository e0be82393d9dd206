"""Jacobi-sweep minimisation of the out-of-CAS orbital entropy."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import IO, Sequence

import numpy as np

from .errors import ClassificationError, PartitionError
from .measures import orbital_entropies
from .partition import CasPartition
from .rdm import SpinTracedRDMs
from .rotation import (
    JacobiStep,
    OrbitalRotation,
    apply_jacobi,
    orthogonality_error,
    pair_entropies,
    random_orthogonal,
    rotate_rdms,
)

logger = logging.getLogger(__name__)

__all__ = ["QicasConfig", "QicasResult", "optimize", "minimize_total_entropy",
           "classify_partition", "write_history_csv"]

TIE_TOL = 1e-12
SCOPES = {"or": "any_nonactive", "xor": "active_nonactive_only",
          "any_nonactive": "any_nonactive", "active_nonactive_only": "active_nonactive_only"}


@dataclass(frozen=True)
class QicasConfig:
    coarse_step: float = 1e-2
    fine_step: float = 1e-4
    eps1: float = 1e-8
    eps2: float | None = None
    n_cycle: int = 200
    rotation_scope: str = "any_nonactive"
    seed: int = 0
    restarts: int = 1
    select: str = "energy"

    def __post_init__(self):
        if self.select not in ("energy", "f_qi"):
            raise ValueError(f"unknown restart selection {self.select!r}")
        if not 0 < self.fine_step < self.coarse_step:
            raise ValueError("need 0 < fine_step < coarse_step")
        if self.rotation_scope not in SCOPES:
            raise ValueError(f"unknown rotation_scope {self.rotation_scope!r}")
        object.__setattr__(self, "rotation_scope", SCOPES[self.rotation_scope])
        if self.eps2 is None:
            object.__setattr__(self, "eps2", 10.0 * self.eps1)
        if self.restarts < 1 or self.n_cycle < 0:
            raise ValueError("restarts must be >= 1 and n_cycle >= 0")


@dataclass
class QicasResult:
    u_star: OrbitalRotation
    f_star: float
    partition: CasPartition | None
    history: list
    accepted_steps: list
    step_values: list = field(default_factory=list)
    cycle_counts: list = field(default_factory=list)
    rdms: SpinTracedRDMs | None = None
    restart: int = 0
    e_casci: float | None = None
    relabeled: bool = False
    all_restarts: list = field(default_factory=list, repr=False)


def _grid(center: float, half_width: float, step: float) -> np.ndarray:
    m = int(round(half_width / step))
    return center + step * np.arange(-m, m + 1)


def _first_min(values: np.ndarray) -> int:
    # lowest angle wins ties
    return int(np.flatnonzero(values <= values.min() + TIE_TOL)[0])


def _sweeps(rdms: SpinTracedRDMs, nonactive: set, cfg: QicasConfig, u0: np.ndarray,
            rng: np.random.Generator, restart: int = 0) -> QicasResult:
    r = rotate_rdms(rdms, u0)
    u = np.array(u0, dtype=float)
    d = r.d
    ent = orbital_entropies(r)
    nonact = sorted(nonactive)
    f = float(ent[nonact].sum())
    if not np.isfinite(f):
        raise ValueError("non-finite F_QI; RDMs are corrupt")
    coarse = np.linspace(0.0, np.pi, int(round(np.pi / cfg.coarse_step)) + 1)
    xor = cfg.rotation_scope == "active_nonactive_only"
    history, counts, steps, step_values = [f], [], [], []

    for cycle in range(cfg.n_cycle):
        order = rng.permutation(d)
        accepted = 0
        for a in range(d):
            for b in range(a + 1, d):
                p, q = int(order[a]), int(order[b])
                in_p, in_q = p in nonactive, q in nonactive
                if not ((in_p != in_q) if xor else (in_p or in_q)):
                    continue
                i, j = min(p, q), max(p, q)
                inc_i, inc_j = i in nonactive, j in nonactive
                vals = pair_entropies(r, i, j, coarse, inc_i, inc_j)
                theta_c = coarse[_first_min(vals)]
                fine = _grid(theta_c, cfg.coarse_step, cfg.fine_step)
                vals_f = pair_entropies(r, i, j, fine, inc_i, inc_j)
                k = _first_min(vals_f)
                gain = vals[0] - vals_f[k]
                if gain > cfg.eps1:
                    step = JacobiStep(i, j, float(np.mod(fine[k], np.pi)))
                    apply_jacobi(r, step, u)
                    new = orbital_entropies_pair(r, i, j)
                    ent[i], ent[j] = new
                    f_new = float(ent[nonact].sum())
                    steps.append(step)
                    step_values.append(f_new)
                    accepted += 1
                    f = f_new
        if orthogonality_error(u) > 1e-10:
            w, _, vt = np.linalg.svd(u)
            u = w @ vt
        counts.append(accepted)
        history.append(f)
        logger.debug("restart %d cycle %d: F=%.12f (%d steps)", restart, cycle, f, accepted)
        if history[-2] - f < cfg.eps2:
            break
    return QicasResult(u_star=OrbitalRotation(u), f_star=f, partition=None, history=history,
                       accepted_steps=steps, step_values=step_values, cycle_counts=counts,
                       rdms=r, restart=restart)


def orbital_entropies_pair(r: SpinTracedRDMs, i: int, j: int):
    s_i = pair_entropies(r, i, j, [0.0], True, False)[0]
    s_j = pair_entropies(r, i, j, [0.0], False, True)[0]
    return s_i, s_j


def _restart(args):
    rdms, nonactive, cfg, k = args
    d = rdms.d
    u0 = np.eye(d) if k == 0 else random_orthogonal(d, [cfg.seed, k, 1]).u
    rng = np.random.default_rng([cfg.seed, k])
    return _sweeps(rdms, nonactive, cfg, u0, rng, restart=k)


def _run_restarts(rdms, nonactive, cfg, jobs) -> list:
    tasks = [(rdms, nonactive, cfg, k) for k in range(cfg.restarts)]
    if jobs > 1 and cfg.restarts > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_restart, tasks))
    return [_restart(t) for t in tasks]


def _n_elec(rdms: SpinTracedRDMs) -> int:
    return int(round(np.trace(rdms.gamma_a) + np.trace(rdms.gamma_b)))


def _relabel_active(occ: np.ndarray, ent: np.ndarray, part: CasPartition, n_elec: int):
    """Active set of the right size, chosen inside the current basis, that
    minimises F_QI while leaving exactly the required number of non-active
    orbitals above occupancy 1. ``None`` if no such set exists.

    Pure (zero-entropy) orbitals can trade places between the active and
    non-active sets without changing F_QI, so the sweeps alone cannot tell
    an occupied active orbital from an empty one.
    """
    n_closed = (n_elec - part.n_cas) // 2
    big = [i for i in range(len(occ)) if occ[i] > 1.0]
    small = [i for i in range(len(occ)) if occ[i] <= 1.0]
    k_big = len(big) - n_closed
    if not 0 <= k_big <= part.d_cas or part.d_cas - k_big > len(small):
        return None
    # highest entropy first; among equals prefer occupancies nearest 1
    big.sort(key=lambda i: (-round(ent[i], 12), occ[i], i))
    small.sort(key=lambda i: (-round(ent[i], 12), -occ[i], i))
    return sorted(big[:k_big] + small[:part.d_cas - k_big])


def _active_natural(res: QicasResult, part: CasPartition) -> QicasResult:
    """Rotate the active block to its natural orbitals. F_QI only sees
    non-active orbitals, so this leaves it unchanged."""
    act = list(part.active)
    r = res.rdms
    if len(act) < 2:
        return res
    g = (r.gamma_a + r.gamma_b)[np.ix_(act, act)]
    _, vecs = np.linalg.eigh(g)
    t = np.eye(r.d)
    t[np.ix_(act, act)] = vecs[:, ::-1].T
    return replace(res, rdms=rotate_rdms(r, t), u_star=OrbitalRotation(t @ res.u_star.u))


def _classified(res: QicasResult, part: CasPartition, n_elec: int) -> QicasResult:
    occ = res.rdms.occupancies()
    f_star, relabeled = res.f_star, False
    try:
        new_part = classify_partition(occ, n_elec, part.n_cas, part.d_cas, part.active)
    except ClassificationError:
        res = _active_natural(res, part)
        occ = res.rdms.occupancies()
        ent = orbital_entropies(res.rdms)
        active = _relabel_active(occ, ent, part, n_elec)
        if active is None:
            raise
        new_part = classify_partition(occ, n_elec, part.n_cas, part.d_cas, active)
        f_star = float(ent[list(new_part.nonactive)].sum())
        relabeled = True
        logger.info("restart %d: active set relabelled to %s (F_QI %.3e -> %.3e)",
                    res.restart, active, res.f_star, f_star)
    perm = np.arange(len(occ))
    for block in (new_part.active, new_part.closed, new_part.virtual):
        block = list(block)
        perm[block] = sorted(block, key=lambda i: (-occ[i], i))
    r = res.rdms
    return replace(
        res, partition=new_part, f_star=f_star, relabeled=relabeled, u_star=OrbitalRotation(res.u_star.u[perm]),
        rdms=SpinTracedRDMs(r.gamma_a[np.ix_(perm, perm)], r.gamma_b[np.ix_(perm, perm)],
                            r.gamma_os[np.ix_(perm, perm, perm, perm)]))


def optimize(rdms: SpinTracedRDMs, part: CasPartition, cfg: QicasConfig | None = None,
             classify: bool = True, jobs: int = 1, hamiltonian=None) -> QicasResult:
    """Minimise F_QI over orbital rotations by Jacobi sweeps.

    Every cycle visits the orbital pairs in a freshly shuffled order, scans
    the rotation angle on a coarse grid over [0, pi], refines around the
    best coarse angle, and accepts the step when it lowers F_QI by more
    than ``eps1``. Cycles stop after ``n_cycle`` or once a whole cycle
    gains less than ``eps2``. Restart 0 starts from the input basis,
    further restarts from seeded random bases.

    With ``classify`` the non-active orbitals are relabelled closed/virtual
    by occupancy and every block is ordered by descending occupancy (the
    rows of ``u_star`` follow). If the occupancies disagree with the CAS
    size, the active set is re-chosen within the optimised basis (see
    ``_relabel_active``); restarts where even that fails are skipped. Among the rest the lowest F_QI wins, or the
    lowest CASCI energy when ``hamiltonian`` is given and
    ``cfg.select == "energy"``.
    """
    cfg = cfg or QicasConfig()
    part.check(rdms.d)
    results = _run_restarts(rdms, set(part.nonactive), cfg, jobs)
    by_f = sorted(results, key=lambda res: (res.f_star, res.restart))
    if not classify:
        return replace(by_f[0], partition=part, all_restarts=results)
    n_elec = _n_elec(rdms)
    good, first_error = [], None
    for res in results:
        try:
            good.append(_classified(res, part, n_elec))
        except ClassificationError as exc:
            first_error = first_error or exc
    if not good:
        raise first_error
    good.sort(key=lambda res: (res.f_star, res.restart))
    if hamiltonian is not None and cfg.select == "energy":
        from .casci import casci_energy
        scored = [(casci_energy(hamiltonian, res.u_star, res.partition).e_total, res.restart, res)
                  for res in good]
        for e, _, res in scored:
            res.e_casci = e
        best = min(scored, key=lambda t: t[:2])[2]
    else:
        best = good[0]
    best.all_restarts = results
    return best


def minimize_total_entropy(rdms: SpinTracedRDMs, cfg: QicasConfig | None = None,
                           jobs: int = 1) -> QicasResult:
    """Same sweeps with every orbital counted (the all-orbital entropy sum)."""
    cfg = replace(cfg or QicasConfig(), rotation_scope="any_nonactive")
    results = _run_restarts(rdms, set(range(rdms.d)), cfg, jobs)
    return min(results, key=lambda res: (res.f_star, res.restart))


def classify_partition(gamma_rotated, n_elec: int, n_cas: int, d_cas: int,
                       active_hint: Sequence[int]) -> CasPartition:
    """Closed if occupancy > 1, virtual otherwise, for every non-active orbital.

    ``gamma_rotated`` is either RDMs, a ``(gamma_a, gamma_b)`` pair or a
    vector of occupancies.
    """
    if isinstance(gamma_rotated, SpinTracedRDMs):
        occ = gamma_rotated.occupancies()
    elif isinstance(gamma_rotated, (tuple, list)) and len(gamma_rotated) == 2 \
            and np.ndim(gamma_rotated[0]) == 2:
        occ = np.diag(gamma_rotated[0]) + np.diag(gamma_rotated[1])
    else:
        occ = np.asarray(gamma_rotated, dtype=float)
    active = sorted(int(i) for i in active_hint)
    if len(active) != d_cas:
        raise PartitionError(f"active hint has {len(active)} orbitals, expected {d_cas}")
    rest = [i for i in range(len(occ)) if i not in active]
    closed = [i for i in rest if occ[i] > 1.0]
    virtual = [i for i in rest if occ[i] <= 1.0]
    expected, odd = divmod(n_elec - n_cas, 2)
    if odd or len(closed) != expected:
        raise ClassificationError(
            f"{len(closed)} non-active orbitals have occupancy > 1, CAS({n_cas},{d_cas}) with "
            f"{n_elec} electrons needs {expected}: occupancies {np.round(occ[rest], 6).tolist()}",
            occupancies=occ)
    return CasPartition(active=active, closed=closed, virtual=virtual, n_cas=n_cas)


def write_history_csv(result: QicasResult, sink: IO[str], precision: int = 9) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["cycle", "f_qi", "accepted_steps_in_cycle"])
    writer.writerow([0, f"{result.history[0]:.{precision}f}", 0])
    for n, (f, k) in enumerate(zip(result.history[1:], result.cycle_counts), 1):
        writer.writerow([n, f"{f:.{precision}f}", k])
