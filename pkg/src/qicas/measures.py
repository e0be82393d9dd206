"""Orbital entropies and the correlation functionals built from them.

All entropies are in nats.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import CapacityError, DegenerateProfileError, NoPlateauError
from .fci import Wavefunction
from .partition import CasPartition
from .rdm import (
    MAX_SUBSET,
    OrbitalSpectrum,
    SpinTracedRDMs,
    orbital_spectra,
    subsystem_entropy,
    two_orbital_rdm,
    von_neumann,
)

__all__ = [
    "CasPartition",
    "EntropyProfile",
    "CorrelationReport",
    "entropy",
    "orbital_entropies",
    "entropy_profile",
    "f_qi",
    "f_qi_all",
    "mutual_information",
    "mutual_information_matrix",
    "decompose_correlation",
    "binary_entropy",
    "threshold_diagram",
    "suggest_cas_size",
    "DEFAULT_THRESHOLDS",
]

LN4 = float(np.log(4.0))
DEFAULT_THRESHOLDS = tuple(round(0.01 * k, 2) for k in range(1, 51))


@dataclass(frozen=True)
class EntropyProfile:
    entropies: np.ndarray
    occupancies: np.ndarray


@dataclass(frozen=True)
class CorrelationReport:
    f_qi: float
    i_n: float
    e_an: float


def _xlogx(lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    safe = np.where(lam > 0.0, lam, 1.0)
    return np.where(lam > 0.0, -lam * np.log(safe), 0.0)


def entropy(spec) -> float:
    """``-sum lambda ln lambda`` of a one-orbital spectrum (0 ln 0 = 0)."""
    lam = spec.lambdas if isinstance(spec, OrbitalSpectrum) else np.asarray(spec, dtype=float)
    return float(_xlogx(lam).sum())


def orbital_entropies(rdms: SpinTracedRDMs) -> np.ndarray:
    return _xlogx(orbital_spectra(rdms)).sum(axis=1)


def entropy_profile(rdms: SpinTracedRDMs) -> EntropyProfile:
    return EntropyProfile(orbital_entropies(rdms), rdms.occupancies())


def f_qi(rdms: SpinTracedRDMs, part: CasPartition) -> float:
    """Out-of-CAS correlation: entropies summed over closed and virtual orbitals."""
    s = orbital_entropies(rdms)
    return float(sum(s[i] for i in part.nonactive))


def f_qi_all(rdms: SpinTracedRDMs) -> float:
    return float(orbital_entropies(rdms).sum())


def mutual_information(psi: Wavefunction, i: int, j: int) -> float:
    """``S(rho_i) + S(rho_j) - S(rho_ij)`` from the two-orbital reduced state."""
    if i == j:
        raise ValueError("mutual information needs two distinct orbitals")
    a, b = min(i, j), max(i, j)
    rho = two_orbital_rdm(psi, a, b)
    r4 = rho.reshape(4, 4, 4, 4)
    s_a = von_neumann(np.linalg.eigvalsh(np.einsum("ikjk->ij", r4)))
    s_b = von_neumann(np.linalg.eigvalsh(np.einsum("kikj->ij", r4)))
    return s_a + s_b - von_neumann(np.linalg.eigvalsh(rho))


def mutual_information_matrix(psi: Wavefunction) -> np.ndarray:
    d = psi.space.d
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1, d):
            out[i, j] = out[j, i] = mutual_information(psi, i, j)
    return out


def decompose_correlation(psi: Wavefunction, part: CasPartition,
                          rdms: SpinTracedRDMs | None = None) -> CorrelationReport:
    """Split the out-of-CAS correlation into the multipartite information
    inside the non-active space and its entanglement with the active one.

    ``S(rho_N)`` comes from the Schmidt decomposition of the CI vector, not
    from the one-orbital entropies.
    """
    nonactive = part.nonactive
    if len(nonactive) > MAX_SUBSET:
        raise CapacityError(f"non-active space of {len(nonactive)} orbitals exceeds {MAX_SUBSET}")
    if rdms is None:
        from .rdm import compute_rdms
        rdms = compute_rdms(psi)
    total = f_qi(rdms, part)
    e_an = subsystem_entropy(psi, nonactive) if nonactive else 0.0
    return CorrelationReport(f_qi=total, i_n=total - e_an, e_an=e_an)


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    return float(_xlogx(x) + _xlogx(1.0 - x))


def inverse_binary_entropy(y: float) -> float:
    """Smallest ``x`` in [0, 1/2] with ``B(x) = y`` (bisection); 1/2 if
    ``y >= ln 2``."""
    if y <= 0.0:
        return 0.0
    if y >= np.log(2.0):
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ------------------------------------------------------- threshold diagrams

def threshold_diagram(profile, thresholds: Iterable[float] = DEFAULT_THRESHOLDS):
    """Count orbitals with entropy above ``tau * max entropy`` for every tau."""
    s = np.asarray(getattr(profile, "entropies", profile), dtype=float)
    if s.size == 0:
        raise ValueError("empty entropy profile")
    top = s.max()
    if top <= 0.0:
        raise DegenerateProfileError("all orbital entropies are zero")
    return [(float(tau), int((s > tau * top).sum())) for tau in thresholds]


def suggest_cas_size(diagram, min_run: int = 5, d: int | None = None):
    """Active-space size from the first plateau of a threshold diagram.

    Scanning upward in threshold, the first maximal run of at least
    ``min_run`` equal counts wins. A run at ``count == d`` (every orbital
    counted) is skipped; pass ``d=None`` to keep it. Returns
    ``(d_cas, (tau_first, tau_last))``.
    """
    diagram = sorted(diagram)
    if not diagram:
        raise NoPlateauError("empty diagram")
    start = 0
    for k in range(1, len(diagram) + 1):
        if k == len(diagram) or diagram[k][1] != diagram[start][1]:
            count = diagram[start][1]
            if k - start >= min_run and count != d and count > 0:
                return count, (diagram[start][0], diagram[k - 1][0])
            start = k
    raise NoPlateauError(f"no run of {min_run} equal counts in the threshold diagram")


def write_mi_csv(mi: np.ndarray, sink: IO[str], precision: int = 9) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["i", "j", "value"])
    for i in range(mi.shape[0]):
        for j in range(i + 1, mi.shape[0]):
            writer.writerow([i, j, f"{mi[i, j]:.{precision}f}"])


def write_diagram_csv(diagram, sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["threshold", "count"])
    for tau, count in diagram:
        writer.writerow([f"{tau:.2f}", count])
