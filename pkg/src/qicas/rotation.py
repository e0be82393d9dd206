"""Orthogonal orbital rotations and their action on RDMs.

A rotation ``U`` maps the current basis to ``phi'_a = sum_p U[a, p] phi_p``.
For a Jacobi step ``T_ij(theta)`` the new orbital ``i`` is
``cos(theta) phi_i + sin(theta) phi_j`` and the new ``j`` is
``-sin(theta) phi_i + cos(theta) phi_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .errors import ShapeError
from .partition import CasPartition
from .rdm import SpinTracedRDMs

__all__ = [
    "OrbitalRotation",
    "JacobiStep",
    "jacobi_matrix",
    "rotate_1rdm",
    "rotate_os_2rdm",
    "rotate_rdms",
    "apply_jacobi",
    "pair_local_fqi",
    "pair_entropies",
    "random_orthogonal",
    "random_perturbation",
    "orthogonality_error",
]

REORTHO_TOL = 1e-8
REJECT_TOL = 1e-6


def orthogonality_error(u: np.ndarray) -> float:
    return float(np.abs(u.T @ u - np.eye(u.shape[0])).max())


def _polar(u: np.ndarray) -> np.ndarray:
    w, _, vt = np.linalg.svd(u)
    return w @ vt


@dataclass(frozen=True, eq=False)
class OrbitalRotation:
    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ShapeError(f"rotation must be square, got {u.shape}")
        err = orthogonality_error(u)
        if err > REJECT_TOL:
            raise ValueError(f"matrix is not orthogonal (max |U^T U - 1| = {err:.2e})")
        if err > REORTHO_TOL:
            u = _polar(u)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def identity(cls, d: int) -> "OrbitalRotation":
        return cls(np.eye(d))

    @property
    def d(self) -> int:
        return self.u.shape[0]

    def __matmul__(self, other: "OrbitalRotation") -> "OrbitalRotation":
        return OrbitalRotation(self.u @ other.u)

    def permuted(self, order) -> "OrbitalRotation":
        return OrbitalRotation(self.u[list(order)])


@dataclass(frozen=True)
class JacobiStep:
    i: int
    j: int
    angle: float

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("Jacobi step needs two distinct orbitals")


def jacobi_matrix(d: int, step: JacobiStep) -> OrbitalRotation:
    t = np.eye(d)
    c, s = np.cos(step.angle), np.sin(step.angle)
    t[step.i, step.i] = t[step.j, step.j] = c
    t[step.i, step.j] = s
    t[step.j, step.i] = -s
    return OrbitalRotation(t)


def _u(u) -> np.ndarray:
    return np.asarray(getattr(u, "u", u), dtype=float)


def rotate_1rdm(gamma: np.ndarray, u) -> np.ndarray:
    u = _u(u)
    if u.shape != gamma.shape:
        raise ShapeError(f"rotation {u.shape} does not match 1-RDM {gamma.shape}")
    return u @ gamma @ u.T


def rotate_os_2rdm(gamma_os: np.ndarray, u) -> np.ndarray:
    """Apply ``U`` to every index, one contraction at a time."""
    u = _u(u)
    d = u.shape[0]
    if gamma_os.shape != (d,) * 4:
        raise ShapeError(f"rotation {u.shape} does not match 2-RDM {gamma_os.shape}")
    g = gamma_os
    for _ in range(4):
        # contract the leading index, append the new one at the end
        g = np.tensordot(g, u, axes=(0, 1))
    return g


def rotate_rdms(rdms: SpinTracedRDMs, u) -> SpinTracedRDMs:
    return SpinTracedRDMs(rotate_1rdm(rdms.gamma_a, u), rotate_1rdm(rdms.gamma_b, u),
                          rotate_os_2rdm(rdms.gamma_os, u))


def _rotate_axis(arr: np.ndarray, axis: int, i: int, j: int, c: float, s: float) -> None:
    a = np.moveaxis(arr, axis, 0)
    ai = a[i].copy()
    aj = a[j]
    a[i] = c * ai + s * aj
    a[j] = -s * ai + c * aj


def apply_jacobi(rdms: SpinTracedRDMs, step: JacobiStep, u: np.ndarray | None = None) -> None:
    """Rotate ``rdms`` (and the rows of ``u``) in place by one Jacobi step.

    Touches only two slices per index: O(d) for each 1-RDM and O(d^3) for
    the opposite-spin block.
    """
    c, s = np.cos(step.angle), np.sin(step.angle)
    i, j = step.i, step.j
    for g in (rdms.gamma_a, rdms.gamma_b):
        _rotate_axis(g, 0, i, j, c, s)
        _rotate_axis(g, 1, i, j, c, s)
    for axis in range(4):
        _rotate_axis(rdms.gamma_os, axis, i, j, c, s)
    if u is not None:
        _rotate_axis(u, 0, i, j, c, s)


def _pair_blocks(rdms: SpinTracedRDMs, i: int, j: int):
    idx = np.array([i, j])
    ga = rdms.gamma_a[np.ix_(idx, idx)]
    gb = rdms.gamma_b[np.ix_(idx, idx)]
    g16 = rdms.gamma_os[np.ix_(idx, idx, idx, idx)]
    return ga, gb, g16


def pair_entropies(rdms: SpinTracedRDMs, i: int, j: int, thetas, include_i=True, include_j=True):
    """Entropy of rotated orbital i plus that of rotated j (each optional)
    for every angle in ``thetas``; only the (i, j) blocks are read."""
    ga, gb, g16 = _pair_blocks(rdms, i, j)
    return _kernels.pair_scan(np.atleast_1d(np.asarray(thetas, dtype=float)), ga, gb, g16,
                              include_i, include_j)


def pair_local_fqi(rdms: SpinTracedRDMs, part: CasPartition, base_entropies: np.ndarray,
                   step: JacobiStep) -> float:
    """F_QI after the hypothetical step, without touching the inputs.

    Entropies of orbitals other than ``i`` and ``j`` come from
    ``base_entropies``.
    """
    nonactive = set(part.nonactive)
    i, j = step.i, step.j
    rest = sum(base_entropies[k] for k in nonactive if k not in (i, j))
    pair = pair_entropies(rdms, i, j, [step.angle], i in nonactive, j in nonactive)[0]
    return float(rest + pair)


def random_orthogonal(d: int, seed) -> OrbitalRotation:
    """Haar-distributed orthogonal matrix from the QR factors of a seeded
    Gaussian matrix."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return OrbitalRotation(q * np.sign(np.diag(r)))


def random_perturbation(u0, scale: float, seed) -> OrbitalRotation:
    """``u0 @ expm(A)`` with ``A`` antisymmetric, entries ``scale * N(0, 1)``."""
    u0 = _u(u0)
    d = u0.shape[0]
    if scale == 0:
        return OrbitalRotation(u0.copy())
    rng = np.random.default_rng(seed)
    a = np.triu(rng.standard_normal((d, d)), 1) * scale
    return OrbitalRotation(u0 @ expm(a - a.T))
