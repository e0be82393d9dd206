"""Determinant-basis full CI: string spaces, matrix-free sigma vectors,
a Davidson eigensolver, spectral range and CAS projection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np

from . import _kernels
from .errors import CapacityError, ConvergenceError, PartitionError, ShapeError
from .hamiltonian import MolecularHamiltonian
from .partition import CasPartition

logger = logging.getLogger(__name__)

__all__ = [
    "DeterminantSpace",
    "Wavefunction",
    "SolverOptions",
    "enumerate_determinants",
    "apply_hamiltonian",
    "hamiltonian_diagonal",
    "ground_state",
    "spectral_bounds",
    "project_cas",
]


def _strings(d: int, n: int) -> np.ndarray:
    masks = [sum(1 << i for i in occ) for occ in combinations(range(d), n)]
    return np.array(sorted(masks), dtype=np.int64)


class _StringTable:
    """Strings of one spin plus their single-replacement table."""

    def __init__(self, d: int, n: int):
        self.d, self.n = d, n
        self.strings = _strings(d, n)
        index_of = np.full(1 << d, -1, dtype=np.int64)
        index_of[self.strings] = np.arange(len(self.strings))
        self.index_of = index_of
        self.ex_pq, self.ex_j, self.ex_s = _kernels.excitation_loop(self.strings, index_of, d)

    @cached_property
    def occupations(self) -> np.ndarray:
        return ((self.strings[:, None] >> np.arange(self.d)) & 1).astype(float)


@dataclass(frozen=True, eq=False)
class DeterminantSpace:
    """All ``(alpha, beta)`` bitmask pairs with fixed spin populations, in
    lexicographic order; the CI vector is the row-major flattening of an
    ``(n_alpha_strings, n_beta_strings)`` matrix."""

    d: int
    n_alpha: int
    n_beta: int

    @cached_property
    def alpha(self) -> _StringTable:
        return _StringTable(self.d, self.n_alpha)

    @cached_property
    def beta(self) -> _StringTable:
        return self.alpha if self.n_beta == self.n_alpha else _StringTable(self.d, self.n_beta)

    @property
    def shape(self) -> tuple:
        return comb(self.d, self.n_alpha), comb(self.d, self.n_beta)

    @property
    def size(self) -> int:
        na, nb = self.shape
        return na * nb

    @property
    def strings(self) -> list:
        return [(int(a), int(b)) for a in self.alpha.strings for b in self.beta.strings]

    def __len__(self):
        return self.size


_SPACES: dict = {}


def enumerate_determinants(d: int, n_alpha: int, n_beta: int) -> DeterminantSpace:
    if d < 0 or not (0 <= n_alpha <= d and 0 <= n_beta <= d):
        raise ValueError(f"cannot place ({n_alpha}, {n_beta}) electrons in {d} orbitals")
    key = (d, n_alpha, n_beta)
    if key not in _SPACES:
        _SPACES[key] = DeterminantSpace(d, n_alpha, n_beta)
    return _SPACES[key]


@dataclass(frozen=True, eq=False)
class Wavefunction:
    space: DeterminantSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if c.size != self.space.size:
            raise ShapeError(f"{c.size} coefficients for a space of {self.space.size}")
        object.__setattr__(self, "coeffs", c)

    @property
    def matrix(self) -> np.ndarray:
        return self.coeffs.reshape(self.space.shape)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-9
    max_iter: int = 500
    max_space_dim: int = 20_000_000
    max_subspace: int = 40


def _effective_one_body(h: MolecularHamiltonian) -> np.ndarray:
    return h.h1 - 0.5 * np.einsum("pqqs->ps", h.eri)


def _space_for(h: MolecularHamiltonian, n_elec=None, ms2=None) -> DeterminantSpace:
    n_elec = h.n_elec if n_elec is None else n_elec
    ms2 = h.ms2 if ms2 is None else ms2
    if (n_elec + ms2) % 2:
        raise ValueError(f"ms2={ms2} incompatible with {n_elec} electrons")
    return enumerate_determinants(h.d, (n_elec + ms2) // 2, (n_elec - ms2) // 2)


def apply_hamiltonian(h: MolecularHamiltonian, psi: Wavefunction | np.ndarray,
                      space: DeterminantSpace | None = None) -> np.ndarray:
    """Return ``H c`` (core energy included) as a flat vector."""
    if isinstance(psi, Wavefunction):
        space, c = psi.space, psi.coeffs
    else:
        c = np.asarray(psi, dtype=float)
        if space is None:
            space = _space_for(h)
    if space.d != h.d:
        raise ShapeError(f"wavefunction over {space.d} orbitals, Hamiltonian over {h.d}")
    if c.size != space.size:
        raise ShapeError(f"{c.size} coefficients for a space of {space.size}")
    a, b = space.alpha, space.beta
    out = _kernels.sigma(
        np.ascontiguousarray(c.reshape(space.shape)), h.e_core, _effective_one_body(h),
        np.ascontiguousarray(h.eri.reshape(h.d * h.d, h.d * h.d)), h.d,
        a.ex_pq, a.ex_j, a.ex_s, b.ex_pq, b.ex_j, b.ex_s)
    return out.ravel()


def hamiltonian_diagonal(h: MolecularHamiltonian, space: DeterminantSpace) -> np.ndarray:
    oa, ob = space.alpha.occupations, space.beta.occupations
    hd = np.diag(h.h1)
    j = np.einsum("ppqq->pq", h.eri)
    k = np.einsum("pqqp->pq", h.eri)
    ea = oa @ hd + 0.5 * np.einsum("ap,pq,aq->a", oa, j - k, oa)
    eb = ob @ hd + 0.5 * np.einsum("bp,pq,bq->b", ob, j - k, ob)
    return (h.e_core + ea[:, None] + eb[None, :] + oa @ j @ ob.T).ravel()


def _davidson(matvec, diag, guess, opts: SolverOptions):
    """Lowest eigenpair of a symmetric operator (diagonal preconditioner)."""
    n = diag.size
    basis = np.zeros((0, n))
    images = np.zeros((0, n))
    best = np.inf
    new = np.array(guess, dtype=float, ndmin=2)
    for it in range(opts.max_iter):
        for v in new:
            for _ in range(2):
                v = v - basis.T @ (basis @ v)
            nv = np.linalg.norm(v)
            if nv < 1e-10:
                continue
            v = v / nv
            basis = np.vstack([basis, v])
            images = np.vstack([images, matvec(v)])
        sub = basis @ images.T
        sub = 0.5 * (sub + sub.T)
        w, y = np.linalg.eigh(sub)
        theta, y0 = w[0], y[:, 0]
        x = y0 @ basis
        r = y0 @ images - theta * x
        res = float(np.linalg.norm(r))
        best = min(best, res)
        if res <= opts.tol or basis.shape[0] == n:
            return float(theta), x, res
        denom = theta - diag
        denom = np.where(np.abs(denom) < 1e-8, np.copysign(1e-8, denom), denom)
        t = r / denom
        for _ in range(2):
            t = t - basis.T @ (basis @ t)
        if np.linalg.norm(t) < 1e-8 * max(1.0, np.linalg.norm(r)):
            t = r - basis.T @ (basis @ r)
        if np.linalg.norm(t) < 1e-12:
            # subspace is stuck; add the first unit vector not yet spanned
            resid = 1.0 - np.einsum("kn,kn->n", basis, basis)
            t = np.zeros(n)
            t[int(np.argmax(resid))] = 1.0
        if basis.shape[0] + 1 > opts.max_subspace:
            keep = y[:, :2].T @ basis
            basis = np.zeros((0, n))
            images = np.zeros((0, n))
            new = np.vstack([keep, t])
        else:
            new = t[None, :]
    raise ConvergenceError(f"Davidson did not converge in {opts.max_iter} iterations "
                           f"(best residual {best:.3e})", residual=best, energy=float(theta))


def _fix_phase(x: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(x) > np.abs(x).max() * (1 - 1e-8)))
    return -x if x[k] < 0 else x


def _solve(h, space, opts, sign=1.0):
    if space.size > opts.max_space_dim:
        raise CapacityError(f"determinant space of {space.size} exceeds cap {opts.max_space_dim}")
    diag = sign * hamiltonian_diagonal(h, space)
    if space.size == 1:
        return float(diag[0]), np.ones(1), 0.0
    order = np.argsort(diag, kind="stable")
    guess = np.zeros((1, space.size))
    guess[0, order[0]] = 1.0
    e, x, res = _davidson(lambda v: sign * apply_hamiltonian(h, v, space), diag, guess, opts)
    return e, _fix_phase(x / np.linalg.norm(x)), res


def ground_state(h: MolecularHamiltonian, n_elec: int | None = None, ms2: int | None = None,
                 opts: SolverOptions | None = None, **kw):
    """Lowest eigenpair in the ``(n_alpha, n_beta)`` sector.

    Returns ``(energy, Wavefunction)``. The start vector is the unit vector
    on the lowest-diagonal determinant, so degenerate ground states are
    resolved reproducibly.
    """
    opts = opts or SolverOptions(**kw)
    space = _space_for(h, n_elec, ms2)
    e, x, res = _solve(h, space, opts)
    logger.debug("ground state %.12f (residual %.2e, dim %d)", e, res, space.size)
    return e, Wavefunction(space, x)


def spectral_bounds(h: MolecularHamiltonian, n_elec: int | None = None, ms2: int | None = None,
                    opts: SolverOptions | None = None, **kw):
    """``(e_min, e_max)`` of the sector Hamiltonian; the top is found by the
    same iteration on ``-H``."""
    opts = opts or SolverOptions(**kw)
    space = _space_for(h, n_elec, ms2)
    e_min, _, _ = _solve(h, space, opts)
    e_max, _, _ = _solve(h, space, opts, sign=-1.0)
    return e_min, -e_max


def _cas_mask(space: DeterminantSpace, part: CasPartition) -> np.ndarray:
    closed = sum(1 << i for i in part.closed)
    virtual = sum(1 << i for i in part.virtual)

    def ok(strings):
        return ((strings & closed) == closed) & ((strings & virtual) == 0)

    return (ok(space.alpha.strings)[:, None] & ok(space.beta.strings)[None, :]).ravel()


def project_cas(psi: Wavefunction, part: CasPartition):
    """Project onto determinants with closed orbitals doubly occupied and
    virtuals empty.

    Returns ``(psi_proj, weight)`` with ``weight = |P psi|^2``. ``psi_proj``
    is renormalised, or ``None`` when the weight is below 1e-14.
    """
    if max(part.active + part.closed + part.virtual, default=-1) >= psi.space.d:
        raise PartitionError("partition refers to orbitals outside the wavefunction")
    keep = _cas_mask(psi.space, part)
    c = np.where(keep, psi.coeffs, 0.0)
    weight = float(c @ c)
    if weight < 1e-14:
        return None, weight
    return Wavefunction(psi.space, c / np.sqrt(weight)), weight
