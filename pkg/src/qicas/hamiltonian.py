"""Spin-free second-quantised Hamiltonians: FCIDUMP I/O, lattice models and
orbital-basis changes of the integrals.

Two-electron integrals are kept in chemists' notation ``(pq|rs)`` as a dense
``(d, d, d, d)`` array with the full 8-fold permutational symmetry enforced
on construction.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import IO, Iterable, Union

import numpy as np

from .errors import (
    FcidumpConsistencyError,
    FcidumpFormatError,
    FcidumpRangeError,
    ShapeError,
)

__all__ = [
    "MolecularHamiltonian",
    "parse_fcidump",
    "read_fcidump",
    "write_fcidump",
    "build_hubbard",
    "transform_integrals",
    "write_orbitals",
    "read_orbitals",
    "parse_orbitals",
]

DUPLICATE_TOL = 1e-12
ORTHO_TOL = 1e-10


def symmetrize_eri(eri: np.ndarray) -> np.ndarray:
    """Project onto the 8-fold symmetric subspace.

    Pairwise averaging keeps already-symmetric input bitwise unchanged.
    """
    eri = 0.5 * (eri + eri.transpose(1, 0, 2, 3))
    eri = 0.5 * (eri + eri.transpose(0, 1, 3, 2))
    eri = 0.5 * (eri + eri.transpose(2, 3, 0, 1))
    return eri


@dataclass(frozen=True, eq=False)
class MolecularHamiltonian:
    """Core energy, one-electron ``h1`` and two-electron ``eri`` over ``d``
    spatial orbitals, plus the electron count and ``ms2 = 2 S_z`` of the
    target sector."""

    d: int
    n_elec: int
    ms2: int
    e_core: float
    h1: np.ndarray
    eri: np.ndarray

    def __post_init__(self):
        d = int(self.d)
        h1 = np.array(self.h1, dtype=float)
        eri = np.array(self.eri, dtype=float)
        if h1.shape != (d, d):
            raise ShapeError(f"h1 has shape {h1.shape}, expected {(d, d)}")
        if eri.shape != (d, d, d, d):
            raise ShapeError(f"eri has shape {eri.shape}, expected {(d,) * 4}")
        if not 1 <= self.n_elec <= 2 * d:
            raise ValueError(f"n_elec={self.n_elec} outside [1, {2 * d}]")
        if (self.n_elec + self.ms2) % 2 or abs(self.ms2) > self.n_elec:
            raise ValueError(f"ms2={self.ms2} incompatible with n_elec={self.n_elec}")
        h1 = 0.5 * (h1 + h1.T)
        eri = symmetrize_eri(eri)
        h1.setflags(write=False)
        eri.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "n_elec", int(self.n_elec))
        object.__setattr__(self, "ms2", int(self.ms2))
        object.__setattr__(self, "e_core", float(self.e_core))
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "eri", eri)

    @property
    def n_alpha(self) -> int:
        return (self.n_elec + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_elec - self.ms2) // 2

    def replace(self, **changes) -> "MolecularHamiltonian":
        fields = dict(d=self.d, n_elec=self.n_elec, ms2=self.ms2,
                      e_core=self.e_core, h1=self.h1, eri=self.eri)
        fields.update(changes)
        return MolecularHamiltonian(**fields)

    def equals(self, other: "MolecularHamiltonian", atol: float = 0.0) -> bool:
        """Field-by-field comparison; ``atol=0`` demands bitwise equality."""
        return (
            self.d == other.d
            and self.n_elec == other.n_elec
            and self.ms2 == other.ms2
            and abs(self.e_core - other.e_core) <= atol
            and np.allclose(self.h1, other.h1, rtol=0, atol=atol)
            and np.allclose(self.eri, other.eri, rtol=0, atol=atol)
        )


# ---------------------------------------------------------------- FCIDUMP

_HEADER_START = re.compile(r"&\s*FCI\b", re.IGNORECASE)
_HEADER_END = re.compile(r"(&\s*END\b|^\s*/\s*$|/\s*$)", re.IGNORECASE | re.MULTILINE)


def _parse_number(token: str) -> float:
    return float(token.replace("D", "E").replace("d", "e"))


def _parse_header(header: str) -> dict:
    body = _HEADER_START.sub(" ", header, count=1)
    body = re.sub(r"&\s*END", " ", body, flags=re.IGNORECASE).replace("/", " ")
    values: dict[str, list[str]] = {}
    key = None
    for token in re.split(r"[,\s]+", body):
        if not token:
            continue
        if "=" in token:
            key, _, rest = token.partition("=")
            key = key.strip().upper()
            if not key:
                raise FcidumpFormatError(f"malformed header token {token!r}")
            values[key] = [rest] if rest else []
        elif key is None:
            raise FcidumpFormatError(f"unexpected header token {token!r}")
        else:
            values[key].append(token)
    out = {}
    for name in ("NORB", "NELEC", "MS2"):
        if name not in values:
            raise FcidumpFormatError(f"header lacks {name}")
        raw = values[name]
        if len(raw) != 1:
            raise FcidumpFormatError(f"header entry {name} has {len(raw)} values")
        try:
            out[name] = int(raw[0])
        except ValueError:
            raise FcidumpFormatError(f"header entry {name}={raw[0]!r} is not an integer") from None
    # ORBSYM, ISYM and friends are accepted and ignored
    return out


def parse_fcidump(text: Union[str, IO[str]]) -> MolecularHamiltonian:
    """Parse FCIDUMP text (or a text stream) into a Hamiltonian.

    Indices in the file are 1-based. Integrals not listed are zero, and a
    value stated twice under symmetry-equivalent indices must agree to
    within 1e-12.
    """
    if not isinstance(text, str):
        text = text.read()
    if not _HEADER_START.search(text):
        first = text.split(None, 1)[0] if text.strip() else "<empty>"
        raise FcidumpFormatError(f"missing '&FCI' header, found {first!r}")
    end = _HEADER_END.search(text, _HEADER_START.search(text).end())
    if end is None:
        raise FcidumpFormatError("header is not terminated by '&END' or '/'")
    header = _parse_header(text[: end.start()])
    d, n_elec, ms2 = header["NORB"], header["NELEC"], header["MS2"]
    if d < 1:
        raise FcidumpFormatError(f"NORB={d} must be positive")

    h1 = np.zeros((d, d))
    eri = np.zeros((d, d, d, d))
    seen_h1: dict[tuple, float] = {}
    seen_eri: dict[tuple, float] = {}
    e_core = 0.0
    core_seen = False

    for lineno, line in enumerate(text[end.end():].splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpFormatError(f"integral line {lineno} has {len(parts)} fields: {line.strip()!r}")
        try:
            value = _parse_number(parts[0])
        except ValueError:
            raise FcidumpFormatError(f"bad integral value {parts[0]!r} on line {lineno}") from None
        try:
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError:
            raise FcidumpFormatError(f"bad index on line {lineno}: {line.strip()!r}") from None
        for idx in (i, j, k, l):
            if idx < 0 or idx > d:
                raise FcidumpRangeError(f"index {idx} on line {lineno} outside 0..{d}")

        if i == j == k == l == 0:
            if core_seen and abs(e_core - value) > DUPLICATE_TOL:
                raise FcidumpConsistencyError(f"core energy stated twice: {e_core!r} vs {value!r}")
            e_core, core_seen = value, True
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpFormatError(f"one-electron line {lineno} has a zero index")
            p, q = i - 1, j - 1
            key = (max(p, q), min(p, q))
            if key in seen_h1 and abs(seen_h1[key] - value) > DUPLICATE_TOL:
                raise FcidumpConsistencyError(
                    f"h1{(p + 1, q + 1)} stated as {seen_h1[key]!r} and {value!r}")
            seen_h1[key] = value
            h1[p, q] = h1[q, p] = value
        else:
            if 0 in (i, j, k, l):
                raise FcidumpFormatError(f"two-electron line {lineno} has a zero index")
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            pq, rs = (max(p, q), min(p, q)), (max(r, s), min(r, s))
            key = max(pq, rs) + min(pq, rs)
            if key in seen_eri and abs(seen_eri[key] - value) > DUPLICATE_TOL:
                raise FcidumpConsistencyError(
                    f"({i}{j}|{k}{l}) conflicts with an equivalent integral: "
                    f"{seen_eri[key]!r} vs {value!r}")
            seen_eri[key] = value
            for a, b, c, e in _permutations(p, q, r, s):
                eri[a, b, c, e] = value

    return MolecularHamiltonian(d=d, n_elec=n_elec, ms2=ms2, e_core=e_core, h1=h1, eri=eri)


def _permutations(p, q, r, s):
    return {(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
            (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)}


def read_fcidump(path) -> MolecularHamiltonian:
    with open(path) as f:
        return parse_fcidump(f.read())


def write_fcidump(h: MolecularHamiltonian, sink: IO[str] | None = None) -> str:
    """Serialise ``h`` as FCIDUMP text; also written to ``sink`` if given.

    Only symmetry-unique nonzero integrals are emitted, with 17 significant
    digits so a reparse is exact.
    """
    d = h.d
    lines = [f"&FCI NORB={d},NELEC={h.n_elec},MS2={h.ms2},",
             "  ORBSYM=" + ",".join("1" * d) + ",",
             "  ISYM=1,",
             "&END"]
    fmt = "{:24.16e} {:4d} {:4d} {:4d} {:4d}"
    for i in range(d):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(d):
                for l in range(k + 1):
                    if k * (k + 1) // 2 + l > ij:
                        continue
                    v = h.eri[i, j, k, l]
                    if v != 0.0:
                        lines.append(fmt.format(v, i + 1, j + 1, k + 1, l + 1))
    for i in range(d):
        for j in range(i + 1):
            v = h.h1[i, j]
            if v != 0.0:
                lines.append(fmt.format(v, i + 1, j + 1, 0, 0))
    lines.append(fmt.format(h.e_core, 0, 0, 0, 0))
    text = "\n".join(lines) + "\n"
    if sink is not None:
        sink.write(text)
    return text


# ----------------------------------------------------------- lattice models

def build_hubbard(sites: int, t: float = 1.0, u: float = 4.0, periodic: bool = False,
                  n_elec: int | None = None, ms2: int | None = None) -> MolecularHamiltonian:
    """One-dimensional Hubbard chain (or ring) in the site basis.

    Half filling unless ``n_elec`` is given; ``ms2`` defaults to the lowest
    spin the electron count allows. A wrap bond is added only for
    ``periodic`` rings with more than two sites.
    """
    if sites < 1:
        raise ValueError("sites must be >= 1")
    h1 = np.zeros((sites, sites))
    for i in range(sites - 1):
        h1[i, i + 1] = h1[i + 1, i] = -t
    if periodic and sites > 2:
        h1[0, -1] = h1[-1, 0] = -t
    eri = np.zeros((sites,) * 4)
    for i in range(sites):
        eri[i, i, i, i] = u
    if n_elec is None:
        n_elec = sites
    if ms2 is None:
        ms2 = n_elec % 2
    return MolecularHamiltonian(d=sites, n_elec=n_elec, ms2=ms2, e_core=0.0, h1=h1, eri=eri)


# ------------------------------------------------------------ basis change

def _as_matrix(u_rot) -> np.ndarray:
    return np.asarray(getattr(u_rot, "u", u_rot), dtype=float)


def transform_integrals(h: MolecularHamiltonian, u_rot) -> MolecularHamiltonian:
    """Integrals in the rotated basis ``phi'_i = sum_j U_ij phi_j``.

    ``h1 -> U h1 U^T`` and each eri index is contracted with ``U`` in turn
    (four O(d^5) steps).
    """
    u = _as_matrix(u_rot)
    if u.shape != (h.d, h.d):
        raise ShapeError(f"rotation has shape {u.shape}, Hamiltonian has d={h.d}")
    if np.abs(u.T @ u - np.eye(h.d)).max() > ORTHO_TOL:
        raise ValueError("rotation matrix is not orthogonal within 1e-10")
    h1 = u @ h.h1 @ u.T
    eri = np.tensordot(u, h.eri, axes=(1, 0))                       # a q r s
    eri = np.tensordot(u, eri, axes=(1, 1)).transpose(1, 0, 2, 3)   # a b r s
    eri = np.tensordot(eri, u, axes=(2, 1)).transpose(0, 1, 3, 2)   # a b c s
    eri = np.tensordot(eri, u, axes=(3, 1))                         # a b c e
    return h.replace(h1=h1, eri=eri)


# ------------------------------------------------------------ orbital files

def write_orbitals(u_rot, sink: IO[str] | None = None) -> str:
    """Plain-text orbital matrix: ``d`` on the first line, then one row per
    optimised orbital holding its coefficients in the input basis."""
    u = _as_matrix(u_rot)
    rows = [str(u.shape[0])]
    rows += [" ".join(f"{x:.16e}" for x in row) for row in u]
    text = "\n".join(rows) + "\n"
    if sink is not None:
        sink.write(text)
    return text


def parse_orbitals(text: Union[str, IO[str]]) -> np.ndarray:
    if not isinstance(text, str):
        text = text.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FcidumpFormatError("empty orbital file")
    try:
        d = int(lines[0].split()[0])
    except ValueError:
        raise FcidumpFormatError(f"orbital file must start with the dimension, got {lines[0]!r}") from None
    if len(lines) - 1 != d:
        raise ShapeError(f"orbital file declares d={d} but has {len(lines) - 1} rows")
    u = np.array([[_parse_number(x) for x in ln.split()] for ln in lines[1:]])
    if u.shape != (d, d):
        raise ShapeError(f"orbital rows do not form a {d}x{d} matrix")
    return u


def read_orbitals(path) -> np.ndarray:
    with open(path) as f:
        return parse_orbitals(f)
