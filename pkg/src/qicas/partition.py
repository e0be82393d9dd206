from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import PartitionError

__all__ = ["CasPartition"]


@dataclass(frozen=True)
class CasPartition:
    """Disjoint active / closed / virtual orbital index sets.

    ``n_cas`` is the number of electrons left in the active orbitals once
    every closed orbital is doubly occupied.
    """

    active: tuple
    closed: tuple
    virtual: tuple
    n_cas: int

    def __post_init__(self):
        for name in ("active", "closed", "virtual"):
            object.__setattr__(self, name, tuple(sorted(int(i) for i in getattr(self, name))))
        sets = [set(self.active), set(self.closed), set(self.virtual)]
        if sum(map(len, sets)) != len(set().union(*sets)):
            raise PartitionError(f"partition sets overlap: {self.active}/{self.closed}/{self.virtual}")
        if sum(map(len, sets)) != sum(len(getattr(self, n)) for n in ("active", "closed", "virtual")):
            raise PartitionError("duplicate indices in partition")
        if self.n_cas < 0 or self.n_cas > 2 * len(self.active):
            raise PartitionError(f"n_cas={self.n_cas} does not fit {len(self.active)} active orbitals")

    @classmethod
    def from_sizes(cls, d: int, n_elec: int, n_cas: int, d_cas: int) -> "CasPartition":
        """Ordered-basis convention: closed orbitals first, then the active
        block, then virtuals."""
        n_closed, odd = divmod(n_elec - n_cas, 2)
        if odd or n_closed < 0 or n_closed + d_cas > d:
            raise PartitionError(f"CAS({n_cas},{d_cas}) incompatible with {n_elec} electrons in {d} orbitals")
        return cls(active=range(n_closed, n_closed + d_cas), closed=range(n_closed),
                   virtual=range(n_closed + d_cas, d), n_cas=n_cas)

    @classmethod
    def from_active(cls, d: int, n_elec: int, n_cas: int, active: Iterable[int]) -> "CasPartition":
        """Active set given explicitly; the remaining orbitals fill the
        closed shell in index order and the rest are virtual."""
        active = sorted(int(i) for i in active)
        n_closed, odd = divmod(n_elec - n_cas, 2)
        rest = [i for i in range(d) if i not in active]
        if odd or n_closed < 0 or n_closed > len(rest):
            raise PartitionError(f"CAS({n_cas},{len(active)}) incompatible with {n_elec} electrons in {d} orbitals")
        return cls(active=active, closed=rest[:n_closed], virtual=rest[n_closed:], n_cas=n_cas)

    @property
    def d(self) -> int:
        return len(self.active) + len(self.closed) + len(self.virtual)

    @property
    def d_cas(self) -> int:
        return len(self.active)

    @property
    def nonactive(self) -> tuple:
        return tuple(sorted(self.closed + self.virtual))

    def n_elec(self) -> int:
        return self.n_cas + 2 * len(self.closed)

    def check(self, d: int, n_elec: int | None = None) -> None:
        covered = set(self.active) | set(self.closed) | set(self.virtual)
        if covered != set(range(d)):
            raise PartitionError(f"partition does not cover orbitals 0..{d - 1}")
        if n_elec is not None and self.n_elec() != n_elec:
            raise PartitionError(
                f"partition holds {self.n_elec()} electrons, system has {n_elec}")
