"""Node subsets shared by the dual and monotonicity modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .walkspace import PathTree


class Provenance(str, Enum):
    SUPPORT = "support"
    CERTIFICATE = "certificate"
    DERIVED = "derived"


@dataclass(frozen=True)
class ContactSet:
    """A set of nodes of ``tree`` (stopped prefixes), sorted by node id."""

    tree: PathTree
    nodes: tuple[int, ...]
    provenance: Provenance = Provenance.DERIVED
    _members: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        members = frozenset(int(v) for v in self.nodes)
        object.__setattr__(self, "nodes", tuple(sorted(members)))
        object.__setattr__(self, "_members", members)

    def __contains__(self, v) -> bool:
        return int(v) in self._members

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.tree.n_nodes, dtype=bool)
        m[list(self.nodes)] = True
        return m

    def keys(self) -> list[str]:
        return [self.tree.keys[v] for v in self.nodes]

    def mass(self, stop: np.ndarray):
        """Stop mass carried by the set."""
        zero = Fraction(0) if stop.dtype == object else 0.0
        return sum((stop[v] for v in self.nodes), zero)

    def issubset(self, other: "ContactSet") -> bool:
        return self._members <= other._members
