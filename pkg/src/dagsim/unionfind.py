from __future__ import annotations

from typing import Dict, Hashable, Iterable, List


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, elements: Iterable[Hashable] = ()) -> None:
        self.parent: Dict[Hashable, Hashable] = {}
        self.size: Dict[Hashable, int] = {}
        for el in elements:
            self.add(el)

    def add(self, el: Hashable) -> None:
        if el not in self.parent:
            self.parent[el] = el
            self.size[el] = 1

    def find(self, el: Hashable) -> Hashable:
        parent = self.parent
        while parent[el] != el:
            parent[el] = parent[parent[el]]
            el = parent[el]
        return el

    def union(self, a: Hashable, b: Hashable) -> Hashable:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def groups(self) -> List[List[Hashable]]:
        """Components in first-insertion order, members in insertion order."""
        by_root: Dict[Hashable, List[Hashable]] = {}
        for el in self.parent:
            by_root.setdefault(self.find(el), []).append(el)
        return list(by_root.values())
