"""Disjoint-set forest over hashable keys, used to collapse link chains and
cross-camera identity groups."""

from __future__ import annotations

from typing import Hashable, Iterable


class UnionFind:
    def __init__(self, keys: Iterable[Hashable] = ()):
        self._parent: dict[Hashable, Hashable] = {}
        for k in keys:
            self.add(k)

    def add(self, key: Hashable) -> None:
        self._parent.setdefault(key, key)

    def find(self, key: Hashable) -> Hashable:
        root = key
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[key] != root:
            self._parent[key], key = root, self._parent[key]
        return root

    def union(self, a: Hashable, b: Hashable) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self._parent[rb] = ra

    def groups(self) -> dict[Hashable, list[Hashable]]:
        """Members per root, each group in insertion order."""
        out: dict[Hashable, list[Hashable]] = {}
        for k in self._parent:
            out.setdefault(self.find(k), []).append(k)
        return out
