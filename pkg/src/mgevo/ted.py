"""Ordered tree edit distance with unit costs (Zhang-Shasha keyroot DP)."""
from __future__ import annotations

import numpy as np
from numba import njit

from .tree import Node


def _tree_arrays(root: Node, codes: dict[str, int]):
    labels: list[int] = []
    lml: list[int] = []

    def walk(node: Node) -> int:
        first = None
        for ch in node.children:
            leftmost = walk(ch)
            if first is None:
                first = leftmost
        idx = len(labels)
        labels.append(codes.setdefault(node.label, len(codes)))
        lml.append(idx if first is None else first)
        return lml[idx]

    walk(root)
    seen: set[int] = set()
    keyroots = []
    for i in range(len(labels) - 1, -1, -1):
        if lml[i] not in seen:
            seen.add(lml[i])
            keyroots.append(i)
    keyroots.reverse()
    return (np.asarray(labels, dtype=np.int64), np.asarray(lml, dtype=np.int64),
            np.asarray(keyroots, dtype=np.int64))


@njit(cache=True)
def _zhang_shasha(lab1, l1, kr1, lab2, l2, kr2):
    n1, n2 = lab1.shape[0], lab2.shape[0]
    td = np.zeros((n1, n2), dtype=np.int64)
    fd = np.zeros((n1 + 1, n2 + 1), dtype=np.int64)
    for a in range(kr1.shape[0]):
        i = kr1[a]
        for b in range(kr2.shape[0]):
            j = kr2[b]
            li, lj = l1[i], l2[j]
            m = i - li + 2
            n = j - lj + 2
            ioff, joff = li - 1, lj - 1
            fd[0, 0] = 0
            for x in range(1, m):
                fd[x, 0] = fd[x - 1, 0] + 1
            for y in range(1, n):
                fd[0, y] = fd[0, y - 1] + 1
            for x in range(1, m):
                xi = x + ioff
                for y in range(1, n):
                    yj = y + joff
                    dele = fd[x - 1, y] + 1
                    ins = fd[x, y - 1] + 1
                    if l1[xi] == li and l2[yj] == lj:
                        ren = fd[x - 1, y - 1] + (0 if lab1[xi] == lab2[yj] else 1)
                        best = min(dele, ins, ren)
                        fd[x, y] = best
                        td[xi, yj] = best
                    else:
                        p = l1[xi] - 1 - ioff
                        q = l2[yj] - 1 - joff
                        fd[x, y] = min(dele, ins, fd[p, q] + td[xi, yj])
    return td[n1 - 1, n2 - 1]


def tree_edit_distance(a: Node | None, b: Node | None) -> int:
    """Minimum number of node insertions, deletions and renames turning ``a`` into ``b``.

    ``None`` stands for the empty tree.
    """
    if a is None or b is None:
        return (a.size() if a is not None else 0) + (b.size() if b is not None else 0)
    if a == b:
        return 0
    codes: dict[str, int] = {}
    ta = _tree_arrays(a, codes)
    tb = _tree_arrays(b, codes)
    return int(_zhang_shasha(*ta, *tb))
