"""Labeled ordered trees."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Node:
    label: str
    children: tuple["Node", ...] = field(default=())

    def size(self) -> int:
        return 1 + sum(ch.size() for ch in self.children)

    def depth(self) -> int:
        return 1 + max((ch.depth() for ch in self.children), default=0)

    def postorder(self) -> list["Node"]:
        out: list[Node] = []
        stack = [(self, False)]
        while stack:
            node, seen = stack.pop()
            if seen:
                out.append(node)
                continue
            stack.append((node, True))
            stack.extend((ch, False) for ch in reversed(node.children))
        return out

    def leaves(self) -> list[str]:
        return [n.label for n in self.postorder() if not n.children]

    def __str__(self):
        if not self.children:
            return self.label
        return f"{self.label}(" + " ".join(str(c) for c in self.children) + ")"


def node(label: str, *children: Node) -> Node:
    return Node(label, tuple(children))
