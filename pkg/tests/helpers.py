"""Test-side oracles written independently of the package code."""
from __future__ import annotations

import math
import re


def choose(rules, start, choices):
    """Encode a list of alternative indices as codons for a leftmost derivation.

    Each choice is used at the next nonterminal with more than one alternative;
    the codon equals the index, so ``codon % count`` gives it back.
    """
    codons = []
    it = iter(choices)
    stack = [start]
    while stack:
        sym = stack.pop()
        if sym not in rules:
            continue
        alts = rules[sym]
        idx = 0
        if len(alts) > 1:
            idx = next(it)
            assert 0 <= idx < len(alts)
            codons.append(idx)
        stack.extend(reversed(alts[idx]))
    return codons


def sig(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


_TOKEN = re.compile(r"\s*(sig\(|[+-]?\d+(?:\.\d+)?|[xh]\d+|[()*+])")


def eval_expression(text: str, env: dict[str, float]) -> float:
    """Recursive-descent evaluator for the printed network expressions.

    Grammar: expr := term (' + ' term)* ; term := factor ('*' factor)* ;
    factor := number | name | 'sig(' expr ')' | '(' expr ')'.
    """
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot tokenize at {text[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else None

    def take():
        nonlocal i
        i += 1
        return tokens[i - 1]

    def expr():
        v = term()
        while peek() == "+":
            take()
            v += term()
        return v

    def term():
        v = factor()
        while peek() == "*":
            take()
            v *= factor()
        return v

    def factor():
        t = take()
        if t == "sig(":
            v = expr()
            assert take() == ")"
            return sig(v)
        if t == "(":
            v = expr()
            assert take() == ")"
            return v
        if t[0] in "xh":
            return env[t]
        return float(t)

    v = expr()
    assert i == len(tokens), tokens[i:]
    return v


def network_outputs_from_dump(dump: str, x) -> list[float]:
    """Evaluate ``Network.dump()`` text line by line: h1, h2, ..., output1, ..."""
    env = {f"x{j + 1}": float(v) for j, v in enumerate(x)}
    outs = []
    for line in dump.splitlines():
        name, expr = (s.strip() for s in line.split("=", 1))
        val = eval_expression(expr, env)
        env[name] = val
        if name.startswith("output"):
            outs.append(val)
    return outs


def class_probabilities(scores: list[float]) -> list[float]:
    if len(scores) == 1:
        return [scores[0], 1.0 - scores[0]]
    e = [math.exp(s) for s in scores]
    z = sum(e)
    return [v / z for v in e]
