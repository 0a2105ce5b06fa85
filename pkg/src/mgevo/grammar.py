"""BNF grammars for grammatical evolution.

Nonterminals are written ``<name>`` and kept in productions with their angle
brackets, so a symbol is a nonterminal exactly when it is a key of
``Grammar.rules``. Everything else is terminal text; a derived sentence is the
plain concatenation of its terminals.

File syntax::

    # comment
    <start> ::= <exp>
    <exp>   ::= 0 | 1 <exp>
    <sum>   ::= <n> "*" <x> | <sum> " + " <n> "*" <x> \\
              | <n>

One rule per logical line, ``|`` between alternatives, a trailing backslash
continues the line. Quoted terminals keep their whitespace.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

Production = tuple[str, ...]

_NT_RE = re.compile(r"<[^<>\s|]+>")
_SPECIAL = set(" \t|<>\"'")


class GrammarError(ValueError):
    """Malformed or inconsistent grammar. ``line``/``col`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + where)


def is_nonterminal(symbol: str) -> bool:
    return _NT_RE.fullmatch(symbol) is not None


@dataclass(frozen=True, eq=False)
class Grammar:
    rules: Mapping[str, tuple[Production, ...]]
    start: str
    nonterminals: frozenset[str] = field(init=False)
    terminals: frozenset[str] = field(init=False)

    def __post_init__(self):
        rules = {nt: tuple(tuple(p) for p in alts) for nt, alts in self.rules.items()}
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "nonterminals", frozenset(rules))
        terms = {s for alts in rules.values() for p in alts for s in p if s not in rules}
        object.__setattr__(self, "terminals", frozenset(terms))
        self._validate()

    def _validate(self):
        if self.start not in self.rules:
            raise GrammarError(f"start symbol {self.start} has no rule")
        for nt, alts in self.rules.items():
            if not is_nonterminal(nt):
                raise GrammarError(f"bad nonterminal name {nt!r}")
            if not alts:
                raise GrammarError(f"{nt} has no alternatives")
            for prod in alts:
                if not prod:
                    raise GrammarError(f"{nt} has an empty alternative")
                for sym in prod:
                    if is_nonterminal(sym) and sym not in self.rules:
                        raise GrammarError(f"undefined nonterminal {sym} used in {nt}")
        cycle = _unit_cycle(self.rules)
        if cycle:
            raise GrammarError("non-terminating single-alternative cycle: " + " -> ".join(cycle))

    def alternatives(self, nt: str) -> tuple[Production, ...]:
        return self.rules[nt]

    def render(self) -> str:
        return render_bnf(self)


def _unit_cycle(rules: Mapping[str, Sequence[Production]]) -> list[str] | None:
    # A cycle through rules with one alternative would expand forever without
    # consuming a codon.
    graph = {
        nt: [s for s in alts[0] if s in rules]
        for nt, alts in rules.items()
        if len(alts) == 1
    }
    state: dict[str, int] = {}

    def visit(nt, path):
        state[nt] = 1
        for nxt in graph.get(nt, ()):
            if nxt not in graph:
                continue
            if state.get(nxt) == 1:
                return path + [nt, nxt]
            if nxt not in state:
                found = visit(nxt, path + [nt])
                if found:
                    return found
        state[nt] = 2
        return None

    for nt in graph:
        if nt not in state:
            found = visit(nt, [])
            if found:
                return found
    return None


class GrammarOverlay:
    """Per-mapping scratch view of a grammar with extra terminal alternatives.

    Appended alternatives come after the base ones, so ``codon % count``
    keeps selecting base alternatives at the same indices.
    """

    def __init__(self, base: Grammar):
        self.base = base
        self.appended: dict[str, list[str]] = {}
        self.rules: dict[str, tuple[Production, ...]] = dict(base.rules)

    def add(self, nt: str, terminal: str) -> None:
        extra = self.appended.setdefault(nt, [])
        if terminal in extra or (terminal,) in self.base.rules[nt]:
            raise ValueError(f"{terminal} is already an alternative of {nt}")
        extra.append(terminal)
        self.rules[nt] = self.rules[nt] + ((terminal,),)

    def reset(self) -> None:
        self.appended.clear()
        self.rules = dict(self.base.rules)

    def alternative_count(self, nt: str) -> int:
        return len(self.rules[nt])


def overlay_add_neuron_ref(overlay: GrammarOverlay, index: int, nt: str = "<xnList>") -> None:
    if index < 1:
        raise ValueError("neuron index must be >= 1")
    overlay.add(nt, f"h{index}")


# --- parsing -----------------------------------------------------------------


def _logical_lines(text: str):
    buf, buf_start = "", None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if buf_start is None:
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            buf_start = lineno
        if line.endswith("\\"):
            buf += line[:-1] + " "
            continue
        buf += line
        yield buf_start, buf
        buf, buf_start = "", None
    if buf_start is not None:
        yield buf_start, buf


def _tokenize_rhs(rhs: str, line: int, col0: int) -> list[Production]:
    alts: list[list[str]] = [[]]
    i, n = 0, len(rhs)
    while i < n:
        ch = rhs[i]
        if ch in " \t":
            i += 1
        elif ch == "|":
            alts.append([])
            i += 1
        elif ch in "\"'":
            end = rhs.find(ch, i + 1)
            if end < 0:
                raise GrammarError("unterminated quoted terminal", line, col0 + i)
            if end == i + 1:
                raise GrammarError("empty quoted terminal", line, col0 + i)
            alts[-1].append(rhs[i + 1:end])
            i = end + 1
        elif ch == "<":
            m = _NT_RE.match(rhs, i)
            if not m:
                raise GrammarError("malformed nonterminal", line, col0 + i)
            alts[-1].append(m.group())
            i = m.end()
        else:
            j = i
            while j < n and rhs[j] not in _SPECIAL:
                j += 1
            if j == i:
                raise GrammarError(f"unexpected character {ch!r}", line, col0 + i)
            alts[-1].append(rhs[i:j])
            i = j
    for k, alt in enumerate(alts):
        if not alt:
            raise GrammarError(f"empty alternative #{k + 1}", line, col0)
    return [tuple(a) for a in alts]


def parse_bnf(text: str) -> Grammar:
    """Parse BNF text; the first rule's left-hand side is the start symbol."""
    if not text or not text.strip():
        raise GrammarError("empty grammar text")
    rules: dict[str, tuple[Production, ...]] = {}
    refs: list[tuple[str, int]] = []
    start = None
    for lineno, line in _logical_lines(text):
        lhs, sep, rhs = line.partition("::=")
        if not sep:
            raise GrammarError("expected '::='", lineno, 1)
        name = lhs.strip()
        if not is_nonterminal(name):
            col = len(lhs) - len(lhs.lstrip()) + 1
            raise GrammarError(f"left-hand side {name!r} is not a nonterminal", lineno, col)
        if name in rules:
            raise GrammarError(f"duplicate rule for {name}", lineno, 1)
        alts = _tokenize_rhs(rhs, lineno, len(lhs) + 4)
        rules[name] = tuple(alts)
        refs.extend((s, lineno) for p in alts for s in p if is_nonterminal(s))
        if start is None:
            start = name
    if start is None:
        raise GrammarError("no rules found")
    for sym, lineno in refs:
        if sym not in rules:
            raise GrammarError(f"undefined nonterminal {sym}", lineno, 1)
    return Grammar(rules, start)


def _render_symbol(sym: str, nts) -> str:
    if sym in nts:
        return sym
    if any(ch in _SPECIAL for ch in sym) or "::=" in sym:
        quote = "'" if '"' in sym else '"'
        return f"{quote}{sym}{quote}"
    return sym


def render_bnf(grammar: Grammar) -> str:
    order = list(dict.fromkeys([grammar.start, *grammar.rules]))
    lines = []
    for nt in order:
        alts = " | ".join(
            " ".join(_render_symbol(s, grammar.rules) for s in prod) for prod in grammar.rules[nt]
        )
        lines.append(f"{nt} ::= {alts}")
    return "\n".join(lines) + "\n"


# --- the neuron-generating grammar -------------------------------------------

MODULAR_VARIANTS = frozenset({"MGE", "ALPHA", "BETA"})


def output_count(c: int) -> int:
    """Binary tasks use one sigmoid output; otherwise one output per class."""
    return 1 if c <= 2 else c


def _number_rules(weight_digits: int | None) -> list[str]:
    if weight_digits is None:
        digitlist = "<Digitlist> ::= <Digit> | <Digit> <Digitlist>"
    elif weight_digits < 1:
        raise ValueError("weight_digits must be >= 1")
    else:
        digitlist = "<Digitlist> ::= " + " ".join(["<Digit>"] * weight_digits)
    return [
        '<Number> ::= <Sign> "0." <Digitlist>',
        '<Sign> ::= "+" | "-"',
        digitlist,
        "<Digit> ::= " + " | ".join(str(k) for k in range(10)),
    ]


def neuron_grammar_text(d: int, c: int, variant: str, weight_digits: int | None = None,
                        network: bool = False) -> str:
    """BNF text of the neuron grammar.

    With ``network=True`` a ``<Net>`` start rule produces ``;``-separated
    neurons; this is the whole-network grammar of the plain GE baseline.
    """
    if d < 1 or c < 1:
        raise ValueError("need d >= 1 and c >= 1")
    variant = variant.upper()
    single_out = variant in MODULAR_VARIANTS or variant == "GE_BASELINE"
    conn = '"(" <OutputNeuron> ":" <Number> ")"'
    if single_out:
        head = f'<S> ::= {conn} "*sig(" <Sum> " + " <Number> "*1)"'
    else:
        head = '<S> ::= <OutputConns> "*sig(" <Sum> " + " <Number> "*1)"'
    lines = []
    if network:
        lines.append('<Net> ::= <S> | <S> ";" <Net>')
    lines.append(head)
    if not single_out:
        lines.append(f"<OutputConns> ::= {conn} | <OutputConns> {conn}")
    lines += [
        "<OutputNeuron> ::= " + " | ".join(f"output{k}" for k in range(1, output_count(c) + 1)),
        '<Sum> ::= <Number> "*" <xnList> | <Sum> " + " <Number> "*" <xnList>',
        "<xnList> ::= " + " | ".join(f"x{i}" for i in range(1, d + 1)),
    ]
    lines += _number_rules(weight_digits)
    return "\n".join(lines) + "\n"


def build_neuron_grammar(d: int, c: int, variant: str = "MGE",
                         weight_digits: int | None = None) -> Grammar:
    """Neuron grammar for ``d`` features and ``c`` classes.

    Modular variants (MGE, ALPHA, BETA) fix exactly one output connection per
    neuron; ETA and MU allow a list of them through ``<OutputConns>``.
    ``weight_digits`` fixes the number of decimals in every weight instead of
    the recursive digit list.
    """
    return parse_bnf(neuron_grammar_text(d, c, variant, weight_digits))


def build_network_grammar(d: int, c: int, weight_digits: int | None = None) -> Grammar:
    """Whole-network grammar for the GE baseline (single hidden layer)."""
    return parse_bnf(neuron_grammar_text(d, c, "GE_BASELINE", weight_digits, network=True))


G1_TEXT = "<start> ::= <exp>\n<exp> ::= 0 | 1 <exp>\n"
