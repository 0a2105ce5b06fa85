"""Genotype to phenotype mapping.

``derive`` is the plain GE mapper (leftmost expansion, codon mod alternative
count, optional wrapping). MGE maps every gene to one neuron with the neuron
grammar and assembles the successful ones into a network.
"""
from __future__ import annotations

import enum
from functools import lru_cache
from typing import Mapping, NamedTuple, Sequence

from .genome import FlatGenotype, ModularGenotype
from .grammar import Grammar, GrammarOverlay, output_count
from .network import Network, Neuron, assemble, parse_neuron

NEURON_REF_NT = "<xnList>"


class Variant(str, enum.Enum):
    MGE = "MGE"        # single-layer modules, one output per neuron
    ALPHA = "ALPHA"    # multi-layer modules, links only inside a module
    BETA = "BETA"      # multi-layer, one output per neuron, links across modules
    ETA = "ETA"        # monolithic single layer
    MU = "MU"          # monolithic multi-layer
    GE_BASELINE = "GE_BASELINE"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        raw = str(value).strip()
        aliases = {"α": "ALPHA", "β": "BETA", "η": "ETA", "μ": "MU", "GE": "GE_BASELINE"}
        key = aliases.get(raw.lower(), raw.upper().replace("-", "_"))
        return cls(aliases.get(key, key))

    @property
    def modular(self) -> bool:
        return self in (Variant.MGE, Variant.ALPHA, Variant.BETA)

    @property
    def multilayer(self) -> bool:
        return self in (Variant.ALPHA, Variant.BETA, Variant.MU)


MGE_VARIANTS = (Variant.MGE, Variant.ALPHA, Variant.BETA, Variant.ETA, Variant.MU)


class Derivation(NamedTuple):
    sentence: str | None
    used: int

    @property
    def valid(self) -> bool:
        return self.sentence is not None


def derive(codons: Sequence[int], rules: Mapping[str, Sequence[tuple[str, ...]]],
           start: str, max_wraps: int = 0) -> Derivation:
    """Leftmost derivation driven by ``codons``.

    A codon is read only where a nonterminal has more than one alternative.
    Exhausting the codons re-reads them from the start up to ``max_wraps``
    times; after that the derivation is invalid (``sentence is None``).
    ``used`` counts codon reads, wraps included.
    """
    n = len(codons)
    out: list[str] = []
    stack = [start]
    pos = wraps = 0
    pop, push, emit = stack.pop, stack.extend, out.append
    while stack:
        sym = pop()
        alts = rules.get(sym)
        if alts is None:
            emit(sym)
            continue
        k = len(alts)
        if k == 1:
            prod = alts[0]
        else:
            if pos == n:
                if wraps >= max_wraps or n == 0:
                    return Derivation(None, wraps * n + pos)
                wraps += 1
                pos = 0
            prod = alts[codons[pos] % k]
            pos += 1
        push(prod[::-1])
    return Derivation("".join(out), wraps * n + pos)


def ge_derive(genotype: FlatGenotype | Sequence[int], grammar: Grammar,
              max_wraps: int = 0) -> Derivation:
    codons = genotype.codons if isinstance(genotype, FlatGenotype) else genotype
    return derive(codons, grammar.rules, grammar.start, max_wraps)


def map_neuron(gene: Sequence[int], grammar: Grammar | GrammarOverlay,
               start: str = "<S>") -> Neuron | None:
    """Map one gene to a neuron, without wrapping; ``None`` when the gene runs out."""
    result = derive(gene, grammar.rules, start, 0)
    if result.sentence is None:
        return None
    return parse_neuron(result.sentence)


@lru_cache(maxsize=1 << 18)
def _map_gene(gene: tuple[int, ...], grammar: Grammar, refs: tuple[str, ...]) -> Neuron | None:
    rules = grammar.rules
    if refs:
        rules = dict(rules)
        rules[NEURON_REF_NT] = rules[NEURON_REF_NT] + tuple((r,) for r in refs)
    result = derive(gene, rules, "<S>", 0)
    return None if result.sentence is None else parse_neuron(result.sentence)


def _feature_count(grammar: Grammar) -> int:
    return sum(1 for (sym,) in grammar.rules[NEURON_REF_NT] if sym.startswith("x"))


def map_individual(genotype: ModularGenotype, grammar: Grammar, variant,
                   c: int) -> Network | None:
    """Map every gene in order; ``None`` marks an invalid individual (no gene mapped).

    Multi-layer variants append ``h<k>`` to ``<xnList>`` after the k-th
    successful gene so later genes may read it. ALPHA first sorts genes into
    one group per output by ``first codon mod outputs`` (the codon is only
    peeked), maps group after group with the references reset in between,
    and pins each neuron's output connection to its group.
    """
    variant = Variant.parse(variant)
    d = _feature_count(grammar)
    overlay = GrammarOverlay(grammar)
    neurons: list[Neuron] = []

    def run(genes, group=None):
        for gene in genes:
            # memoised on the overlay state; same result as map_neuron(gene, overlay)
            refs = tuple(overlay.appended.get(NEURON_REF_NT, ()))
            neuron = _map_gene(tuple(gene), grammar, refs)
            if neuron is None:
                continue
            if group is not None:
                neuron = Neuron(((group, neuron.outputs[0][1]),), neuron.inputs, neuron.bias)
            neurons.append(neuron)
            if variant.multilayer:
                overlay.add(NEURON_REF_NT, f"h{len(neurons)}")

    if variant is Variant.ALPHA:
        k = output_count(c)
        groups: list[list] = [[] for _ in range(k)]
        for gene in genotype.genes:
            groups[gene[0] % k].append(gene)
        for g, genes in enumerate(groups, 1):
            overlay.reset()
            run(genes, group=g)
    else:
        run(genotype.genes)

    if not neurons:
        return None
    return assemble(neurons, c, d, variant.value)


def ge_map_network(genotype: FlatGenotype, grammar: Grammar, c: int,
                   max_wraps: int = 0) -> Network | None:
    """GE baseline: derive a whole ``;``-separated network sentence from one codon string."""
    result = ge_derive(genotype, grammar, max_wraps)
    if result.sentence is None:
        return None
    neurons = [parse_neuron(s) for s in result.sentence.split(";")]
    return assemble(neurons, c, _feature_count(grammar), Variant.GE_BASELINE.value)


def map_genotype(genotype, grammar: Grammar, variant, c: int, max_wraps: int = 0) -> Network | None:
    """Dispatch on genotype kind: flat codon strings use the GE baseline mapper."""
    if isinstance(genotype, FlatGenotype):
        return ge_map_network(genotype, grammar, c, max_wraps)
    return map_individual(genotype, grammar, variant, c)


def topology_violations(net: Network, variant) -> list[str]:
    """Structural rules a network of ``variant`` must satisfy; empty when it complies."""
    variant = Variant.parse(variant)
    problems = []
    for i, neuron in enumerate(net.hidden, 1):
        refs = neuron.hidden_sources()
        if any(j >= i for j in refs):
            problems.append(f"h{i} reads a later neuron")
        if variant.modular and len(neuron.outputs) != 1:
            problems.append(f"h{i} has {len(neuron.outputs)} output connections")
        if not variant.multilayer and refs:
            problems.append(f"h{i} reads hidden neurons in a single-layer variant")
        if variant is Variant.ALPHA:
            own = neuron.outputs[0][0]
            for j in refs:
                if net.hidden[j - 1].outputs[0][0] != own:
                    problems.append(f"h{i} (module {own}) reads h{j} from another module")
    return problems
