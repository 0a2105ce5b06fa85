"""Representation analyses on random (static) populations.

* invalidity: share of random genotypes that map to no network;
* locality: tree edit distance between a network and its 1- and 2-bit mutants,
  per network size;
* scalability: evolve towards more connections and track the mean count.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .evolution import WORST, EvolutionConfig, evolve
from .genome import FlatGenotype, ModularGenotype, flip_hamming_bits, init_flat, init_modular, random_gene
from .grammar import Grammar, build_network_grammar, build_neuron_grammar
from .mapping import Variant, derive, map_genotype, map_neuron
from .network import Network
from .ted import tree_edit_distance

# grammar of the representation analyses: 30 features, 3-digit weights,
# one hidden layer, binary task (one output neuron)
LOCALITY_D = 30
LOCALITY_C = 2
LOCALITY_DIGITS = 3


def grammar_for(method, d: int, c: int, weight_digits: int | None = None) -> Grammar:
    method = Variant.parse(method)
    if method is Variant.GE_BASELINE:
        return build_network_grammar(d, c, weight_digits)
    return build_neuron_grammar(d, c, method.value, weight_digits)


def matched_lengths(config: EvolutionConfig) -> EvolutionConfig:
    """GE codon strings start as long as MGE genotypes: ``sigma_range * m`` codons."""
    lo, hi = config.sigma_range
    return config.with_(flat_length_range=(lo * config.m, hi * config.m))


def random_genotype(method, rng: np.random.Generator, config: EvolutionConfig):
    if Variant.parse(method) is Variant.GE_BASELINE:
        return init_flat(rng, config.flat_length_range)
    return init_modular(rng, config.sigma_range, config.m)


# --- invalidity ------------------------------------------------------------------


def invalidity_rate(variant, samples: int, config: EvolutionConfig, rng: np.random.Generator,
                    d: int = LOCALITY_D, c: int = LOCALITY_C, grammar: Grammar | None = None) -> float:
    """Share of ``samples`` random genotypes that map to an invalid individual."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    variant = Variant.parse(variant)
    grammar = grammar or grammar_for(variant, d, c)
    invalid = 0
    for _ in range(samples):
        g = random_genotype(variant, rng, config)
        if map_genotype(g, grammar, variant, c, config.max_wraps) is None:
            invalid += 1
    return invalid / samples


# --- locality -------------------------------------------------------------------------


@dataclass
class LocalityCell:
    method: str
    neurons: int
    k: int
    distances: list[int] = field(default_factory=list)
    invalid_mutants: int = 0
    complete: bool = True

    @property
    def mean(self) -> float:
        return float(np.mean(self.distances)) if self.distances else math.nan

    @property
    def std(self) -> float:
        return float(np.std(self.distances)) if self.distances else math.nan


@dataclass
class LocalityReport:
    cells: list[LocalityCell]
    requested: int

    def cell(self, method, neurons: int, k: int) -> LocalityCell:
        method = Variant.parse(method).value
        for c in self.cells:
            if (c.method, c.neurons, c.k) == (method, neurons, k):
                return c
        raise KeyError((method, neurons, k))

    def overall(self, method, k: int) -> tuple[float, float, int]:
        method = Variant.parse(method).value
        dist = [x for c in self.cells if c.method == method and c.k == k for x in c.distances]
        if not dist:
            return math.nan, math.nan, 0
        return float(np.mean(dist)), float(np.std(dist)), len(dist)

    def methods(self) -> list[str]:
        return list(dict.fromkeys(c.method for c in self.cells))

    def rows(self) -> list[dict]:
        return [
            {"method": c.method, "neurons": c.neurons, "hamming": c.k, "samples": len(c.distances),
             "mean": c.mean, "std": c.std, "invalid_mutants": c.invalid_mutants,
             "complete": c.complete}
            for c in self.cells
        ]

    def summary_rows(self) -> list[dict]:
        out = []
        for m in self.methods():
            for k in sorted({c.k for c in self.cells}):
                mean, std, n = self.overall(m, k)
                out.append({"method": m, "hamming": k, "samples": n, "mean": mean, "std": std})
        return out


def _sample_mge(n: int, grammar: Grammar, m: int, rng: np.random.Generator,
                max_attempts: int) -> ModularGenotype | None:
    """Genotype of ``n`` genes that all map; failing genes are redrawn."""
    genes = []
    attempts = 0
    while len(genes) < n:
        if attempts >= max_attempts:
            return None
        attempts += 1
        gene = random_gene(rng, m)
        if map_neuron(gene, grammar) is not None:
            genes.append(gene)
    return ModularGenotype(tuple(genes))


def _ge_stream(targets: Sequence[int], grammar: Grammar, m: int, rng: np.random.Generator,
               per_cell: int, max_attempts: int,
               tail: bool = False) -> tuple[dict[int, list[FlatGenotype]], bool]:
    """Rejection-sample flat genotypes that map to exactly ``n`` neurons.

    Codons are drawn lazily: only the prefix the derivation reads decides
    acceptance. By default the genotype is that prefix (its effective part);
    with ``tail=True`` it is padded with random codons to ``n * m``, the
    length of an MGE genotype of the same size. One stream feeds every target
    size at once.
    """
    want = {n: per_cell for n in targets}
    found: dict[int, list[FlatGenotype]] = {n: [] for n in targets}
    cap = max(targets) * m
    chunk = 64
    attempts = 0
    while any(want.values()):
        if attempts >= max_attempts:
            return found, False
        attempts += 1
        codons: list[int] = rng.integers(0, 256, size=min(chunk, cap)).tolist()
        while True:
            res = derive(codons, grammar.rules, grammar.start, 0)
            if res.sentence is not None or len(codons) >= cap:
                break
            codons += rng.integers(0, 256, size=min(len(codons), cap - len(codons))).tolist()
        if res.sentence is None:
            continue
        size = res.sentence.count(";") + 1
        if not want.get(size) or (tail and res.used > size * m):
            continue
        full = codons[:size * m if tail else res.used]
        if tail and len(full) < size * m:
            full += rng.integers(0, 256, size=size * m - len(full)).tolist()
        found[size].append(FlatGenotype(tuple(full)))
        want[size] -= 1
    return found, True


def locality_experiment(methods: Iterable = ("MGE", "GE_BASELINE"),
                        neuron_counts: Iterable[int] = range(2, 10),
                        per_cell_samples: int = 1000,
                        config: EvolutionConfig | None = None,
                        rng: np.random.Generator | None = None,
                        hamming: Sequence[int] = (1, 2),
                        d: int = LOCALITY_D, c: int = LOCALITY_C,
                        weight_digits: int | None = LOCALITY_DIGITS,
                        invalid_mutants: str = "empty_tree",
                        max_attempts: int = 5_000_000,
                        ge_tail: bool = False) -> LocalityReport:
    """Tree edit distance between random networks of each size and their Hamming mutants.

    ``invalid_mutants``: ``"empty_tree"`` scores an invalid mutant by the
    distance to the empty tree (the original's node count); ``"exclude"``
    drops it. ``ge_tail`` pads GE genotypes with unread codons up to the
    MGE length ``n * m`` instead of keeping only the codons the mapper reads.
    """
    if per_cell_samples < 1:
        raise ValueError("per_cell_samples must be >= 1")
    if invalid_mutants not in ("empty_tree", "exclude"):
        raise ValueError("invalid_mutants must be 'empty_tree' or 'exclude'")
    config = config or EvolutionConfig()
    rng = rng or np.random.default_rng(config.seed)
    sizes = sorted(set(neuron_counts))
    cells: list[LocalityCell] = []
    for method in (Variant.parse(mm) for mm in methods):
        grammar = grammar_for(method if method is Variant.GE_BASELINE else Variant.MGE,
                              d, c, weight_digits)
        variant = Variant.GE_BASELINE if method is Variant.GE_BASELINE else Variant.MGE
        if method is Variant.GE_BASELINE:
            pools, complete = _ge_stream(sizes, grammar, config.m, rng, per_cell_samples,
                                         max_attempts, ge_tail)
        else:
            pools, complete = {}, True
            for n in sizes:
                pool = []
                for _ in range(per_cell_samples):
                    g = _sample_mge(n, grammar, config.m, rng, max_attempts)
                    if g is None:
                        complete = False
                        break
                    pool.append(g)
                pools[n] = pool
        for n in sizes:
            row = {k: LocalityCell(method.value, n, k, complete=complete and len(pools[n]) == per_cell_samples)
                   for k in hamming}
            for g in pools[n]:
                net = map_genotype(g, grammar, variant, c)
                tree = net.to_eval_tree()
                for k in hamming:
                    mutant = map_genotype(flip_hamming_bits(g, k, rng), grammar, variant, c)
                    if mutant is None:
                        row[k].invalid_mutants += 1
                        if invalid_mutants == "exclude":
                            continue
                        row[k].distances.append(tree.size())
                    else:
                        row[k].distances.append(tree_edit_distance(tree, mutant.to_eval_tree()))
            cells.extend(row.values())
    return LocalityReport(cells, per_cell_samples)


# --- scalability -------------------------------------------------------------------


def connection_fitness(net: Network | None) -> float:
    """Minimising this maximises the connection count."""
    return WORST if net is None else -float(net.metrics().connections)


def scalability_experiment(methods: Iterable = ("MGE", "GE_BASELINE"), generations: int = 100,
                           mu: int = 50, rng: np.random.Generator | None = None,
                           repeats: int = 1, config: EvolutionConfig | None = None,
                           d: int = LOCALITY_D, c: int = LOCALITY_C,
                           weight_digits: int | None = LOCALITY_DIGITS) -> dict[str, np.ndarray]:
    """Mean connection count per generation, averaged over repeats: {method: array}.

    All methods share crossover and mutation probabilities; GE genotypes start
    with the same codon counts as MGE genotypes and get a length mutation.
    """
    base = matched_lengths((config or EvolutionConfig()).with_(mu=mu, generations=generations))
    rng = rng or np.random.default_rng(base.seed)
    seeds = rng.integers(0, 2**31 - 1, size=repeats).tolist()
    out = {}
    for method in (Variant.parse(mm) for mm in methods):
        grammar = grammar_for(method, d, c, weight_digits)
        curves = []
        for s in seeds:
            cfg = base.with_(variant=method.value, seed=int(s))
            result = evolve(cfg, grammar, fitness=connection_fitness, c=c)
            curves.append([h.mean_connections for h in result.history])
        out[method.value] = np.mean(np.asarray(curves, dtype=float), axis=0)
    return out


# --- CSV helpers ---------------------------------------------------------------------


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def scalability_rows(curves: dict[str, np.ndarray]) -> list[dict]:
    rows = []
    for method, curve in curves.items():
        rows.extend({"method": method, "generation": g, "mean_connections": float(v)}
                    for g, v in enumerate(curve))
    return rows
