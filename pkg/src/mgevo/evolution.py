"""Generational loop: tournament selection, crossover, mutation, elitist replacement.

Lower fitness is better. Invalid individuals get ``WORST`` (+inf), so they
lose every comparison against a valid one.

Every random draw comes from a generator seeded by ``(seed, generation,
stream, index)``; results do not depend on the order individuals are
evaluated in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .data import Dataset
from .genome import (DEFAULT_GENE_LENGTH, FlatGenotype, ModularGenotype, init_flat,
                     init_modular, random_gene)
from .grammar import Grammar
from .mapping import Variant, map_genotype
from .network import Network

WORST = math.inf
PROB_EPS = 1e-12

# seed-stream tags
_INIT, _SELECT, _PAIR, _MUTATE = 0, 1, 2, 3


@dataclass(frozen=True)
class EvolutionConfig:
    mu: int = 200
    generations: int = 500
    p_c: float = 0.9
    p_m_choices: tuple[float, ...] = (0.001, 0.002, 0.003, 0.01)
    tournament_r: int = 7
    p_elite: float = 0.05
    m: int = DEFAULT_GENE_LENGTH
    sigma_range: tuple[int, int] = (2, 10)
    max_wraps: int = 0
    variant: str = "MGE"
    fitness_kind: str = "cross_entropy"
    seed: int = 0
    # GE baseline only: initial codon-string length range
    flat_length_range: tuple[int, int] = (50, 150)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant).value)
        object.__setattr__(self, "p_m_choices", tuple(float(p) for p in self.p_m_choices))
        object.__setattr__(self, "sigma_range", tuple(int(v) for v in self.sigma_range))
        object.__setattr__(self, "flat_length_range", tuple(int(v) for v in self.flat_length_range))
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.mu < 2:
            out.append("mu: must be >= 2")
        if self.generations < 0:
            out.append("generations: must be >= 0")
        if not 0 <= self.p_c <= 1:
            out.append("p_c: must lie in [0, 1]")
        if not self.p_m_choices or any(not 0 <= p <= 1 for p in self.p_m_choices):
            out.append("p_m_choices: need probabilities in [0, 1]")
        if self.tournament_r < 1:
            out.append("tournament_r: must be >= 1")
        if not 0 < self.p_elite < 1:
            out.append("p_elite: must lie in (0, 1)")
        if self.m < 1:
            out.append("m: must be >= 1")
        lo, hi = self.sigma_range
        if not 1 <= lo <= hi:
            out.append("sigma_range: need 1 <= lo <= hi")
        if self.max_wraps < 0:
            out.append("max_wraps: must be >= 0")
        if self.fitness_kind not in ("cross_entropy", "mse"):
            out.append("fitness_kind: must be 'cross_entropy' or 'mse'")
        return out

    def with_(self, **changes) -> "EvolutionConfig":
        return dc_replace(self, **changes)


@dataclass
class Individual:
    genotype: ModularGenotype | FlatGenotype
    network: Network | None
    fitness: float

    @property
    def valid(self) -> bool:
        return self.network is not None


@dataclass
class GenerationStats:
    generation: int
    best_loss: float
    mean_loss: float
    best_neurons: int
    best_connections: int
    mean_connections: float
    invalid: int


@dataclass
class EvolutionResult:
    best: Individual
    history: list[GenerationStats]
    population: list[Individual]
    evaluations: int = 0


# --- fitness -------------------------------------------------------------------


def class_probabilities(net: Network, data: Dataset) -> np.ndarray:
    return net.forward_batch(data.features)


def fitness_cross_entropy(net: Network | None, data: Dataset) -> float:
    """Mean negative log-probability of the true class."""
    if net is None:
        return WORST
    p = class_probabilities(net, data)[np.arange(data.n), data.labels - 1]
    p = np.maximum(p, PROB_EPS)  # guards log(0); a certain right answer costs exactly 0
    return float(-np.mean(np.log(p)))


def squared_errors(net: Network, data: Dataset) -> np.ndarray:
    """Per-pattern mean squared error; binary nets compare their single output to y==1."""
    if net.binary:
        s = net.output_scores(data.features)[:, 0]
        return (s - (data.labels == 1)) ** 2
    probs = class_probabilities(net, data)
    return np.mean((probs - data.one_hot()) ** 2, axis=1)


def fitness_mse(net: Network | None, data: Dataset) -> float:
    if net is None:
        return WORST
    return float(np.mean(squared_errors(net, data)))


def rmse(net: Network, data: Dataset) -> float:
    return math.sqrt(fitness_mse(net, data))


def accuracy(net: Network, data: Dataset) -> float:
    return float(np.mean(net.predict_batch(data.features) == data.labels))


FITNESS = {"cross_entropy": fitness_cross_entropy, "mse": fitness_mse}


# --- operators ------------------------------------------------------------------


def crossover(p1: ModularGenotype, p2: ModularGenotype,
              rng: np.random.Generator) -> tuple[ModularGenotype, ModularGenotype]:
    """Left-aligned one-point crossover on gene boundaries; the prefixes swap."""
    short = min(len(p1), len(p2))
    if short < 2:
        return p1, p2
    k = int(rng.integers(1, short))
    c1 = ModularGenotype(p2.genes[:k] + p1.genes[k:])
    c2 = ModularGenotype(p1.genes[:k] + p2.genes[k:])
    return c1, c2


def _perturb(codons: Sequence[int], rate: float, rng: np.random.Generator) -> tuple[int, ...]:
    arr = np.asarray(codons, dtype=np.int64)
    hits = rng.random(arr.size) < rate
    if hits.any():
        arr = arr.copy()
        arr[hits] = rng.integers(0, 256, size=int(hits.sum()))
    return tuple(arr.tolist())


def mutate(g: ModularGenotype, rng: np.random.Generator,
           p_m_choices: Sequence[float] = (0.001, 0.002, 0.003, 0.01),
           m: int | None = None) -> ModularGenotype:
    """Gene addition/deletion with probability P_m, then codon replacement with P_m/2.

    P_m is drawn from ``p_m_choices`` on every call. A one-gene genotype is
    never shrunk.
    """
    p_m = float(p_m_choices[int(rng.integers(len(p_m_choices)))])
    if p_m == 0:
        return g
    genes = list(g.genes)
    if rng.random() < p_m:
        if rng.random() < 0.5:
            pos = int(rng.integers(0, len(genes) + 1))
            genes.insert(pos, random_gene(rng, m or len(genes[0])))
        elif len(genes) > 1:
            del genes[int(rng.integers(len(genes)))]
    return ModularGenotype(tuple(_perturb(gene, p_m / 2, rng) for gene in genes))


def crossover_flat(p1: FlatGenotype, p2: FlatGenotype,
                   rng: np.random.Generator) -> tuple[FlatGenotype, FlatGenotype]:
    """Left-aligned one-point crossover on codons; lengths are preserved, so only
    the length mutation changes a GE genotype's size."""
    n = min(len(p1), len(p2))
    if n < 2:
        return p1, p2
    k = int(rng.integers(1, n))
    return (FlatGenotype(p2.codons[:k] + p1.codons[k:]),
            FlatGenotype(p1.codons[:k] + p2.codons[k:]))


def mutate_flat(g: FlatGenotype, rng: np.random.Generator,
                p_m_choices: Sequence[float] = (0.001, 0.002, 0.003, 0.01),
                block: int = DEFAULT_GENE_LENGTH) -> FlatGenotype:
    """Codon replacement plus a length mutation inserting or deleting up to ``block`` codons."""
    p_m = float(p_m_choices[int(rng.integers(len(p_m_choices)))])
    if p_m == 0:
        return g
    codons = list(g.codons)
    if rng.random() < p_m:
        size = int(rng.integers(1, block + 1))
        if rng.random() < 0.5:
            pos = int(rng.integers(0, len(codons) + 1))
            codons[pos:pos] = rng.integers(0, 256, size=size).tolist()
        elif len(codons) > 1:
            size = min(size, len(codons) - 1)
            pos = int(rng.integers(0, len(codons) - size + 1))
            del codons[pos:pos + size]
    return FlatGenotype(_perturb(codons, p_m / 2, rng))


def tournament_select(pop: Sequence[Individual], r: int, rng: np.random.Generator) -> Individual:
    """Best of ``r`` uniform draws with replacement; ties go to the lower index."""
    draws = rng.integers(0, len(pop), size=r)
    winner = min(draws.tolist(), key=lambda i: (pop[i].fitness, i))
    w = pop[winner]
    return Individual(w.genotype, w.network, w.fitness)


def elite_count(mu: int, p_elite: float) -> int:
    return min(mu, max(1, math.ceil(p_elite * mu - 1e-9)))


def replace(current: Sequence[Individual], offspring: Sequence[Individual],
            p_elite: float) -> list[Individual]:
    """Best ``ceil(p_elite * mu)`` of the current population plus the best offspring."""
    mu = len(current)
    e = elite_count(mu, p_elite)
    rank = lambda pop: sorted(range(len(pop)), key=lambda i: (pop[i].fitness, i))
    elites = [current[i] for i in rank(current)[:e]]
    rest = [offspring[i] for i in rank(offspring)[:mu - e]]
    return elites + rest


# --- the loop ---------------------------------------------------------------------


@dataclass
class Operators:
    """Representation-specific pieces of the loop."""

    init: Callable[[np.random.Generator], object]
    crossover: Callable
    mutate: Callable

    @classmethod
    def for_config(cls, cfg: EvolutionConfig) -> "Operators":
        if cfg.variant == Variant.GE_BASELINE.value:
            return cls(
                init=lambda rng: init_flat(rng, cfg.flat_length_range),
                crossover=crossover_flat,
                mutate=lambda g, rng: mutate_flat(g, rng, cfg.p_m_choices, cfg.m),
            )
        return cls(
            init=lambda rng: init_modular(rng, cfg.sigma_range, cfg.m),
            crossover=crossover,
            mutate=lambda g, rng: mutate(g, rng, cfg.p_m_choices, cfg.m),
        )


def _rng(seed: int, generation: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, generation, stream, index])


def _stats(gen: int, pop: Sequence[Individual]) -> GenerationStats:
    best = min(pop, key=lambda ind: ind.fitness)
    finite = [ind.fitness for ind in pop if math.isfinite(ind.fitness)]
    conns = [ind.network.metrics().connections if ind.network else 0 for ind in pop]
    bm = best.network.metrics() if best.network else None
    return GenerationStats(
        generation=gen,
        best_loss=best.fitness,
        mean_loss=float(np.mean(finite)) if finite else math.nan,
        best_neurons=bm.neurons if bm else 0,
        best_connections=bm.connections if bm else 0,
        mean_connections=float(np.mean(conns)),
        invalid=sum(1 for ind in pop if ind.network is None),
    )


def evolve(config: EvolutionConfig, grammar: Grammar, data: Dataset | None = None,
           hooks: Iterable[Callable[[int, list[Individual], GenerationStats], None]] = (),
           fitness: Callable[[Network | None], float] | None = None,
           c: int | None = None, operators: Operators | None = None) -> EvolutionResult:
    """Run the generational loop and return the best individual of the last generation.

    ``fitness`` overrides the data-driven loss (used by the scalability
    analysis); otherwise ``config.fitness_kind`` on ``data`` is minimised.
    """
    if fitness is None:
        if data is None:
            raise ValueError("evolve needs data or a fitness function")
        loss = FITNESS[config.fitness_kind]
        fitness = lambda net: loss(net, data)
    if c is None:
        if data is None:
            raise ValueError("class count unknown: pass c or data")
        c = data.c
    ops = operators or Operators.for_config(config)
    seed = config.seed
    cache: dict = {}
    evaluations = 0

    def evaluate(genotype) -> Individual:
        nonlocal evaluations
        evaluations += 1
        hit = cache.get(genotype)
        if hit is None:
            net = map_genotype(genotype, grammar, config.variant, c, config.max_wraps)
            hit = (net, fitness(net))
            cache[genotype] = hit
        return Individual(genotype, *hit)

    pop = [evaluate(ops.init(_rng(seed, 0, _INIT, i))) for i in range(config.mu)]
    history = [_stats(0, pop)]
    for hook in hooks:
        hook(0, pop, history[-1])

    mu = config.mu
    for gen in range(1, config.generations + 1):
        sel = _rng(seed, gen, _SELECT)
        parents = [tournament_select(pop, config.tournament_r, sel) for _ in range(mu)]
        children = []
        for j in range(0, mu, 2):
            a = parents[j].genotype
            b = parents[(j + 1) % mu].genotype
            pair = _rng(seed, gen, _PAIR, j)
            if pair.random() < config.p_c:
                a, b = ops.crossover(a, b, pair)
            children.extend((a, b))
        children = children[:mu]
        offspring = [evaluate(ops.mutate(g, _rng(seed, gen, _MUTATE, i)))
                     for i, g in enumerate(children)]
        pop = replace(pop, offspring, config.p_elite)
        live = {ind.genotype for ind in pop}
        cache = {g: v for g, v in cache.items() if g in live}
        history.append(_stats(gen, pop))
        for hook in hooks:
            hook(gen, pop, history[-1])

    best = min(pop, key=lambda ind: ind.fitness)
    return EvolutionResult(best, history, pop, evaluations)
