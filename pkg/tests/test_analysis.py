import math

import numpy as np
import pytest

from mgevo import analysis
from mgevo.analysis import (LocalityReport, connection_fitness, grammar_for, invalidity_rate,
                            locality_experiment, matched_lengths, rows_to_csv,
                            scalability_experiment, scalability_rows)
from mgevo.evolution import EvolutionConfig, evolve
from mgevo.grammar import parse_bnf
from mgevo.mapping import map_genotype

# every rule reads at most one codon per symbol and a gene holds far more
SHORT = parse_bnf("""
<S> ::= "(output1:" <w> ")*sig(" <w> "*" <xnList> " + " <w> "*1)"
<w> ::= 1 | 2
<xnList> ::= x1 | x2
""")

# a single sentence: no rule has a choice
FIXED = parse_bnf("""
<S> ::= "(output1:1)*sig(2*" <xnList> " + 3*1)"
<xnList> ::= x1
""")


def test_trivially_terminating_grammar_is_never_invalid(rng):
    assert invalidity_rate("MGE", 500, EvolutionConfig(), rng, d=2, c=2, grammar=SHORT) == 0.0


def test_mge_random_individuals_map():
    rate = invalidity_rate("MGE", 2000, EvolutionConfig(), np.random.default_rng(1))
    assert rate == 0.0


def test_ge_invalidity_reproducible_across_seeds():
    n = 3000
    rates = [invalidity_rate("GE", n, EvolutionConfig(), np.random.default_rng(s)) for s in (1, 2)]
    p = sum(rates) / 2
    se = math.sqrt(2 * p * (1 - p) / n)
    assert 0 < p < 0.5
    assert abs(rates[0] - rates[1]) <= 3 * se


def test_invalidity_rejects_zero_samples(rng):
    with pytest.raises(ValueError):
        invalidity_rate("MGE", 0, EvolutionConfig(), rng)


def test_fixed_grammar_gives_zero_distances(monkeypatch, rng):
    monkeypatch.setattr(analysis, "grammar_for", lambda *a, **k: FIXED)
    rep = locality_experiment(["MGE"], [2, 3], 20, rng=rng, d=1, c=2)
    assert all(c.distances == [0] * 20 for c in rep.cells)


def test_locality_report_shape(rng):
    rep = locality_experiment(["MGE", "GE"], [2, 3, 4], 15, rng=rng)
    assert isinstance(rep, LocalityReport)
    assert len(rep.cells) == 2 * 3 * 2
    assert all(c.complete and len(c.distances) == 15 for c in rep.cells)
    assert rep.methods() == ["MGE", "GE_BASELINE"]
    rows = rep.rows()
    assert {r["method"] for r in rows} == {"MGE", "GE_BASELINE"}
    assert len(rep.summary_rows()) == 4
    assert rows_to_csv(rows).count("\n") == len(rows) + 1


def test_ge_stream_returns_networks_of_the_requested_size(rng):
    grammar = grammar_for("GE", 30, 2, 3)
    pools, ok = analysis._ge_stream([2, 3], grammar, 100, rng, 10, 100_000)
    assert ok
    for size, pool in pools.items():
        assert len(pool) == 10
        assert all(len(map_genotype(g, grammar, "GE", 2).hidden) == size for g in pool)


def test_ge_stream_tail_pads_to_mge_length(rng):
    grammar = grammar_for("GE", 30, 2, 3)
    pools, ok = analysis._ge_stream([2], grammar, 100, rng, 5, 100_000, tail=True)
    assert ok and all(len(g.codons) == 200 for g in pools[2])


def test_two_bit_mutants_move_further_on_average():
    rep = locality_experiment(["MGE"], [3, 5], 150, rng=np.random.default_rng(3))
    assert rep.overall("MGE", 2)[0] >= rep.overall("MGE", 1)[0]


def test_exclude_drops_invalid_mutants(rng):
    rep = locality_experiment(["GE"], [2], 30, rng=rng, invalid_mutants="exclude")
    for c in rep.cells:
        assert len(c.distances) + c.invalid_mutants == 30


def test_locality_argument_checks(rng):
    with pytest.raises(ValueError):
        locality_experiment(per_cell_samples=0, rng=rng)
    with pytest.raises(ValueError):
        locality_experiment(invalid_mutants="zero", rng=rng)


def test_incomplete_cells_are_flagged(rng):
    rep = locality_experiment(["GE"], [9], 5, rng=rng, max_attempts=3)
    assert not any(c.complete for c in rep.cells)


def test_matched_lengths():
    cfg = matched_lengths(EvolutionConfig(m=10, sigma_range=(2, 10)))
    assert cfg.flat_length_range == (20, 100)


def test_scalability_curves_shape():
    curves = scalability_experiment(["MGE", "GE"], generations=3, mu=10,
                                    rng=np.random.default_rng(0), repeats=2)
    assert set(curves) == {"MGE", "GE_BASELINE"}
    assert all(v.shape == (4,) for v in curves.values())
    rows = scalability_rows(curves)
    assert len(rows) == 8 and rows[0]["generation"] == 0


def test_without_variation_the_best_never_changes():
    cfg = matched_lengths(EvolutionConfig(mu=20, generations=10, p_c=0.0, p_m_choices=(0.0,), seed=5))
    grammar = grammar_for("MGE", 30, 2, 3)
    res = evolve(cfg, grammar, fitness=connection_fitness, c=2)
    assert len({h.best_loss for h in res.history}) == 1
    initial = {ind.genotype for ind in evolve(cfg.with_(generations=0), grammar,
                                             fitness=connection_fitness, c=2).population}
    assert {ind.genotype for ind in res.population} <= initial


def test_connection_fitness():
    assert connection_fitness(None) == analysis.WORST
    net = map_genotype(analysis.random_genotype("MGE", np.random.default_rng(0), EvolutionConfig()),
                       grammar_for("MGE", 30, 2, 3), "MGE", 2)
    assert connection_fitness(net) == -net.metrics().connections


@pytest.mark.xfail(strict=True, reason="GE's small-phenotype bias: at matched codon counts its "
                   "initial networks have about a third of MGE's connections (measured 8.2 vs 24.1)")
def test_initial_connection_counts_within_factor_two():
    curves = scalability_experiment(["MGE", "GE"], generations=0, mu=200,
                                    rng=np.random.default_rng(1), repeats=5)
    mge, ge = curves["MGE"][0], curves["GE_BASELINE"][0]
    assert max(mge, ge) <= 2 * min(mge, ge)
