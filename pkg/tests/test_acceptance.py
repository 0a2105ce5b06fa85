"""The thirteen acceptance criteria, each at its stated tolerance and time bound.

Every test records its outcome so that the terminal summary prints one
PASS/FAIL line per criterion, then asserts it.
"""
from __future__ import annotations

import math
import time
from collections import Counter

import numpy as np
import yaml

from conftest import record
from helpers import choose, class_probabilities, eval_expression, network_outputs_from_dump
from test_ted import brute_force_ted, random_tree

from mgevo.analysis import invalidity_rate, locality_experiment, scalability_experiment
from mgevo.cli import main
from mgevo.data import make_blobs, normalize_minmax, split
from mgevo.evolution import EvolutionConfig, accuracy, evolve, fitness_cross_entropy, fitness_mse
from mgevo.genome import init_modular
from mgevo.grammar import G1_TEXT, build_neuron_grammar, parse_bnf
from mgevo.mapping import MGE_VARIANTS, ge_derive, map_individual, map_neuron, topology_violations
from mgevo.network import Network, Neuron, flops
from mgevo.ted import tree_edit_distance

G1 = parse_bnf(G1_TEXT)


def check(n: int, title: str, passed: bool, detail: str = "") -> None:
    record(n, title, passed, detail)
    assert passed, detail


def test_ac01_ge_golden_mapping():
    derive = lambda codons: ge_derive(codons, G1)
    derive([11, 5, 73, 8, 15, 20, 30])  # warm-up
    elapsed = math.inf
    for _ in range(5):
        t0 = time.perf_counter()
        a = derive([11, 5, 73, 8, 15, 20, 30])
        b = derive([4, 5, 73, 8, 15, 20, 30])
        elapsed = min(elapsed, time.perf_counter() - t0)
    genotype = [11, 5, 73, 8, 15, 20, 30]
    ok = (a.sentence == "1110" and a.used == 4 and genotype[a.used:] == [15, 20, 30]
          and b.sentence == "0" and elapsed < 1e-3)
    check(1, "GE golden mapping", ok, f"{a.sentence!r}/{a.used} codons, {b.sentence!r}, {elapsed * 1e6:.0f} us")


def test_ac02_codon_mod_rule():
    g = build_neuron_grammar(2, 3, "MGE")
    codons = choose(g.rules, "<S>", [0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0])
    codons[0] = 9
    neuron = map_neuron(codons, g)
    ok = len(g.rules["<OutputNeuron>"]) == 3 and neuron.outputs[0][0] == 1
    check(2, "codon 9 of 3 alternatives selects output1", ok, f"output{neuron.outputs[0][0]}")


def test_ac03_ge_size_bias():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    genotypes = rng.integers(0, 256, size=(10_000, 7)).tolist()
    counts = Counter(ge_derive(g, G1).sentence for g in genotypes)
    elapsed = time.perf_counter() - t0
    freq = {k: v / 10_000 for k, v in counts.items()}
    expected = {"0": 0.5, "10": 0.25, "110": 0.125, "1110": 0.0625}
    ok = all(abs(freq.get(s, 0) - p) <= 0.02 for s, p in expected.items())
    ok &= abs(freq.get(None, 0) - 0.0078125) <= 0.01
    ok &= elapsed < 1.0
    shown = " ".join(f"{s}:{freq.get(s, 0):.4f}" for s in expected)
    check(3, "GE size-bias distribution", ok, f"{shown} invalid:{freq.get(None, 0):.4f} {elapsed:.2f}s")


def test_ac04_variant_topology_invariants():
    d, c = 4, 3
    t0 = time.perf_counter()
    violations, mapped = 0, 0
    for v_index, variant in enumerate(MGE_VARIANTS):
        grammar = build_neuron_grammar(d, c, variant.value)
        rng = np.random.default_rng(100 + v_index)
        for _ in range(1000):
            net = map_individual(init_modular(rng), grammar, variant, c)
            if net is not None:
                mapped += 1
                violations += len(topology_violations(net, variant))
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and mapped > 0 and elapsed < 30
    check(4, "variant topology invariants", ok, f"{violations} violations in {mapped} networks, {elapsed:.1f}s")


def test_ac05_invalidity_gap():
    cfg = EvolutionConfig()
    t0 = time.perf_counter()
    mge = invalidity_rate("MGE", 100_000, cfg, np.random.default_rng(5), d=30, c=2)
    ge = invalidity_rate("GE", 100_000, cfg, np.random.default_rng(6), d=30, c=2)
    elapsed = time.perf_counter() - t0
    ok = mge < 0.005 and mge < ge and elapsed < 300
    check(5, "invalidity gap", ok, f"MGE {mge:.5f} vs GE {ge:.5f}, {elapsed:.0f}s")


def test_ac06_locality_gap():
    t0 = time.perf_counter()
    rep = locality_experiment(["MGE", "GE"], range(2, 10), 1000, rng=np.random.default_rng(6))
    elapsed = time.perf_counter() - t0
    mge1, mge2 = rep.overall("MGE", 1)[0], rep.overall("MGE", 2)[0]
    ge1, ge2 = rep.overall("GE", 1)[0], rep.overall("GE", 2)[0]
    complete = all(c.complete for c in rep.cells)
    ok = complete and mge1 < 0.5 * ge1 and mge2 >= mge1 and ge2 >= ge1 and elapsed < 600
    check(6, "locality gap", ok,
          f"k=1 MGE {mge1:.2f} vs GE {ge1:.2f}; k=2 MGE {mge2:.2f} GE {ge2:.2f}; {elapsed:.0f}s")


def test_ac07_ted_oracle():
    rng = np.random.default_rng(77)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        a = random_tree(rng, int(rng.integers(1, 7)))
        b = random_tree(rng, int(rng.integers(1, 7)))
        mismatches += tree_edit_distance(a, b) != brute_force_ted(a, b)
    elapsed = time.perf_counter() - t0
    check(7, "tree edit distance oracle", mismatches == 0 and elapsed < 60,
          f"{mismatches}/200 mismatches, {elapsed:.1f}s")


def test_ac08_scalability_direction():
    t0 = time.perf_counter()
    curves = scalability_experiment(["MGE", "GE"], generations=100, mu=50,
                                    rng=np.random.default_rng(8), repeats=5)
    elapsed = time.perf_counter() - t0
    mge, ge = curves["MGE"][-1], curves["GE_BASELINE"][-1]
    ok = mge > 5 * ge and elapsed < 600
    check(8, "scalability direction", ok,
          f"final MGE {mge:.1f} vs GE {ge:.1f} (ratio {mge / ge:.2f}, need > 5); {elapsed:.0f}s")


def test_ac09_flops_formula():
    h = (
        Neuron(((1, "+0.2"),), (("x1", "+0.5"), ("x2", "-0.1")), "+0.3"),
        Neuron(((2, "-0.4"),), (("x2", "+0.7"), ("h1", "+0.2")), "-0.3"),
        Neuron(((3, "+0.9"),), (("x1", "-0.6"),), "+0.1"),
        Neuron(((1, "+0.1"),), (("h2", "+0.8"), ("x2", "+0.4")), "-0.2"),
    )
    m = Network(h, d=2, c=3, variant="BETA").metrics()
    ok = m.connections == 15 and m.neurons + 3 == 7 and m.flops == 58 and flops(15, 7) == 58
    check(9, "flops formula", ok, f"{m.connections} connections, {m.neurons + 3} neurons -> {m.flops}")


def test_ac10_forward_pass():
    d, c = 4, 3
    rng = np.random.default_rng(10)
    worst_sum = worst_oracle = 0.0
    nets = 0
    for variant in MGE_VARIANTS:
        grammar = build_neuron_grammar(d, c, variant.value)
        while nets < 200 * (MGE_VARIANTS.index(variant) + 1):
            net = map_individual(init_modular(rng), grammar, variant, c)
            if net is None:
                continue
            nets += 1
            X = rng.uniform(-1, 1, size=(10, d))
            probs = net.forward_batch(X)
            worst_sum = max(worst_sum, float(np.max(np.abs(probs.sum(axis=1) - 1))))
            exprs = net.expanded_output_strings()
            for x, p in zip(X, probs):
                env = {f"x{j + 1}": v for j, v in enumerate(x)}
                layered = class_probabilities(network_outputs_from_dump(net.dump(), x))
                expanded = class_probabilities([eval_expression(e, env) for e in exprs])
                worst_oracle = max(worst_oracle, float(np.max(np.abs(p - layered))),
                                   float(np.max(np.abs(p - expanded))))
    ok = nets == 1000 and worst_sum <= 1e-9 and worst_oracle <= 1e-9
    check(10, "forward pass correctness", ok,
          f"{nets} networks; max |sum-1| {worst_sum:.1e}; max oracle gap {worst_oracle:.1e}")


def test_ac11_evolution_sanity():
    data = make_blobs(240, 2, 2, 4.0, np.random.default_rng(11))
    grammar = build_neuron_grammar(2, 2)
    t0 = time.perf_counter()
    accs, monotone = [], True
    for seed in range(5):
        parts = normalize_minmax(split(data, 0.8, np.random.default_rng([seed, 1])))
        res = evolve(EvolutionConfig(mu=100, generations=200, seed=seed), grammar, parts.train)
        accs.append(accuracy(res.best.network, parts.test))
        best = [h.best_loss for h in res.history]
        monotone &= all(b <= a for a, b in zip(best, best[1:]))
    elapsed = time.perf_counter() - t0
    ok = sum(a >= 0.90 for a in accs) >= 4 and monotone and elapsed < 900
    check(11, "evolution sanity", ok,
          f"test acc {', '.join(f'{a:.3f}' for a in accs)}; monotone={monotone}; {elapsed:.0f}s")


class _FixedProbs:
    """Stands in for a network whose class probabilities are given."""

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)
        self.binary = False

    def forward_batch(self, X):
        return self.probs


def test_ac12_loss_identities():
    from mgevo.data import Dataset
    data = Dataset(np.zeros((4, 1)), np.array([1, 2, 1, 2]), 2)
    uniform = _FixedProbs(np.full((4, 2), 0.5))
    perfect = _FixedProbs(data.one_hot())
    ce_u, ce_p = fitness_cross_entropy(uniform, data), fitness_cross_entropy(perfect, data)
    mse_u, mse_p = fitness_mse(uniform, data), fitness_mse(perfect, data)
    ok = (abs(ce_u - math.log(2)) <= 1e-12 and abs(ce_p) <= 1e-12
          and abs(mse_u - 0.25) <= 1e-12 and mse_p == 0)
    check(12, "loss identities", ok, f"CE {ce_u:.15f}/{ce_p:.1e}, MSE {mse_u}/{mse_p}")


def test_ac13_reproducibility(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump({"seed": 13, "repeats": 2,
                                   "evolution": {"mu": 20, "generations": 10},
                                   "dataset": {"kind": "moons", "n": 120, "noise": 0.1}}))
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [main(["evolve", "--config", str(cfg), "--out-dir", str(o)]) for o in outs]
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*")
                   if p.is_file() and p.name != "timing.json")
    same = [(outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files]
    ok = codes == [0, 0] and len(files) > 4 and all(same)
    check(13, "byte-identical reports", ok, f"{sum(same)}/{len(files)} files identical")
