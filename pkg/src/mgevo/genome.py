"""Genotypes: flat codon strings (plain GE) and lists of fixed-length genes (MGE).

Codons are ints in [0, 255]. Genotypes are immutable tuples so they can be
hashed, compared and shared between individuals without copying.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

Gene = tuple[int, ...]

DEFAULT_GENE_LENGTH = 100


@dataclass(frozen=True)
class ModularGenotype:
    genes: tuple[Gene, ...]

    def __post_init__(self):
        if not self.genes:
            raise ValueError("a modular genotype needs at least one gene")

    def __len__(self):
        return len(self.genes)

    @property
    def codon_count(self) -> int:
        return sum(len(g) for g in self.genes)

    def codons(self) -> list[int]:
        return [c for g in self.genes for c in g]

    def to_json(self) -> list[list[int]]:
        return [list(g) for g in self.genes]

    @classmethod
    def from_json(cls, doc) -> "ModularGenotype":
        return cls(tuple(tuple(_codon(c) for c in g) for g in doc))


@dataclass(frozen=True)
class FlatGenotype:
    codons: tuple[int, ...]

    def __post_init__(self):
        if not self.codons:
            raise ValueError("a flat genotype needs at least one codon")

    def __len__(self):
        return len(self.codons)

    @property
    def codon_count(self) -> int:
        return len(self.codons)

    def to_json(self) -> list[int]:
        return list(self.codons)

    @classmethod
    def from_json(cls, doc) -> "FlatGenotype":
        return cls(tuple(_codon(c) for c in doc))


Genotype = Union[ModularGenotype, FlatGenotype]


def _codon(value) -> int:
    v = int(value)
    if not 0 <= v <= 255:
        raise ValueError(f"codon out of range: {value}")
    return v


def random_gene(rng: np.random.Generator, m: int = DEFAULT_GENE_LENGTH) -> Gene:
    return tuple(rng.integers(0, 256, size=m).tolist())


def init_modular(rng: np.random.Generator, sigma_range=(2, 10),
                 m: int = DEFAULT_GENE_LENGTH) -> ModularGenotype:
    """Random genotype with a uniform gene count in ``sigma_range`` (inclusive)."""
    lo, hi = sigma_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad sigma_range {sigma_range}")
    if m < 1:
        raise ValueError("gene length must be >= 1")
    sigma = int(rng.integers(lo, hi + 1))
    block = rng.integers(0, 256, size=(sigma, m)).tolist()
    return ModularGenotype(tuple(tuple(row) for row in block))


def init_flat(rng: np.random.Generator, length_range=(50, 150)) -> FlatGenotype:
    lo, hi = length_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad length_range {length_range}")
    n = int(rng.integers(lo, hi + 1))
    return FlatGenotype(tuple(rng.integers(0, 256, size=n).tolist()))


def genotype_bits(genotype: Genotype) -> np.ndarray:
    """Concatenated 8-bit encoding; bit ``8*i + b`` is bit ``b`` (LSB = 0) of codon ``i``."""
    codons = genotype.codons() if isinstance(genotype, ModularGenotype) else list(genotype.codons)
    arr = np.asarray(codons, dtype=np.uint8)
    return np.unpackbits(arr[:, None], axis=1, bitorder="little").ravel()


def hamming_distance(a: Genotype, b: Genotype) -> int:
    ca = a.codons() if isinstance(a, ModularGenotype) else a.codons
    cb = b.codons() if isinstance(b, ModularGenotype) else b.codons
    if len(ca) != len(cb):
        raise ValueError("genotypes differ in length")
    return sum(bin(x ^ y).count("1") for x, y in zip(ca, cb))


def flip_hamming_bits(genotype: Genotype, k: int, rng: np.random.Generator) -> Genotype:
    """Copy of ``genotype`` with exactly ``k`` distinct bits flipped."""
    total = genotype.codon_count * 8
    if k < 0 or k > total:
        raise ValueError(f"cannot flip {k} bits of a {total}-bit genotype")
    positions = rng.choice(total, size=k, replace=False)
    if isinstance(genotype, FlatGenotype):
        codons = list(genotype.codons)
        for p in positions:
            codons[p // 8] ^= 1 << (p % 8)
        return FlatGenotype(tuple(codons))
    genes = [list(g) for g in genotype.genes]
    # gene lengths may differ after hand construction, so walk offsets
    offsets = np.cumsum([0] + [len(g) for g in genes])
    for p in positions:
        idx = int(p // 8)
        gi = int(np.searchsorted(offsets, idx, side="right") - 1)
        genes[gi][idx - offsets[gi]] ^= 1 << int(p % 8)
    return ModularGenotype(tuple(tuple(g) for g in genes))


def dump_genotype(genotype: Genotype) -> str:
    kind = "modular" if isinstance(genotype, ModularGenotype) else "flat"
    return json.dumps({"kind": kind, "codons": genotype.to_json()})


def load_genotype(text: str) -> Genotype:
    doc = json.loads(text)
    if doc["kind"] == "modular":
        return ModularGenotype.from_json(doc["codons"])
    if doc["kind"] == "flat":
        return FlatGenotype.from_json(doc["codons"])
    raise ValueError(f"unknown genotype kind {doc['kind']!r}")
