"""Modular grammatical evolution of feed-forward neural networks."""
from .data import Dataset, load_csv, make_blobs, make_two_moons, normalize_minmax, split
from .evolution import EvolutionConfig, evolve
from .genome import FlatGenotype, ModularGenotype
from .grammar import Grammar, build_network_grammar, build_neuron_grammar, parse_bnf
from .mapping import Variant, derive, map_genotype, map_individual
from .network import Network, Neuron
from .ted import tree_edit_distance

__version__ = "0.1.0"

__all__ = [
    "Dataset", "EvolutionConfig", "FlatGenotype", "Grammar", "ModularGenotype", "Network",
    "Neuron", "Variant", "build_network_grammar", "build_neuron_grammar", "derive", "evolve",
    "load_csv", "make_blobs", "make_two_moons", "map_genotype", "map_individual",
    "normalize_minmax", "parse_bnf", "split", "tree_edit_distance",
]
