"""Neurons and assembled networks: evaluation, metrics, trees, serialization."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import expit

from .grammar import output_count
from .tree import Node

_OUT_RE = re.compile(r"\(output(\d+):([^()]+)\)")
_SENTENCE_RE = re.compile(r"^((?:\(output\d+:[^()]+\))+)\*sig\((.*) \+ ([^ ]+)\*1\)$")
_TERM_RE = re.compile(r"^([^*\s]+)\*([xh]\d+)$")


@dataclass(frozen=True)
class Neuron:
    """One hidden neuron.

    Weights are kept as the literal strings the grammar produced (they label
    evaluation-tree leaves); ``float()`` of each is the numeric weight.
    Sources are ``"x<i>"`` for input feature i or ``"h<j>"`` for the j-th
    hidden neuron, both 1-based.
    """

    outputs: tuple[tuple[int, str], ...]
    inputs: tuple[tuple[str, str], ...]
    bias: str

    def activation(self) -> str:
        terms = " + ".join(f"{w}*{src}" for src, w in self.inputs)
        return f"sig({terms} + {self.bias}*1)"

    def sentence(self) -> str:
        conns = "".join(f"(output{k}:{w})" for k, w in self.outputs)
        return f"{conns}*{self.activation()}"

    def hidden_sources(self) -> list[int]:
        return [int(src[1:]) for src, _ in self.inputs if src[0] == "h"]

    def feature_sources(self) -> list[int]:
        return [int(src[1:]) for src, _ in self.inputs if src[0] == "x"]

    @property
    def connection_count(self) -> int:
        return len(self.inputs) + 1 + len(self.outputs)


def parse_neuron(sentence: str) -> Neuron:
    """Inverse of ``Neuron.sentence``; raises ``ValueError`` on malformed text."""
    m = _SENTENCE_RE.match(sentence)
    if not m:
        raise ValueError(f"not a neuron sentence: {sentence!r}")
    conns, body, bias = m.groups()
    outputs = tuple((int(k), w) for k, w in _OUT_RE.findall(conns))
    inputs = []
    for term in body.split(" + "):
        tm = _TERM_RE.match(term)
        if not tm:
            raise ValueError(f"bad input term {term!r} in {sentence!r}")
        inputs.append((tm.group(2), tm.group(1)))
    for _, w in outputs + tuple(inputs) + (("", bias),):
        float(w)
    return Neuron(outputs, tuple(inputs), bias)


@dataclass(frozen=True)
class NetworkMetrics:
    layers: int
    neurons: int
    features_used: int
    connections: int
    flops: int


def flops(connections: int, sigmoid_neurons: int) -> int:
    """Cost model: two operations per connection, four per sigmoid."""
    return 2 * connections + 4 * sigmoid_neurons


@dataclass(frozen=True)
class Network:
    hidden: tuple[Neuron, ...]
    d: int
    c: int
    variant: str = "MGE"

    def __post_init__(self):
        if not self.hidden:
            raise ValueError("a network needs at least one hidden neuron")
        k = self.n_outputs
        for i, neuron in enumerate(self.hidden, 1):
            if not neuron.outputs:
                raise ValueError(f"h{i} has no output connection")
            for out, _ in neuron.outputs:
                if not 1 <= out <= k:
                    raise ValueError(f"h{i} targets output{out}, network has {k}")
            for f in neuron.feature_sources():
                if not 1 <= f <= self.d:
                    raise ValueError(f"h{i} reads x{f}, network has d={self.d}")
            for j in neuron.hidden_sources():
                if not 1 <= j < i:
                    raise ValueError(f"h{i} reads h{j}; only earlier neurons are allowed")

    @property
    def n_outputs(self) -> int:
        return output_count(self.c)

    @property
    def binary(self) -> bool:
        return self.n_outputs == 1

    # -- evaluation --------------------------------------------------------

    @cached_property
    def _weights(self):
        h, d, k = len(self.hidden), self.d, self.n_outputs
        w_in = np.zeros((h, d))
        w_hid = np.zeros((h, h))
        bias = np.zeros(h)
        w_out = np.zeros((h, k))
        for i, neuron in enumerate(self.hidden):
            for src, w in neuron.inputs:
                j = int(src[1:]) - 1
                if src[0] == "x":
                    w_in[i, j] += float(w)
                else:
                    w_hid[i, j] += float(w)
            bias[i] = float(neuron.bias)
            for out, w in neuron.outputs:
                w_out[i, out - 1] += float(w)
        return w_in, w_hid, bias, w_out, bool(w_hid.any())

    def output_scores(self, X) -> np.ndarray:
        """Output-neuron activations ``s_k`` for a batch, shape (n, n_outputs)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} features, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite feature value")
        w_in, w_hid, bias, w_out, layered = self._weights
        pre = X @ w_in.T + bias
        if layered:
            H = np.empty_like(pre)
            for i in range(pre.shape[1]):
                z = pre[:, i] + H[:, :i] @ w_hid[i, :i] if i else pre[:, i]
                H[:, i] = expit(z)
        else:
            H = expit(pre)
        return expit(H @ w_out)

    def forward_batch(self, X) -> np.ndarray:
        s = self.output_scores(X)
        if self.binary:
            return np.column_stack([s[:, 0], 1.0 - s[:, 0]])
        e = np.exp(s - s.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("forward takes a single feature vector")
        return self.forward_batch(x[None, :])[0]

    def predict_batch(self, X) -> np.ndarray:
        # argmax returns the first maximum, so ties go to the lowest class
        return np.argmax(self.forward_batch(X), axis=1) + 1

    def predict(self, x) -> int:
        return int(np.argmax(self.forward(x))) + 1

    # -- structure ---------------------------------------------------------

    def layer_of(self) -> list[int]:
        depth: list[int] = []
        for neuron in self.hidden:
            depth.append(1 + max((depth[j - 1] for j in neuron.hidden_sources()), default=0))
        return depth

    def metrics(self) -> NetworkMetrics:
        connections = sum(n.connection_count for n in self.hidden)
        features = {f for n in self.hidden for f in n.feature_sources()}
        sigmoids = len(self.hidden) + self.n_outputs
        return NetworkMetrics(
            layers=max(self.layer_of()),
            neurons=len(self.hidden),
            features_used=len(features),
            connections=connections,
            flops=flops(connections, sigmoids),
        )

    def output_strings(self) -> list[str]:
        """One ``sig(...)`` expression per output neuron; hidden neurons by name."""
        terms: list[list[str]] = [[] for _ in range(self.n_outputs)]
        for i, neuron in enumerate(self.hidden, 1):
            for out, w in neuron.outputs:
                terms[out - 1].append(f"{w}*h{i}")
        return [f"sig({' + '.join(t)})" if t else "sig(0)" for t in terms]

    def expanded_output_strings(self) -> list[str]:
        """Output expressions with every hidden neuron written out in place."""
        acts: list[str] = []
        for neuron in self.hidden:
            text = neuron.activation()
            for j in sorted(set(neuron.hidden_sources()), reverse=True):
                text = re.sub(rf"\bh{j}\b", acts[j - 1], text)
            acts.append(text)
        terms: list[list[str]] = [[] for _ in range(self.n_outputs)]
        for i, neuron in enumerate(self.hidden):
            for out, w in neuron.outputs:
                terms[out - 1].append(f"{w}*{acts[i]}")
        return [f"sig({' + '.join(t)})" if t else "sig(0)" for t in terms]

    def dump(self) -> str:
        lines = [f"h{i} = {n.activation()}" for i, n in enumerate(self.hidden, 1)]
        lines += [f"output{k} = {s}" for k, s in enumerate(self.output_strings(), 1)]
        return "\n".join(lines)

    def to_eval_tree(self) -> Node:
        """Evaluation tree: ``net`` over one ``sig`` subtree per output.

        Hidden-neuron references are expanded in place, so a neuron feeding
        several places appears several times, as in an expression tree.
        """
        acts: list[Node] = []
        for neuron in self.hidden:
            kids = [
                Node("*", (Node(w), acts[int(src[1:]) - 1] if src[0] == "h" else Node(src)))
                for src, w in neuron.inputs
            ]
            kids.append(Node("*", (Node(neuron.bias), Node("1"))))
            acts.append(Node("sig", (Node("+", tuple(kids)),)))
        outs: list[list[Node]] = [[] for _ in range(self.n_outputs)]
        for i, neuron in enumerate(self.hidden):
            for out, w in neuron.outputs:
                outs[out - 1].append(Node("*", (Node(w), acts[i])))
        children = tuple(
            Node("sig", (Node("+", tuple(t)),)) if t else Node("sig", (Node("0"),))
            for t in outs
        )
        return Node("net", children)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "c": self.c,
            "variant": self.variant,
            "neurons": [
                {
                    "inputs": [[src, w] for src, w in n.inputs],
                    "bias": n.bias,
                    "outputs": [[k, w] for k, w in n.outputs],
                }
                for n in self.hidden
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Network":
        hidden = tuple(
            Neuron(
                outputs=tuple((int(k), str(w)) for k, w in n["outputs"]),
                inputs=tuple((str(s), str(w)) for s, w in n["inputs"]),
                bias=str(n["bias"]),
            )
            for n in doc["neurons"]
        )
        return cls(hidden, int(doc["d"]), int(doc["c"]), str(doc.get("variant", "MGE")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Network":
        return cls.from_dict(json.loads(text))


def assemble(neurons, c: int, d: int, variant: str = "MGE") -> Network:
    """Put mapped neurons together behind ``c`` sigmoid output accumulators."""
    return Network(tuple(neurons), d, c, variant)

