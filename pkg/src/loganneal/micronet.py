"""Minimal dense feed-forward network with manual backpropagation.

Two output configurations are supported and must not be mixed:

* ``sigmoid_categorical`` - independent sigmoid output units scored with
  categorical crossentropy against one-hot (or multi-hot) targets.
* ``softmax_sparse`` - softmax over logits scored with sparse categorical
  crossentropy against integer labels.

Parameters live in per-layer weight matrices (fan_in x fan_out) and bias
vectors, with flatten/unflatten helpers so the optimizers in
:mod:`loganneal.optim` can treat the model as one flat vector.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

PROB_CLAMP = 1e-12  # keeps log() finite at saturated predictions


class OutputHead(str, Enum):
    SIGMOID_CATEGORICAL = "sigmoid_categorical"
    SOFTMAX_SPARSE = "softmax_sparse"


class Activation(str, Enum):
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple[int, ...]
    hidden_activation: Activation = Activation.RELU
    leaky_slope: float = 0.01
    output_head: OutputHead = OutputHead.SIGMOID_CATEGORICAL
    init_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        object.__setattr__(self, "hidden_activation", Activation(self.hidden_activation))
        object.__setattr__(self, "output_head", OutputHead(self.output_head))
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layers")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("all layer sizes must be >= 1")
        if not (0.0 < self.leaky_slope < 1.0):
            raise ValueError("leaky slope must lie in (0, 1)")

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class MlpModel:
    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def flat_params(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def set_flat_params(self, vec: np.ndarray) -> None:
        if vec.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {vec.shape}")
        off = 0
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[i] = vec[off : off + w.size].reshape(w.shape).copy()
            off += w.size
            self.biases[i] = vec[off : off + b.size].copy()
            off += b.size


@dataclass
class Batch:
    """Inputs plus integer labels; ``targets`` optionally overrides the
    one-hot matrix derived from labels (multi-hot is accepted by the
    sigmoid head)."""

    inputs: np.ndarray
    labels: np.ndarray
    targets: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise ValueError("inputs must be a (batch, features) matrix, batch >= 1")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("labels must be one integer per input row")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def target_matrix(self, n_classes: int) -> np.ndarray:
        if self.targets is not None:
            t = np.asarray(self.targets, dtype=np.float64)
            if t.shape != (len(self), n_classes):
                raise ValueError("targets must be (batch, classes)")
            return t
        if self.labels.min() < 0 or self.labels.max() >= n_classes:
            raise ValueError(
                f"labels must lie in [0, {n_classes}), got range "
                f"[{self.labels.min()}, {self.labels.max()}]"
            )
        return np.eye(n_classes)[self.labels]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted normalized exponentials along the last axis."""
    s = np.asarray(logits, dtype=np.float64)
    shifted = s - s.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init(spec: MlpSpec) -> MlpModel:
    """Glorot-uniform weights from the seeded generator, zero biases;
    bitwise deterministic per seed."""
    rng = np.random.default_rng(spec.init_seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(spec=spec, weights=weights, biases=biases)


def forward(model: MlpModel, batch: Batch) -> tuple[dict, np.ndarray]:
    """Run the batch through the net; returns (cache for backward, outputs).

    Outputs are sigmoid probabilities for the sigmoid head and raw logits
    for the softmax head.
    """
    spec = model.spec
    a = batch.inputs
    if a.shape[1] != spec.layer_sizes[0]:
        raise ValueError(
            f"input dimension {a.shape[1]} does not match spec {spec.layer_sizes[0]}"
        )
    pre, post = [], [a]
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        pre.append(z)
        if i < len(model.weights) - 1:
            if spec.hidden_activation is Activation.RELU:
                a = np.maximum(z, 0.0)
            else:
                a = np.where(z > 0.0, z, spec.leaky_slope * z)
        else:
            a = _sigmoid(z) if spec.output_head is OutputHead.SIGMOID_CATEGORICAL else z
        post.append(a)
    cache = {"pre": pre, "post": post, "batch_size": len(batch)}
    return cache, a


def loss(outputs: np.ndarray, batch: Batch, head: OutputHead) -> float:
    """Mean crossentropy over the batch for the given output head."""
    head = OutputHead(head)
    n_classes = outputs.shape[1]
    if head is OutputHead.SIGMOID_CATEGORICAL:
        t = batch.target_matrix(n_classes)
        p = np.clip(outputs, PROB_CLAMP, 1.0 - PROB_CLAMP)
        return float(-(t * np.log(p)).sum(axis=1).mean())
    if batch.labels.min() < 0 or batch.labels.max() >= n_classes:
        raise ValueError(
            f"labels must lie in [0, {n_classes}) for sparse crossentropy"
        )
    # -log softmax(s)_label, in stable log-sum-exp form
    shifted = outputs - outputs.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(batch)), batch.labels]
    return float((log_z - picked).mean())


def backward(model: MlpModel, cache: dict, batch: Batch) -> tuple[list, list]:
    """Exact gradients of the mean batch loss for every weight and bias."""
    spec = model.spec
    b = cache["batch_size"]
    if b != len(batch):
        raise ValueError("forward cache does not match this batch")
    outputs = cache["post"][-1]
    n_classes = outputs.shape[1]
    if spec.output_head is OutputHead.SIGMOID_CATEGORICAL:
        t = batch.target_matrix(n_classes)
        delta = -t * (1.0 - outputs) / b  # d/ds of -sum t*log(sigmoid(s))
    else:
        delta = softmax(outputs)
        delta[np.arange(b), batch.labels] -= 1.0
        delta /= b
    w_grads = [None] * len(model.weights)
    b_grads = [None] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        a_prev = cache["post"][i]
        w_grads[i] = a_prev.T @ delta
        b_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ model.weights[i].T
            z = cache["pre"][i - 1]
            if spec.hidden_activation is Activation.RELU:
                delta = delta * (z > 0.0)
            else:
                delta = delta * np.where(z > 0.0, 1.0, spec.leaky_slope)
    return w_grads, b_grads


def flatten_grads(w_grads: list, b_grads: list) -> np.ndarray:
    parts = []
    for wg, bg in zip(w_grads, b_grads):
        parts.append(wg.ravel())
        parts.append(bg)
    return np.concatenate(parts)


def predict_classes(outputs: np.ndarray) -> np.ndarray:
    """Class decisions: argmax works for both probability and logit outputs."""
    return outputs.argmax(axis=1)


# -- flat binary model format -------------------------------------------------
#
#   magic "MNET1" | u32 layer count | u32 sizes... | f64 params
#
# little-endian throughout; per layer: weights row-major, then biases.

MAGIC = b"MNET1"


def save_model(model: MlpModel, path) -> None:
    sizes = model.spec.layer_sizes
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(sizes)))
        fh.write(struct.pack(f"<{len(sizes)}I", *sizes))
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_model(path, spec: MlpSpec) -> MlpModel:
    """Read parameters saved by :func:`save_model` into a model with the
    given spec (the format stores sizes and parameters only)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError("not a model file (bad magic)")
    off = len(MAGIC)
    (n_layers,) = struct.unpack_from("<I", raw, off)
    off += 4
    sizes = struct.unpack_from(f"<{n_layers}I", raw, off)
    off += 4 * n_layers
    if sizes != spec.layer_sizes:
        raise ValueError(f"file layer sizes {sizes} do not match spec {spec.layer_sizes}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(raw, dtype="<f8", count=fan_in * fan_out, offset=off)
        off += 8 * fan_in * fan_out
        b = np.frombuffer(raw, dtype="<f8", count=fan_out, offset=off)
        off += 8 * fan_out
        weights.append(w.reshape(fan_in, fan_out).copy())
        biases.append(b.copy())
    if off != len(raw):
        raise ValueError("trailing bytes after parameters")
    return MlpModel(spec=spec, weights=weights, biases=biases)
