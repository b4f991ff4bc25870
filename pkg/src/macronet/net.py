"""Dense feed-forward softmax classifier, built directly on numpy.

Forward pass, cross-entropy loss, backpropagation, Adam, and Xavier
initialization are all implemented here in 64-bit floats: the network is
small (~100k parameters) and exact doubles keep the finite-difference
gradient oracle tight.

Conventions: weights are (out, in) matrices, activations are row vectors,
ReLU's derivative at 0 is 0, and batch gradients are the mean of
per-example gradients.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .encoding import FULL_MASK, FeatureGroupMask
from .errors import FormatError

DEFAULT_LAYER_SIZES = (210, 128, 128, 128, 128, 58)

PROBABILITY_FLOOR = 1e-12


@dataclass(frozen=True)
class NetworkTopology:
    layer_sizes: tuple[int, ...] = DEFAULT_LAYER_SIZES

    def __post_init__(self):
        if len(self.layer_sizes) < 3:
            raise ValueError("need at least one hidden layer")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]


@dataclass(frozen=True)
class Layer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)


@dataclass(frozen=True)
class ModelMeta:
    """Pipeline fingerprint a trained model carries: which catalog and
    normalization table encoded its inputs, and the feature mask it saw."""

    catalog_hash: str = ""
    norms_hash: str = ""
    mask: FeatureGroupMask = field(default_factory=FeatureGroupMask)


@dataclass(frozen=True)
class Network:
    topology: NetworkTopology
    layers: tuple[Layer, ...]
    meta: ModelMeta = field(default_factory=ModelMeta)

    def model_version(self) -> str:
        digest = hashlib.sha256()
        for layer in self.layers:
            digest.update(layer.W.astype(">f8").tobytes())
            digest.update(layer.b.astype(">f8").tobytes())
        return digest.hexdigest()[:12]


Gradients = list[tuple[np.ndarray, np.ndarray]]


def init_network(
    topology: NetworkTopology = NetworkTopology(),
    seed: int = 0,
    meta: ModelMeta | None = None,
) -> Network:
    """Xavier-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    sizes = topology.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(Layer(W=W, b=np.zeros(fan_out, dtype=np.float64)))
    return Network(
        topology=topology, layers=tuple(layers), meta=meta or ModelMeta()
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cached(net: Network, X: np.ndarray):
    """Returns (pre-activations per layer, post-activations per layer, probs)."""
    zs, activations = [], [X]
    a = X
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        z = a @ layer.W.T + layer.b
        zs.append(z)
        a = _softmax(z) if i == last else np.maximum(z, 0.0)
        activations.append(a)
    return zs, activations, a


def _check_input(net: Network, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != net.topology.input_size:
        raise ValueError(
            f"input has {X.shape[-1]} features, network expects "
            f"{net.topology.input_size}"
        )
    return X


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Class distribution for one input vector. Non-negative, sums to 1."""
    x = _check_input(net, x)
    if x.ndim != 1:
        raise ValueError(f"forward expects a single vector, got shape {x.shape}")
    _, _, probs = _forward_cached(net, x[None, :])
    return probs[0]


def forward_batch(net: Network, X: np.ndarray) -> np.ndarray:
    X = _check_input(net, X)
    if X.ndim != 2:
        raise ValueError(f"forward_batch expects (n, features), got shape {X.shape}")
    _, _, probs = _forward_cached(net, X)
    return probs


def loss(dist: np.ndarray, target_class: int) -> float:
    """Cross entropy of one prediction: -log p(target), floored at 1e-12."""
    if not 0 <= target_class < len(dist):
        raise ValueError(f"target class {target_class} out of range")
    return -math.log(max(float(dist[target_class]), PROBABILITY_FLOOR))


def batch_loss(probs: np.ndarray, targets: np.ndarray) -> float:
    picked = probs[np.arange(len(targets)), targets]
    return float(-np.log(np.maximum(picked, PROBABILITY_FLOOR)).mean())


def backward(net: Network, x: np.ndarray, target_class: int) -> Gradients:
    """Gradients of the cross-entropy loss for one example."""
    return backward_batch(net, np.asarray(x)[None, :], np.array([target_class]))[2]


def backward_batch(
    net: Network, X: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray, Gradients]:
    """Mean loss, batch probabilities, and mean-of-per-example gradients."""
    X = _check_input(net, X)
    zs, activations, probs = _forward_cached(net, X)
    n = X.shape[0]
    mean_loss = batch_loss(probs, targets)
    # Softmax + cross entropy: output pre-activation gradient is probs - onehot.
    delta = probs.copy()
    delta[np.arange(n), targets] -= 1.0
    delta /= n
    grads: Gradients = [None] * len(net.layers)  # type: ignore[list-item]
    for i in range(len(net.layers) - 1, -1, -1):
        grads[i] = (delta.T @ activations[i], delta.sum(axis=0))
        if i > 0:
            delta = (delta @ net.layers[i].W) * (zs[i - 1] > 0.0)
    return mean_loss, probs, grads


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdamState:
    t: int
    m: tuple[tuple[np.ndarray, np.ndarray], ...]
    v: tuple[tuple[np.ndarray, np.ndarray], ...]
    alpha: float = 0.0001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(net: Network, alpha: float = 0.0001) -> AdamState:
    zeros = tuple(
        (np.zeros_like(layer.W), np.zeros_like(layer.b)) for layer in net.layers
    )
    return AdamState(t=0, m=zeros, v=zeros, alpha=alpha)


def adam_step(
    net: Network, adam: AdamState, grads: Gradients
) -> tuple[Network, AdamState]:
    """One bias-corrected Adam update. Rejects non-finite gradients."""
    for dW, db in grads:
        if not (np.isfinite(dW).all() and np.isfinite(db).all()):
            raise ValueError("non-finite gradient; update rejected")
    t = adam.t + 1
    c1 = 1.0 - adam.beta1**t
    c2 = 1.0 - adam.beta2**t
    new_layers, new_m, new_v = [], [], []
    for layer, (mW, mb), (vW, vb), (dW, db) in zip(net.layers, adam.m, adam.v, grads):
        mW = adam.beta1 * mW + (1.0 - adam.beta1) * dW
        mb = adam.beta1 * mb + (1.0 - adam.beta1) * db
        vW = adam.beta2 * vW + (1.0 - adam.beta2) * dW * dW
        vb = adam.beta2 * vb + (1.0 - adam.beta2) * db * db
        W = layer.W - adam.alpha * (mW / c1) / (np.sqrt(vW / c2) + adam.eps)
        b = layer.b - adam.alpha * (mb / c1) / (np.sqrt(vb / c2) + adam.eps)
        new_layers.append(Layer(W=W, b=b))
        new_m.append((mW, mb))
        new_v.append((vW, vb))
    return (
        replace(net, layers=tuple(new_layers)),
        replace(adam, t=t, m=tuple(new_m), v=tuple(new_v)),
    )


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------


def finite_difference_gradients(
    net: Network, x: np.ndarray, target_class: int, h: float = 1e-5
) -> Gradients:
    """Central-difference gradient of loss(forward(net, x), target) for every
    parameter. Independent of backward(); intended as a test oracle, so it is
    deliberately a plain loop."""
    grads: Gradients = []
    for layer in net.layers:
        pieces = []
        for arr in (layer.W, layer.b):
            d = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                up = loss(forward(net, x), target_class)
                arr[idx] = orig - h
                down = loss(forward(net, x), target_class)
                arr[idx] = orig
                d[idx] = (up - down) / (2.0 * h)
                it.iternext()
            pieces.append(d)
        grads.append((pieces[0], pieces[1]))
    return grads


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_MODEL_MAGIC = b"MNNET"
_MODEL_VERSION = 1


def save_model(net: Network, sink) -> None:
    """Versioned binary model file; round-trips bit exactly."""
    sink.write(_MODEL_MAGIC)
    sink.write(struct.pack(">IB", _MODEL_VERSION, net.meta.mask.to_bits()))
    for s in (net.meta.catalog_hash, net.meta.norms_hash):
        data = s.encode("utf-8")
        sink.write(struct.pack(">H", len(data)))
        sink.write(data)
    sizes = net.topology.layer_sizes
    sink.write(struct.pack(">H", len(sizes)))
    sink.write(struct.pack(f">{len(sizes)}I", *sizes))
    for layer in net.layers:
        sink.write(layer.W.astype(">f8").tobytes())
        sink.write(layer.b.astype(">f8").tobytes())


def load_model(source) -> Network:
    data = source.read()
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise FormatError("truncated model file")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    if take(5) != _MODEL_MAGIC:
        raise FormatError("not a model file (bad magic)")
    version, mask_bits = struct.unpack(">IB", take(5))
    if version != _MODEL_VERSION:
        raise FormatError(f"unsupported model version {version}")
    hashes = []
    for _ in range(2):
        (n,) = struct.unpack(">H", take(2))
        hashes.append(take(n).decode("utf-8"))
    (n_sizes,) = struct.unpack(">H", take(2))
    sizes = struct.unpack(f">{n_sizes}I", take(n_sizes * 4))
    topology = NetworkTopology(layer_sizes=tuple(sizes))
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        W = (
            np.frombuffer(take(fan_out * fan_in * 8), dtype=">f8")
            .reshape(fan_out, fan_in)
            .astype(np.float64)
        )
        b = np.frombuffer(take(fan_out * 8), dtype=">f8").astype(np.float64)
        layers.append(Layer(W=W, b=b))
    if pos != len(data):
        raise FormatError("trailing bytes after model parameters")
    meta = ModelMeta(
        catalog_hash=hashes[0],
        norms_hash=hashes[1],
        mask=FeatureGroupMask.from_bits(mask_bits),
    )
    return Network(topology=topology, layers=tuple(layers), meta=meta)
