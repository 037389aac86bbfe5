"""ReLU feed-forward network data model.

Loading/saving, exact forward evaluation, activation patterns, the affine
map a pattern induces on its linear region, interval pre-activation
bounds, and seeded random-network generation. A network is a stack of
dense affine layers; every layer except the last applies h = max(0, g),
the last is affine only. All values are immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

# absolute tolerance for treating a pre-activation as exactly zero when
# deciding activation states; ties inherit the previous pattern if given
TIE_TOL = 1e-9


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray  # (n_l, n_{l-1})
    bias: np.ndarray     # (n_l,)
    has_relu: bool

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise ValueError("layer weights must be a matrix")
        if w.shape[0] != b.shape[0]:
            raise ValueError(
                f"layer has {w.shape[0]} weight rows but {b.shape[0]} biases")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer has non-finite weights or biases")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]


class Network:
    """Immutable stack of layers: hidden ReLU layers then one affine
    output layer."""

    def __init__(self, layers: list[Layer], input_dim: int):
        if input_dim < 1:
            raise ValueError("input_dim must be positive")
        if len(layers) < 2:
            raise ValueError("need at least one hidden layer plus the output layer")
        prev = input_dim
        for idx, layer in enumerate(layers):
            if layer.fan_in != prev:
                raise ValueError(
                    f"layer {idx} expects {layer.fan_in} inputs but the "
                    f"previous layer produces {prev}")
            prev = layer.size
        for idx, layer in enumerate(layers[:-1]):
            if not layer.has_relu:
                raise ValueError(f"hidden layer {idx} must have relu=true")
        if layers[-1].has_relu:
            raise ValueError("output layer must have relu=false")
        self.layers = tuple(layers)
        self.input_dim = int(input_dim)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].size

    @property
    def hidden_layers(self) -> tuple[Layer, ...]:
        return self.layers[:-1]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(l.size for l in self.hidden_layers)

    @property
    def total_hidden(self) -> int:
        return sum(self.hidden_sizes)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (self.input_dim == other.input_dim
                and len(self.layers) == len(other.layers)
                and all(np.array_equal(a.weights, b.weights)
                        and np.array_equal(a.bias, b.bias)
                        and a.has_relu == b.has_relu
                        for a, b in zip(self.layers, other.layers)))


@dataclass
class LayerTrace:
    """Per-layer pre/post activations of one forward pass."""

    pre: list[np.ndarray]   # g per layer
    post: list[np.ndarray]  # h per layer (h = g on the output layer)

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]


class ActivationPattern:
    """Active-neuron sets, one boolean mask per hidden layer."""

    def __init__(self, active: list[np.ndarray]):
        masks = []
        for a in active:
            m = np.asarray(a, dtype=bool).copy()
            m.setflags(write=False)
            masks.append(m)
        self.active = tuple(masks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(m.shape[0] for m in self.active)

    def as_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(np.nonzero(m)[0].tolist()) for m in self.active)

    def __eq__(self, other):
        if not isinstance(other, ActivationPattern):
            return NotImplemented
        return (self.sizes == other.sizes
                and all(np.array_equal(a, b)
                        for a, b in zip(self.active, other.active)))

    def __hash__(self):
        return hash(tuple(m.tobytes() for m in self.active))

    def __repr__(self):
        sets = [sorted(np.nonzero(m)[0].tolist()) for m in self.active]
        return f"ActivationPattern({sets})"


@dataclass(frozen=True)
class AffineMap:
    """y = matrix @ x + offset on the region that induced it."""

    matrix: np.ndarray  # (m, n0)
    offset: np.ndarray  # (m,)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float) + self.offset


@dataclass(frozen=True)
class NeuronBounds:
    """Sound per-neuron pre-activation intervals, one pair of arrays per
    hidden layer."""

    lower: tuple[np.ndarray, ...]
    upper: tuple[np.ndarray, ...]

    def __post_init__(self):
        for lb, ub in zip(self.lower, self.upper):
            if np.any(lb > ub):
                raise ValueError("lower bound above upper bound")


def forward(net: Network, x: np.ndarray) -> LayerTrace:
    """Exact affine + max(0, .) evaluation, layer by layer."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise ValueError(f"input has shape {x.shape}, expected ({net.input_dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("input entries must be finite")
    pre, post = [], []
    h = x
    for layer in net.layers:
        g = layer.weights @ h + layer.bias
        h = np.maximum(g, 0.0) if layer.has_relu else g
        pre.append(g)
        post.append(h)
    return LayerTrace(pre=pre, post=post)


def activation_pattern(net: Network, x: np.ndarray,
                       prev: ActivationPattern | None = None,
                       tie_tol: float = TIE_TOL) -> ActivationPattern:
    """Activation sets at x: active iff g > 0; a |g| <= tie_tol tie keeps
    the state it had in `prev` (default inactive with no history)."""
    trace = forward(net, x)
    if prev is not None and prev.sizes != net.hidden_sizes:
        raise ValueError("previous pattern does not match the network shape")
    masks = []
    for li in range(len(net.hidden_layers)):
        g = trace.pre[li]
        active = g > tie_tol
        tied = np.abs(g) <= tie_tol
        if prev is not None:
            active = np.where(tied, prev.active[li], active)
        masks.append(active)
    return ActivationPattern(masks)


def region_affine_map(net: Network, pattern: ActivationPattern) -> AffineMap:
    """Compose mask-gated affine layers into the single map the network
    applies on the pattern's linear region; the output layer is applied
    unmasked last."""
    if pattern.sizes != net.hidden_sizes:
        raise ValueError("pattern does not match the network shape")
    T = np.eye(net.input_dim)
    t = np.zeros(net.input_dim)
    for li, layer in enumerate(net.hidden_layers):
        mask = pattern.active[li].astype(float)
        T = (layer.weights * mask[:, None]) @ T
        t = mask * (layer.weights @ t + layer.bias)
    out = net.layers[-1]
    return AffineMap(matrix=out.weights @ T, offset=out.weights @ t + out.bias)


def layer_bounds(net: Network, lo: np.ndarray, hi: np.ndarray) -> NeuronBounds:
    """Interval propagation of pre-activation ranges over an input box.

    Sound: for every x in the box, lb <= g <= ub holds per neuron. The
    box must be finite in every coordinate.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != (net.input_dim,) or hi.shape != (net.input_dim,):
        raise ValueError("box must have one (lo, hi) pair per input")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("interval bounds need a finite box in every coordinate")
    if np.any(lo > hi):
        raise ValueError("box lower bound exceeds upper bound")
    lbs, ubs = [], []
    cur_lo, cur_hi = lo, hi
    for layer in net.hidden_layers:
        wp = np.maximum(layer.weights, 0.0)
        wn = np.minimum(layer.weights, 0.0)
        g_lo = wp @ cur_lo + wn @ cur_hi + layer.bias
        g_hi = wp @ cur_hi + wn @ cur_lo + layer.bias
        lbs.append(g_lo)
        ubs.append(g_hi)
        cur_lo = np.maximum(g_lo, 0.0)
        cur_hi = np.maximum(g_hi, 0.0)
    return NeuronBounds(lower=tuple(lbs), upper=tuple(ubs))


def random_network(input_dim: int, depth: int, width: int, seed: int,
                   output_dim: int = 1) -> Network:
    """Seeded random network: `depth` hidden layers of `width` neurons.

    Weights are uniform in +-sqrt(6 / fan_in), biases uniform in [-1, 1],
    which yields a healthy mix of active and inactive neurons.
    """
    if input_dim < 1 or depth < 1 or width < 1 or output_dim < 1:
        raise ValueError("network dimensions must be positive")
    rng = np.random.default_rng(seed)
    layers = []
    fan_in = input_dim
    for _ in range(depth):
        bound = math.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(width, fan_in))
        b = rng.uniform(-1.0, 1.0, size=width)
        layers.append(Layer(weights=w, bias=b, has_relu=True))
        fan_in = width
    bound = math.sqrt(6.0 / fan_in)
    w = rng.uniform(-bound, bound, size=(output_dim, fan_in))
    b = rng.uniform(-1.0, 1.0, size=output_dim)
    layers.append(Layer(weights=w, bias=b, has_relu=False))
    return Network(layers, input_dim)


def load_network(source) -> Network:
    """Parse a network document (dict, JSON string, or readable file)."""
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, (str, bytes)):
        doc = json.loads(source)
    else:
        doc = json.load(source)
    if not isinstance(doc, dict):
        raise ValueError("network document must be a JSON object")
    try:
        input_dim = int(doc["input_dim"])
        raw_layers = doc["layers"]
    except KeyError as err:
        raise ValueError(f"network document missing key {err}") from None
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ValueError("network document needs a non-empty layers list")
    layers = []
    for idx, entry in enumerate(raw_layers):
        try:
            weights = entry["weights"]
            bias = entry["bias"]
            relu = bool(entry["relu"])
        except (KeyError, TypeError):
            raise ValueError(f"layer {idx}: missing weights/bias/relu") from None
        try:
            w = np.asarray(weights, dtype=float)
            b = np.asarray(bias, dtype=float)
        except (ValueError, TypeError):
            raise ValueError(f"layer {idx}: ragged or non-numeric weights") from None
        if w.ndim != 2:
            raise ValueError(f"layer {idx}: weights must be a matrix")
        for r in range(w.shape[0]):
            if not np.all(np.isfinite(w[r])):
                raise ValueError(f"layer {idx}, row {r}: non-finite weight")
        if not np.all(np.isfinite(b)):
            raise ValueError(f"layer {idx}: non-finite bias")
        try:
            layers.append(Layer(weights=w, bias=b, has_relu=relu))
        except ValueError as err:
            raise ValueError(f"layer {idx}: {err}") from None
    try:
        return Network(layers, input_dim)
    except ValueError as err:
        raise ValueError(str(err)) from None


def save_network(net: Network) -> dict:
    """Document form of a network; json.dumps of it reloads identically."""
    return {
        "input_dim": net.input_dim,
        "layers": [
            {
                "weights": [list(map(float, row)) for row in layer.weights],
                "bias": [float(v) for v in layer.bias],
                "relu": layer.has_relu,
            }
            for layer in net.layers
        ],
    }
