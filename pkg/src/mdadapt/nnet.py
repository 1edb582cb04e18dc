"""Dense-network building blocks: layers, losses, SGD.

Everything is float64 and deterministic. Inputs may be single vectors
(1-D) or batches of row vectors (2-D); shapes are checked explicitly so
mismatches fail loudly instead of broadcasting silently.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

ACTIVATIONS = ("linear", "relu", "tanh")


@dataclass
class DenseLayer:
    """Fully connected layer y = act(W x + b), W is (out, in) row-major."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "linear"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ShapeError("weights must be 2-D (out, in)")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"bias length {self.bias.shape} does not match "
                f"{self.weights.shape[0]} output units"
            )
        if self.activation not in ACTIVATIONS:
            raise ShapeError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]


@dataclass
class LayerCache:
    """Forward-pass intermediates needed by the backward pass."""

    input: np.ndarray
    pre_activation: np.ndarray
    output: np.ndarray


def init_layer(rng, in_dim, out_dim, activation="linear"):
    """Scaled-uniform weight init in +-sqrt(6/(fan_in+fan_out)); zero bias."""
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
    return DenseLayer(weights, np.zeros(out_dim), activation)


def _activate(name, z):
    if name == "linear":
        return z.copy()
    if name == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activation_grad(name, z, y):
    if name == "linear":
        return np.ones_like(z)
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    return 1.0 - y * y


def dense_forward(layer, x):
    """Apply the layer to a vector or batch of row vectors.

    Returns the activation output plus a LayerCache for dense_backward.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.in_dim:
        raise ShapeError(f"input dim {x.shape[-1]} != layer in_dim {layer.in_dim}")
    if x.ndim == 1:
        z = layer.weights @ x + layer.bias
    elif x.ndim == 2:
        z = x @ layer.weights.T + layer.bias
    else:
        raise ShapeError("input must be 1-D or 2-D")
    y = _activate(layer.activation, z)
    return y, LayerCache(input=x, pre_activation=z, output=y)


def dense_backward(layer, cache, upstream):
    """Chain rule through the layer.

    For batched caches the weight/bias gradients are summed over rows;
    any averaging is the caller's job (done once at the loss).
    Returns (dW, db, dx).
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != cache.output.shape:
        raise ShapeError(
            f"upstream shape {upstream.shape} != output shape {cache.output.shape}"
        )
    dz = upstream * _activation_grad(layer.activation, cache.pre_activation, cache.output)
    if dz.ndim == 1:
        d_weights = np.outer(dz, cache.input)
        d_bias = dz.copy()
        d_input = layer.weights.T @ dz
    else:
        d_weights = dz.T @ cache.input
        d_bias = dz.sum(axis=0)
        d_input = dz @ layer.weights
    return d_weights, d_bias, d_input


def softmax(logits):
    """Row-wise stable softmax (max subtraction)."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, label):
    """Loss and logit gradient for a single sample.

    loss = -log softmax(logits)[label], grad = softmax(logits) - onehot(label).
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ShapeError("logits must be 1-D; use softmax_cross_entropy_batch")
    label = int(label)
    if not 0 <= label < logits.shape[0]:
        raise IndexError(f"label {label} out of range for {logits.shape[0]} classes")
    shifted = logits - logits.max()
    log_z = np.log(np.exp(shifted).sum())
    loss = log_z - shifted[label]
    grad = softmax(logits)
    grad[label] -= 1.0
    return loss, grad


def softmax_cross_entropy_batch(logits, labels):
    """Vectorized per-row cross-entropy; returns (losses, grads)."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError("need (n, k) logits and (n,) labels")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise IndexError("label out of range")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(logits.shape[0])
    losses = log_z - shifted[rows, labels]
    grads = softmax(logits)
    grads[rows, labels] -= 1.0
    return losses, grads


def grl_backward(upstream, lam):
    """Gradient-reversal backward pass: -lam * upstream (forward is identity)."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return -lam * np.asarray(upstream, dtype=np.float64)


def sgd_step(params, grads, mu):
    """Plain SGD update params - mu * grads; returns a new array."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise ShapeError(f"param shape {params.shape} != grad shape {grads.shape}")
    if mu <= 0:
        raise ValueError("learning rate must be > 0")
    return params - mu * grads
