"""Multi-domain adversarial network: generator, speaker classifier,
domain discriminator behind a gradient-reversal layer.

The topology is fixed (three dense chains), so backprop is hand-chained
rather than going through a general autodiff graph. The classifier sees
only labeled source samples; the discriminator sees everything; the
generator receives the classifier gradient plus the reversed (-lambda)
discriminator gradient, all computed from the same pre-update parameters.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import EmbeddingSet, LabeledVectorSet, Record
from .errors import ConfigError, ContractError, ShapeError, TrainingDivergedError
from .nnet import (
    DenseLayer,
    dense_backward,
    dense_forward,
    grl_backward,
    init_layer,
    sgd_step,
    softmax_cross_entropy_batch,
)

CHECKPOINT_FORMAT = "mdann-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class ArchSpec:
    """Hidden-layer widths for the three sub-networks.

    Defaults match the full-scale setup (two 512-node layers for the
    generator and discriminator, two 300-node layers for the classifier);
    desk-scale experiments shrink these through the config.
    """

    generator_hidden: tuple = (512, 512)
    classifier_hidden: tuple = (300, 300)
    discriminator_hidden: tuple = (512, 512)
    activation: str = "relu"


@dataclass
class MdannModel:
    generator: list
    classifier: list
    discriminator: list
    input_dim: int
    n_speakers: int
    n_domains: int

    def parameters(self):
        """All (network, layer-index, 'weights'|'bias') leaves, fixed order."""
        out = []
        for name, layers in (
            ("generator", self.generator),
            ("classifier", self.classifier),
            ("discriminator", self.discriminator),
        ):
            for i, layer in enumerate(layers):
                out.append((name, i, "weights", layer.weights))
                out.append((name, i, "bias", layer.bias))
        return out

    @property
    def embedding_dim(self):
        return self.generator[-1].out_dim


@dataclass
class TrainConfig:
    grl_lambda: float = 1.0
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 64
    seed: int = 0
    lambda_schedule: str = "constant"  # "constant" | "ramp"
    domain_loss_weighting: bool = False

    def __post_init__(self):
        if self.grl_lambda < 0:
            raise ConfigError("grl_lambda must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.lambda_schedule not in ("constant", "ramp"):
            raise ConfigError(f"unknown lambda_schedule {self.lambda_schedule!r}")


@dataclass
class TrainStats:
    """Per-epoch training diagnostics."""

    cls_loss: list = field(default_factory=list)
    adv_loss: list = field(default_factory=list)
    total_loss: list = field(default_factory=list)
    speaker_acc: list = field(default_factory=list)
    domain_acc: list = field(default_factory=list)

    def append_epoch(self, cls_loss, adv_loss, total_loss, speaker_acc, domain_acc):
        self.cls_loss.append(cls_loss)
        self.adv_loss.append(adv_loss)
        self.total_loss.append(total_loss)
        self.speaker_acc.append(speaker_acc)
        self.domain_acc.append(domain_acc)

    def n_epochs(self):
        return len(self.total_loss)


def build_model(input_dim, n_speakers, n_domains, arch=None, seed=0):
    """Create a seeded MDANN with the given class counts.

    Generator layers are all activated; classifier and discriminator end
    in linear logit layers sized n_speakers and n_domains.
    """
    if input_dim < 1 or n_speakers < 1 or n_domains < 1:
        raise ConfigError("input_dim, n_speakers, n_domains must all be >= 1")
    arch = arch or ArchSpec()
    for widths in (arch.generator_hidden, arch.classifier_hidden, arch.discriminator_hidden):
        if not widths or any(w < 1 for w in widths):
            raise ConfigError("all hidden widths must be >= 1")
    rng = np.random.default_rng(seed)

    def chain(in_dim, hidden, out_dim=None):
        layers = []
        prev = in_dim
        for width in hidden:
            layers.append(init_layer(rng, prev, width, arch.activation))
            prev = width
        if out_dim is not None:
            layers.append(init_layer(rng, prev, out_dim, "linear"))
        return layers

    generator = chain(input_dim, arch.generator_hidden)
    emb_dim = arch.generator_hidden[-1]
    classifier = chain(emb_dim, arch.classifier_hidden, n_speakers)
    discriminator = chain(emb_dim, arch.discriminator_hidden, n_domains)
    return MdannModel(
        generator=generator,
        classifier=classifier,
        discriminator=discriminator,
        input_dim=input_dim,
        n_speakers=n_speakers,
        n_domains=n_domains,
    )


def _forward_chain(layers, x):
    caches = []
    h = x
    for layer in layers:
        h, cache = dense_forward(layer, h)
        caches.append(cache)
    return h, caches


def _backward_chain(layers, caches, upstream):
    """Returns per-layer (dW, db) list plus the gradient w.r.t. the input."""
    grads = [None] * len(layers)
    g = upstream
    for i in range(len(layers) - 1, -1, -1):
        d_weights, d_bias, g = dense_backward(layers[i], caches[i], g)
        grads[i] = (d_weights, d_bias)
    return grads, g


def _zero_grads(layers):
    return [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in layers]


def forward_losses(model, x, speaker_label, domain_label):
    """Per-sample losses: classifier loss (source only) and adversary loss.

    speaker_label must be None for target-domain samples (unsupervised
    setting); passing one is a contract violation handled by train().
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise ShapeError(f"input shape {x.shape} != ({model.input_dim},)")
    g_out, g_caches = _forward_chain(model.generator, x[None, :])
    caches = {"generator": g_caches}
    l_cls = None
    if speaker_label is not None:
        c_logits, c_caches = _forward_chain(model.classifier, g_out)
        losses, _ = softmax_cross_entropy_batch(c_logits, [int(speaker_label)])
        l_cls = float(losses[0])
        caches["classifier"] = c_caches
    d_logits, d_caches = _forward_chain(model.discriminator, g_out)
    adv_losses, _ = softmax_cross_entropy_batch(d_logits, [int(domain_label)])
    caches["discriminator"] = d_caches
    return l_cls, float(adv_losses[0]), caches


def effective_lambda(cfg, step, total_steps):
    """Trade-off weight for a given step under the configured schedule."""
    if cfg.lambda_schedule == "constant":
        return cfg.grl_lambda
    progress = 0.0 if total_steps <= 0 else min(1.0, step / total_steps)
    return cfg.grl_lambda * (2.0 / (1.0 + math.exp(-10.0 * progress)) - 1.0)


def batch_gradients(model, x, speaker_labels, domain_labels, lam, domain_weights=None):
    """One fused forward/backward pass over a batch.

    speaker_labels uses -1 for unlabeled (target) rows. Classifier
    gradients average over labeled rows, adversary gradients over all
    rows; -lambda enters only through the GRL on the discriminator
    branch. Returns (grads dict, stats dict).
    """
    x = np.asarray(x, dtype=np.float64)
    speaker_labels = np.asarray(speaker_labels, dtype=np.int64)
    domain_labels = np.asarray(domain_labels, dtype=np.int64)
    n = x.shape[0]
    if n == 0:
        raise ContractError("empty batch")

    g_out, g_caches = _forward_chain(model.generator, x)
    src_mask = speaker_labels >= 0
    n_src = int(src_mask.sum())

    g_upstream = np.zeros_like(g_out)
    stats = {"n": n, "n_source": n_src}

    if n_src > 0:
        c_logits, c_caches = _forward_chain(model.classifier, g_out[src_mask])
        cls_losses, d_logits_c = softmax_cross_entropy_batch(
            c_logits, speaker_labels[src_mask]
        )
        grads_c, d_gout_cls = _backward_chain(
            model.classifier, c_caches, d_logits_c / n_src
        )
        g_upstream[src_mask] += d_gout_cls
        stats["cls_loss"] = float(cls_losses.mean())
        stats["speaker_correct"] = int(
            (c_logits.argmax(axis=1) == speaker_labels[src_mask]).sum()
        )
    else:
        grads_c = _zero_grads(model.classifier)
        stats["cls_loss"] = None
        stats["speaker_correct"] = 0

    d_logits, d_caches = _forward_chain(model.discriminator, g_out)
    adv_losses, d_logits_d = softmax_cross_entropy_batch(d_logits, domain_labels)
    if domain_weights is not None:
        weights = np.asarray(domain_weights, dtype=np.float64)[domain_labels]
        d_logits_d = d_logits_d * weights[:, None]
        adv_mean = float((adv_losses * weights).mean())
    else:
        adv_mean = float(adv_losses.mean())
    grads_d, d_gout_adv = _backward_chain(model.discriminator, d_caches, d_logits_d / n)
    g_upstream += grl_backward(d_gout_adv, lam)
    grads_g, _ = _backward_chain(model.generator, g_caches, g_upstream)

    stats["adv_loss"] = adv_mean
    stats["domain_correct"] = int((d_logits.argmax(axis=1) == domain_labels).sum())
    return {"generator": grads_g, "classifier": grads_c, "discriminator": grads_d}, stats


def apply_gradients(model, grads, mu):
    for name in ("generator", "classifier", "discriminator"):
        layers = getattr(model, name)
        for layer, (d_weights, d_bias) in zip(layers, grads[name]):
            layer.weights = sgd_step(layer.weights, d_weights, mu)
            layer.bias = sgd_step(layer.bias, d_bias, mu)


def train_step(model, x, speaker_labels, domain_labels, cfg, step=0, total_steps=1,
               domain_weights=None):
    """Single SGD step over one minibatch; mutates the model in place.

    All three parameter groups are updated from gradients computed at
    the same pre-update parameters. Returns the batch stats dict.
    """
    lam = effective_lambda(cfg, step, total_steps)
    grads, stats = batch_gradients(
        model, x, speaker_labels, domain_labels, lam, domain_weights
    )
    losses = [v for v in (stats["cls_loss"], stats["adv_loss"]) if v is not None]
    if not all(np.isfinite(losses)):
        raise TrainingDivergedError(epoch=stats.get("epoch", -1), step=step)
    apply_gradients(model, grads, cfg.learning_rate)
    return stats


def _prepare_training_arrays(model, source_set, target_set):
    if target_set is not None and target_set.has_speaker_labels():
        raise ContractError(
            "target set carries speaker labels; the setting is unsupervised"
        )
    for rec in source_set:
        if rec.speaker is None:
            raise ContractError(f"source record {rec.id!r} lacks a speaker label")
        if rec.domain is None:
            raise ContractError(f"source record {rec.id!r} lacks a domain label")
    if target_set is not None:
        for rec in target_set:
            if rec.domain is None:
                raise ContractError(f"target record {rec.id!r} lacks a domain label")
        src_domains = set(source_set.domains())
        tgt_domains = set(target_set.domains())
        if src_domains & tgt_domains:
            raise ConfigError(
                f"source/target domain label ranges overlap: {src_domains & tgt_domains}"
            )

    speakers = sorted({rec.speaker for rec in source_set})
    if len(speakers) > model.n_speakers:
        raise ConfigError(
            f"{len(speakers)} source speakers exceed model n_speakers={model.n_speakers}"
        )
    spk_index = {name: i for i, name in enumerate(speakers)}

    rows = [(rec.vector, spk_index[rec.speaker], rec.domain) for rec in source_set]
    if target_set is not None:
        rows += [(rec.vector, -1, rec.domain) for rec in target_set]
    x = np.stack([r[0] for r in rows])
    spk = np.array([r[1] for r in rows], dtype=np.int64)
    dom = np.array([r[2] for r in rows], dtype=np.int64)
    if dom.min() < 0 or dom.max() >= model.n_domains:
        raise ConfigError(
            f"domain labels must lie in [0, {model.n_domains}); got "
            f"[{dom.min()}, {dom.max()}]"
        )
    return x, spk, dom


def train(model, source_set, target_set, cfg):
    """Epoch loop over shuffled source+target minibatches.

    Deterministic given cfg.seed; mutates and returns the model together
    with per-epoch TrainStats.
    """
    x, spk, dom = _prepare_training_arrays(model, source_set, target_set)
    n = x.shape[0]
    rng = np.random.default_rng(cfg.seed)
    stats = TrainStats()
    n_batches = max(1, -(-n // cfg.batch_size))
    total_steps = max(1, cfg.epochs * n_batches)

    domain_weights = None
    if cfg.domain_loss_weighting:
        counts = np.bincount(dom, minlength=model.n_domains).astype(np.float64)
        present = counts > 0
        domain_weights = np.zeros(model.n_domains)
        domain_weights[present] = n / (present.sum() * counts[present])

    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        cls_sum = adv_sum = 0.0
        cls_count = spk_correct = dom_correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            try:
                batch_stats = train_step(
                    model, x[idx], spk[idx], dom[idx], cfg,
                    step=step, total_steps=total_steps,
                    domain_weights=domain_weights,
                )
            except TrainingDivergedError:
                raise TrainingDivergedError(epoch=epoch, step=step)
            step += 1
            if batch_stats["cls_loss"] is not None:
                cls_sum += batch_stats["cls_loss"] * batch_stats["n_source"]
                cls_count += batch_stats["n_source"]
            adv_sum += batch_stats["adv_loss"] * batch_stats["n"]
            spk_correct += batch_stats["speaker_correct"]
            dom_correct += batch_stats["domain_correct"]
        cls_mean = cls_sum / cls_count if cls_count else 0.0
        adv_mean = adv_sum / n
        lam = effective_lambda(cfg, step, total_steps)
        stats.append_epoch(
            cls_loss=cls_mean,
            adv_loss=adv_mean,
            total_loss=cls_mean - lam * adv_mean,
            speaker_acc=spk_correct / cls_count if cls_count else 0.0,
            domain_acc=dom_correct / n,
        )
    return model, stats


def extract_embeddings(model, data, layer="first"):
    """Map records through the generator up to the chosen hidden layer.

    layer "first" takes the post-activation output of the generator's
    first layer (the operative extraction point); "last" takes the
    generator's final output. Labels are carried through unchanged.
    """
    if layer not in ("first", "last"):
        raise ConfigError(f"unknown extraction layer {layer!r}")
    if len(data) == 0:
        return LabeledVectorSet([])
    x = data.vectors()
    if x.shape[1] != model.input_dim:
        raise ShapeError(f"data dim {x.shape[1]} != model input_dim {model.input_dim}")
    depth = 1 if layer == "first" else len(model.generator)
    h = x
    for dense in model.generator[:depth]:
        h, _ = dense_forward(dense, h)
    return data.with_vectors(h)


def _array_to_hex(arr):
    return [float.hex(v) for v in np.asarray(arr, dtype=np.float64).ravel().tolist()]


def _hex_to_array(values, shape):
    return np.array([float.fromhex(v) for v in values], dtype=np.float64).reshape(shape)


def save_checkpoint(model, path):
    """Write the model to a versioned JSON container.

    Floats are stored as C99 hex strings so the round trip is bit-exact.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "input_dim": model.input_dim,
        "n_speakers": model.n_speakers,
        "n_domains": model.n_domains,
        "networks": {},
    }
    for name in ("generator", "classifier", "discriminator"):
        payload["networks"][name] = [
            {
                "out_dim": layer.out_dim,
                "in_dim": layer.in_dim,
                "activation": layer.activation,
                "weights": _array_to_hex(layer.weights),
                "bias": _array_to_hex(layer.bias),
            }
            for layer in getattr(model, name)
        ]
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path):
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"{path}: not a model checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    nets = {}
    for name in ("generator", "classifier", "discriminator"):
        layers = []
        for spec in payload["networks"][name]:
            shape = (spec["out_dim"], spec["in_dim"])
            layers.append(
                DenseLayer(
                    weights=_hex_to_array(spec["weights"], shape),
                    bias=_hex_to_array(spec["bias"], (spec["out_dim"],)),
                    activation=spec["activation"],
                )
            )
        nets[name] = layers
    return MdannModel(
        generator=nets["generator"],
        classifier=nets["classifier"],
        discriminator=nets["discriminator"],
        input_dim=payload["input_dim"],
        n_speakers=payload["n_speakers"],
        n_domains=payload["n_domains"],
    )
