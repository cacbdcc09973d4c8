"""Dense feed-forward networks with backpropagation and Adam training.

Only what the pair classifier needs: leaky-ReLU hidden layers, a single
linear output (a logit), binary cross-entropy on logits with an l1 penalty
on the weight matrices.
"""

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError

LEAKY_RELU = "leaky_relu"
LINEAR = "linear"
DB_FLOOR = 1e-15


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray
    activation: str = LEAKY_RELU
    slope: float = 0.01

    @property
    def shape(self):
        return self.weights.shape


def _identity(x):
    return x


def rss_pair_db(x, epsilon=DB_FLOOR, offset=0.0, scale=1.0):
    """Map ``[r, r']`` (last axis 2F) to ``[dB r, dB r', dB r - dB r']``.

    ``offset`` and ``scale`` (scalars or length-3F) standardize the result;
    they are fixed at construction and never trained.
    """
    x = np.asarray(x, float)
    F = x.shape[-1] // 2
    a = 10.0 * np.log10(np.maximum(x[..., :F], epsilon))
    b = 10.0 * np.log10(np.maximum(x[..., F:], epsilon))
    out = np.concatenate([a, b, a - b], axis=-1)
    return (out - np.asarray(offset, float)) / np.asarray(scale, float)


INPUT_TRANSFORMS = {"identity": (_identity, lambda d: d), "rss_pair_db": (rss_pair_db, lambda d: d // 2 * 3)}


@dataclass
class Network:
    """``layers`` applied after a fixed, non-trainable ``input_transform``.

    ``input_transform`` is ``{"kind": name, **params}`` so that it can be
    written to and read from the weights file.
    """

    layers: list
    input_transform: dict = field(default_factory=lambda: {"kind": "identity"})
    input_dim: int = None

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.weights.shape[1] != prev.weights.shape[0]:
                raise ValueError("layer dimensions do not chain")
        last = self.layers[-1]
        if last.weights.shape[0] != 1 or last.activation != LINEAR:
            raise ValueError("final layer must have one linear output")
        kind = self.input_transform.get("kind")
        if kind not in INPUT_TRANSFORMS:
            raise ValueError(f"unknown input transform {kind!r}")
        if self.input_dim is None:
            self.input_dim = self.layers[0].weights.shape[1] if kind == "identity" else None
        if self.input_dim is not None:
            width = INPUT_TRANSFORMS[kind][1](self.input_dim)
            if width != self.layers[0].weights.shape[1]:
                raise ValueError("input transform width does not match first layer")

    @property
    def dtype(self):
        return self.layers[0].weights.dtype

    @property
    def hidden(self):
        return tuple(layer.weights.shape[0] for layer in self.layers[:-1])

    def transform(self, x):
        kind = self.input_transform["kind"]
        params = {k: v for k, v in self.input_transform.items() if k != "kind"}
        x = np.asarray(x, float)
        if self.input_dim is not None and x.shape[-1] != self.input_dim:
            raise ValueError(f"input has width {x.shape[-1]}, network expects {self.input_dim}")
        return INPUT_TRANSFORMS[kind][0](x, **params)

    def parameters(self):
        for layer in self.layers:
            yield layer.weights
            yield layer.bias

    def copy(self):
        return copy.deepcopy(self)


def build_network(input_dim, hidden=(512, 512, 512), slope=0.01, rng=None,
                  input_transform=None, dtype=np.float64):
    """He-uniform initialized MLP ending in one linear unit."""
    rng = np.random.default_rng(rng)
    input_transform = input_transform or {"kind": "identity"}
    width = INPUT_TRANSFORMS[input_transform["kind"]][1](input_dim)
    sizes = [width, *hidden, 1]
    layers = []
    for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
        limit = np.sqrt(6.0 / n_in)
        w = rng.uniform(-limit, limit, size=(n_out, n_in)).astype(dtype)
        act = LINEAR if i == len(sizes) - 2 else LEAKY_RELU
        layers.append(DenseLayer(w, np.zeros(n_out, dtype=dtype), act, slope))
    return Network(layers, dict(input_transform), input_dim)


def _activate(layer, z):
    if layer.activation == LINEAR:
        return z
    return np.where(z > 0, z, layer.slope * z)


def _forward_layers(net, h, keep=False):
    cache = []
    for layer in net.layers:
        z = h @ layer.weights.T + layer.bias
        if keep:
            cache.append((h, z))
        h = _activate(layer, z)
    return h[..., 0], cache


def forward_features(net, features):
    """Logits for inputs that already went through the input transform."""
    h = np.asarray(features, dtype=net.dtype)
    logits, _ = _forward_layers(net, h)
    return logits


def forward(net, x):
    """Logit(s) for raw input ``x`` (a vector or an ``(B, d)`` batch)."""
    x = np.asarray(x, float)
    single = x.ndim == 1
    out = forward_features(net, net.transform(np.atleast_2d(x)))
    return float(out[0]) if single else out


def l1_norm(net):
    return float(sum(np.abs(layer.weights).sum() for layer in net.layers))


def bce_from_logits(logits, labels):
    """Per-sample ``-[y log s(z) + (1-y) log(1-s(z))]`` in overflow-free form."""
    z = np.asarray(logits, float)
    y = np.asarray(labels, float)
    return np.logaddexp(0.0, z) - y * z


def bce_l1_loss(logits, labels, net, l1=0.0):
    logits = np.asarray(logits, float)
    labels = np.asarray(labels, float)
    if logits.shape != labels.shape:
        raise ValueError("logits and labels must have equal length")
    data = float(bce_from_logits(logits, labels).mean()) if logits.size else 0.0
    return data + l1 * l1_norm(net)


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def backward_features(net, features, labels, l1=0.0, penalty_in_loss=True):
    """Loss and gradients ``[(dW, db), ...]`` for transformed inputs.

    With ``penalty_in_loss=False`` the returned loss is the data term only
    (the gradient always includes the l1 subgradient).
    """
    h = np.asarray(features, dtype=net.dtype)
    y = np.asarray(labels, dtype=net.dtype)
    if h.ndim != 2 or h.shape[0] != y.shape[0]:
        raise ValueError("features must be (B, d) with one label per row")
    if h.shape[1] != net.layers[0].weights.shape[1]:
        raise ValueError("feature width does not match first layer")
    logits, cache = _forward_layers(net, h, keep=True)
    B = h.shape[0]
    loss = float(bce_from_logits(logits, y).mean())
    if penalty_in_loss and l1:
        loss += l1 * l1_norm(net)
    delta = ((_sigmoid(logits) - y) / B)[:, None]
    grads = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        a_in, z = cache[i]
        if layer.activation != LINEAR:
            delta = delta * np.where(z > 0, 1.0, layer.slope)
        dW = delta.T @ a_in
        if l1:
            sub = np.sign(layer.weights)
            sub *= l1
            dW += sub
        db = delta.sum(axis=0)
        grads[i] = (dW, db)
        if i:
            delta = delta @ layer.weights
    return loss, grads


def backward(net, inputs, labels, l1=0.0):
    """Gradients of :func:`bce_l1_loss` with respect to every weight and bias."""
    x = np.atleast_2d(np.asarray(inputs, float))
    _, grads = backward_features(net, net.transform(x), labels, l1)
    return grads


# -- training ------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    l1_coefficient: float = 1e-5
    max_epochs: int = 200
    batch_size: int = 64
    early_stop_patience: int = 20
    seed: int = 0
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.l1_coefficient < 0:
            raise ValueError("l1_coefficient must be >= 0")
        if self.max_epochs < 0 or self.early_stop_patience < 1:
            raise ValueError("max_epochs must be >= 0 and patience >= 1")


@dataclass
class TrainReport:
    """Epoch 0 is the evaluation before any update."""

    train_loss: list
    val_loss: list
    val_accuracy: list
    stopped_epoch: int
    best_epoch: int


def _adam_step(p, g, m, v, tmp, b1, b2, lr, eps):
    # In place: these arrays are large and the update runs every batch.
    m *= b1
    np.multiply(g, 1 - b1, out=tmp, casting="unsafe")
    m += tmp
    v *= b2
    np.multiply(g, g, out=tmp, casting="unsafe")
    tmp *= 1 - b2
    v += tmp
    np.sqrt(v, out=tmp)
    tmp += eps
    np.divide(m, tmp, out=tmp)
    tmp *= lr
    p -= tmp


def _accuracy(logits, labels):
    return float(np.mean((logits > 0) == (np.asarray(labels) > 0.5))) if len(labels) else float("nan")


def train(net, train_x, train_y, val_x, val_y, cfg=TrainConfig(), transformed=False):
    """Adam mini-batch training with early stopping on validation loss.

    Updates ``net`` in place, leaving it at the best validation epoch.
    Inputs are raw network inputs unless ``transformed`` is set.
    """
    train_y = np.asarray(train_y, float)
    val_y = np.asarray(val_y, float)
    if len(train_y) == 0 or len(val_y) == 0:
        raise ValueError("training and validation sets must be non-empty")
    dtype = net.dtype
    Xt = np.asarray(train_x if transformed else net.transform(train_x), dtype=dtype)
    Xv = np.asarray(val_x if transformed else net.transform(val_x), dtype=dtype)
    if Xt.shape[0] != len(train_y) or Xv.shape[0] != len(val_y):
        raise ValueError("feature and label counts differ")
    yt, yv = train_y.astype(dtype), val_y.astype(dtype)
    rng = np.random.default_rng(cfg.seed)
    lam = cfg.l1_coefficient

    def evaluate(X, y):
        logits = forward_features(net, X)
        return bce_l1_loss(logits, y, net, lam), _accuracy(logits, y)

    tl, _ = evaluate(Xt, yt)
    vl, va = evaluate(Xv, yv)
    report = TrainReport([tl], [vl], [va], 0, 0)
    best = (vl, [p.copy() for p in net.parameters()])
    params = list(net.parameters())
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    tmp = [np.empty_like(p) for p in params]
    b1, b2 = cfg.betas
    step = 0
    since_best = 0
    n = Xt.shape[0]
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = backward_features(net, Xt[idx], yt[idx], lam, penalty_in_loss=False)
            batch_losses.append(loss * len(idx))
            step += 1
            flat = [g for pair in grads for g in pair]
            lr_t = cfg.learning_rate * np.sqrt(1 - b2 ** step) / (1 - b1 ** step)
            for p, g, mi, vi, t in zip(params, flat, m, v, tmp):
                _adam_step(p, g, mi, vi, t, b1, b2, lr_t, cfg.eps)
        report.train_loss.append(float(np.sum(batch_losses) / n) + lam * l1_norm(net))
        vl, va = evaluate(Xv, yv)
        report.val_loss.append(vl)
        report.val_accuracy.append(va)
        report.stopped_epoch = epoch
        if vl < best[0]:
            best = (vl, [p.copy() for p in params])
            report.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.early_stop_patience:
                break
    for p, saved in zip(params, best[1]):
        p[...] = saved
    return report


# -- persistence ---------------------------------------------------------------

def network_to_dict(net):
    return {
        "arch": {
            "input_dim": net.input_dim,
            "hidden": list(net.hidden),
            "activation": LEAKY_RELU,
            "slope": float(net.layers[0].slope),
            "dtype": str(net.dtype),
        },
        "layers": [
            {"rows": int(l.weights.shape[0]), "cols": int(l.weights.shape[1]),
             "weights": l.weights.astype(float).ravel().tolist(),
             "bias": l.bias.astype(float).tolist(),
             "activation": l.activation, "slope": float(l.slope)}
            for l in net.layers
        ],
        "input_transform": dict(net.input_transform),
    }


def network_from_dict(doc):
    try:
        arch = doc["arch"]
        items = doc["layers"]
        transform = doc.get("input_transform", {"kind": "identity"})
        hidden = list(arch["hidden"])
        dtype = np.dtype(arch.get("dtype", "float64"))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"weights document missing field: {exc}") from None
    if len(items) != len(hidden) + 1:
        raise SchemaError(f"arch declares {len(hidden)} hidden layers but file has {len(items)} layers")
    layers = []
    for i, item in enumerate(items):
        rows, cols = int(item["rows"]), int(item["cols"])
        w = np.asarray(item["weights"], float)
        b = np.asarray(item["bias"], float)
        if w.size != rows * cols or b.size != rows:
            raise SchemaError(f"layer {i}: weight/bias sizes do not match {rows}x{cols}")
        if i < len(hidden) and rows != hidden[i]:
            raise SchemaError(f"layer {i}: {rows} rows but arch says {hidden[i]}")
        act = item.get("activation", LEAKY_RELU)
        if act not in (LEAKY_RELU, LINEAR):
            raise SchemaError(f"layer {i}: unknown activation {act!r}")
        layers.append(DenseLayer(w.reshape(rows, cols).astype(dtype), b.astype(dtype), act,
                                 float(item.get("slope", arch.get("slope", 0.01)))))
    try:
        return Network(layers, transform, arch.get("input_dim"))
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def save_weights(net, path, **extra):
    doc = network_to_dict(net)
    doc.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)


def load_weights(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict):
        raise SchemaError("weights file must hold a JSON object")
    return network_from_dict(doc)
