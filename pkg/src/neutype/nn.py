"""Feedforward type classifiers written directly against numpy.

Two topologies are supported. ``neutype1`` concatenates the active inputs
and feeds them through two ReLU hidden layers. ``neutype2`` first gives
every active input its own two-layer ReLU stack and then merges the stack
outputs the same way. Both end in a softmax over the type universe and are
trained with categorical cross entropy and early stopping on validation loss.
"""

from __future__ import annotations

import copy
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_is_fitted, validate_data

from .exceptions import ConfigError, DataError, TrainingError
from .features import FeatureBundle, InputMask

logger = logging.getLogger(__name__)

ARCHITECTURES = ("neutype1", "neutype2")
DROPOUT_POSITIONS = ("before_M1", "between_M1_M2", "after_M2")
OPTIMIZERS = ("sgd", "sgd_momentum", "adam")

CHECKPOINT_MAGIC = b"NTYP"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkTopology:
    architecture: str
    mask: InputMask
    input_dims: tuple[int, ...]
    hidden_size: int = 512
    output_size: int = 2
    dropout: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"architecture must be one of {ARCHITECTURES}, "
                              f"got {self.architecture!r}")
        if not self.mask:
            raise ConfigError("input mask must select at least one of A, B, C")
        if len(self.input_dims) != len(self.mask.active):
            raise ConfigError(f"mask {self.mask} needs {len(self.mask.active)} input "
                              f"dims, got {self.input_dims}")
        if any(d < 1 for d in self.input_dims):
            raise ConfigError(f"input dims must be positive: {self.input_dims}")
        if self.hidden_size < 1:
            raise ConfigError("hidden_size must be >= 1")
        if self.output_size < 2:
            raise ConfigError("output_size must be >= 2")
        for pos, p in self.dropout:
            if pos not in DROPOUT_POSITIONS:
                raise ConfigError(f"unknown dropout position {pos!r}")
            if not 0.0 <= p < 1.0:
                raise ConfigError(f"dropout probability must be in [0, 1): {p}")

    @property
    def layer_shapes(self) -> list[tuple[str, int, int, str]]:
        """(name, fan_in, fan_out, activation) for every dense layer, in order."""
        hid = self.hidden_size
        shapes = []
        if self.architecture == "neutype2":
            for name, dim in zip(self.mask.active, self.input_dims):
                shapes.append((f"hidden_{name.upper()}.1", dim, hid, "relu"))
                shapes.append((f"hidden_{name.upper()}.2", hid, hid, "relu"))
            merge_in = hid * len(self.input_dims)
        else:
            merge_in = sum(self.input_dims)
        shapes += [
            ("hidden_M.1", merge_in, hid, "relu"),
            ("hidden_M.2", hid, hid, "relu"),
            ("output", hid, self.output_size, "none"),
        ]
        return shapes


@dataclass
class Layer:
    name: str
    weights: np.ndarray
    bias: np.ndarray
    activation: str


@dataclass
class ModelParams:
    layers: list[Layer]
    topology: NetworkTopology
    seed: int = 0

    def n_parameters(self) -> int:
        return sum(l.weights.size + l.bias.size for l in self.layers)

    def copy(self) -> "ModelParams":
        return copy.deepcopy(self)

    def to_bytes(self, taxonomy_hash: int = 0) -> bytes:
        """Serialize into the little-endian ``NTYP`` checkpoint layout."""
        topo = self.topology
        out = bytearray(CHECKPOINT_MAGIC)
        out += struct.pack("<HBBIIQI", CHECKPOINT_VERSION,
                           ARCHITECTURES.index(topo.architecture) + 1,
                           topo.mask.bits, topo.hidden_size, topo.output_size,
                           taxonomy_hash & 0xFFFFFFFFFFFFFFFF, len(self.layers))
        for layer in self.layers:
            rows, cols = layer.weights.shape
            out += struct.pack("<II", rows, cols)
            out += np.ascontiguousarray(layer.weights, dtype="<f4").tobytes()
            out += np.ascontiguousarray(layer.bias, dtype="<f4").tobytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, input_dims=None) -> tuple["ModelParams", int]:
        """Inverse of :meth:`to_bytes`; returns ``(params, taxonomy_hash)``.

        The format does not record per-input widths. For ``neutype2`` they
        are read off the stack shapes; for ``neutype1`` input C is assumed to
        be ``output_size`` wide and A/B share the rest, unless ``input_dims``
        is passed explicitly.
        """
        if data[:4] != CHECKPOINT_MAGIC:
            raise DataError("not a NeuType checkpoint (bad magic)")
        try:
            return cls._from_bytes(data, input_dims)
        except (struct.error, ValueError, ConfigError) as exc:
            raise DataError(f"corrupt checkpoint: {exc}") from exc

    @classmethod
    def _from_bytes(cls, data, input_dims):
        header = struct.Struct("<HBBIIQI")
        version, arch, bits, hidden, output, tax_hash, n_layers = \
            header.unpack_from(data, 4)
        if version != CHECKPOINT_VERSION:
            raise DataError(f"unsupported checkpoint version {version}")
        if arch not in (1, 2):
            raise DataError(f"unknown architecture id {arch}")
        pos = 4 + header.size
        mats = []
        for _ in range(n_layers):
            rows, cols = struct.unpack_from("<II", data, pos)
            pos += 8
            w = np.frombuffer(data, "<f4", rows * cols, pos).reshape(rows, cols)
            pos += 4 * rows * cols
            b = np.frombuffer(data, "<f4", cols, pos)
            pos += 4 * cols
            mats.append((w.astype(np.float64), b.astype(np.float64)))
        if pos != len(data):
            raise DataError("trailing bytes in checkpoint")

        mask = InputMask.parse(bits)
        architecture = ARCHITECTURES[arch - 1]
        if input_dims is None:
            if architecture == "neutype2":
                input_dims = tuple(mats[2 * i][0].shape[0]
                                   for i in range(len(mask.active)))
            else:
                total = mats[0][0].shape[0]
                rest = total - (output if mask.has_c else 0)
                n_emb = int(mask.has_a) + int(mask.has_b)
                if n_emb and rest % n_emb:
                    raise DataError("cannot infer input dims; pass input_dims")
                sizes = {"a": rest // max(n_emb, 1), "b": rest // max(n_emb, 1),
                         "c": output}
                input_dims = tuple(sizes[n] for n in mask.active)
        topo = NetworkTopology(architecture, mask, tuple(input_dims), hidden, output)
        layers = []
        for (name, fan_in, fan_out, act), (w, b) in zip(topo.layer_shapes, mats):
            if w.shape != (fan_in, fan_out):
                raise DataError(f"layer {name}: stored shape {w.shape} does not match "
                                f"topology ({fan_in}, {fan_out})")
            layers.append(Layer(name, w, b, act))
        if len(layers) != len(topo.layer_shapes):
            raise DataError("checkpoint layer count does not match its topology")
        return cls(layers, topo), tax_hash


def build_topology(architecture, mask, input_dims, hidden_size=512, output_size=2,
                   dropout=(), seed=0) -> tuple[NetworkTopology, ModelParams]:
    """Create a topology and Glorot-uniform initialized parameters.

    Biases start at zero. Initialization is a deterministic function of
    ``seed``.
    """
    topo = NetworkTopology(
        architecture=architecture,
        mask=InputMask.parse(mask),
        input_dims=tuple(int(d) for d in input_dims),
        hidden_size=int(hidden_size),
        output_size=int(output_size),
        dropout=tuple((str(pos), float(p)) for pos, p in dropout),
    )
    rng = np.random.default_rng(seed)
    layers = []
    for name, fan_in, fan_out, act in topo.layer_shapes:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(Layer(name, w, np.zeros(fan_out), act))
    return topo, ModelParams(layers, topo, seed)


# -- forward / backward ---------------------------------------------------------

def split_inputs(topology: NetworkTopology, X) -> list[np.ndarray]:
    """Normalize a batch into one 2-D float array per active input.

    ``X`` may be a list of :class:`FeatureBundle`, a list of per-input
    arrays, or a single matrix of concatenated inputs.
    """
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], FeatureBundle):
        for b in X:
            if b.mask != topology.mask:
                raise ConfigError(f"bundle for {b.entity} has mask {b.mask}, "
                                  f"model expects {topology.mask}")
        blocks = [np.stack([getattr(b, n) for b in X]) for n in topology.mask.active]
    elif isinstance(X, (list, tuple)):
        blocks = [np.asarray(x, dtype=np.float64) for x in X]
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != sum(topology.input_dims):
            raise ConfigError(f"expected a matrix with {sum(topology.input_dims)} "
                              f"columns, got shape {X.shape}")
        edges = np.cumsum(topology.input_dims)[:-1]
        blocks = np.split(X, edges, axis=1)
    if len(blocks) != len(topology.input_dims):
        raise ConfigError(f"expected {len(topology.input_dims)} input blocks, "
                          f"got {len(blocks)}")
    for name, block, dim in zip(topology.mask.active, blocks, topology.input_dims):
        if block.ndim != 2 or block.shape[1] != dim:
            raise ConfigError(f"input {name.upper()} has shape {block.shape}, "
                              f"expected (n, {dim})")
    return blocks


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ForwardCache:
    records: list = field(default_factory=list)   # per layer: (input, pre-activation)
    dropout_masks: dict = field(default_factory=dict)
    logits: np.ndarray | None = None


def forward(params: ModelParams, X, train_mode=False, rng=None):
    """Return ``(probabilities, cache)`` for a batch.

    Dropout is only active in ``train_mode`` and uses inverted scaling, so
    evaluation needs no rescaling.
    """
    topo = params.topology
    blocks = split_inputs(topo, X)
    rates = dict(topo.dropout) if train_mode else {}
    if rates and rng is None:
        rng = np.random.default_rng()
    cache = ForwardCache()
    layers = params.layers

    def dense(i, x):
        layer = layers[i]
        if x.shape[1] != layer.weights.shape[0]:
            raise ValueError(f"shape mismatch at layer {layer.name}: input has "
                             f"{x.shape[1]} columns, weights expect "
                             f"{layer.weights.shape[0]}")
        z = x @ layer.weights + layer.bias
        cache.records.append((x, z))
        return np.maximum(z, 0.0) if layer.activation == "relu" else z

    def drop(pos, h):
        p = rates.get(pos, 0.0)
        if p <= 0.0:
            return h
        keep = (rng.random(h.shape) >= p) / (1.0 - p)
        cache.dropout_masks[pos] = keep
        return h * keep

    i = 0
    if topo.architecture == "neutype2":
        outs = []
        for block in blocks:
            h = dense(i, block)
            outs.append(dense(i + 1, h))
            i += 2
        merged = np.concatenate(outs, axis=1)
    else:
        merged = np.concatenate(blocks, axis=1)
    h = drop("before_M1", merged)
    h = drop("between_M1_M2", dense(i, h))
    h = drop("after_M2", dense(i + 1, h))
    cache.logits = dense(i + 2, h)
    return softmax(cache.logits), cache


def _log_softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def loss_and_grad(params: ModelParams, X, y, train_mode=False, rng=None):
    """Mean categorical cross entropy and its gradient.

    Returns ``(loss, grads)`` where ``grads`` is a list of ``(dW, db)``
    aligned with ``params.layers``.
    """
    y = np.asarray(y, dtype=np.intp)
    probs, cache = forward(params, X, train_mode, rng)
    n = len(y)
    if y.min(initial=0) < 0 or y.max(initial=0) >= probs.shape[1]:
        raise ConfigError("labels out of range for the output layer")
    loss = float(-_log_softmax(cache.logits)[np.arange(n), y].mean())
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss} on a batch of {n} examples")

    layers = params.layers
    grads = [None] * len(layers)
    records = cache.records
    masks = cache.dropout_masks

    def back_dense(i, delta):
        x, z = records[i]
        if layers[i].activation == "relu":
            delta = delta * (z > 0)
        grads[i] = (x.T @ delta, delta.sum(axis=0))
        return delta @ layers[i].weights.T

    def back_drop(pos, g):
        return g * masks[pos] if pos in masks else g

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    out = len(layers) - 1
    g = back_drop("after_M2", back_dense(out, delta))
    g = back_drop("between_M1_M2", back_dense(out - 1, g))
    g = back_drop("before_M1", back_dense(out - 2, g))
    if params.topology.architecture == "neutype2":
        for k, part in enumerate(np.split(g, len(params.topology.input_dims), axis=1)):
            back_dense(2 * k, back_dense(2 * k + 1, part))
    return loss, grads


# -- optimization -----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "sgd"
    learning_rate: float = 0.1
    momentum: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 64
    max_epochs: int = 50
    patience: int = 5
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if not self.learning_rate >= 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("batch_size, max_epochs and patience must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must be in (0, 1)")


def optimizer_step(params: ModelParams, grads, state: dict, config: TrainConfig):
    """Apply one update in place and return ``(params, state)``.

    ``sgd``: θ ← θ − η·g. ``sgd_momentum``: v ← μv + g, θ ← θ − η·v.
    ``adam``: bias-corrected first and second moment estimates.
    """
    lr = config.learning_rate
    if config.optimizer == "sgd":
        for layer, (dw, db) in zip(params.layers, grads):
            layer.weights -= lr * dw
            layer.bias -= lr * db
    elif config.optimizer == "sgd_momentum":
        vel = state.setdefault("velocity", [(np.zeros_like(dw), np.zeros_like(db))
                                            for dw, db in grads])
        for k, (layer, (dw, db)) in enumerate(zip(params.layers, grads)):
            vw, vb = vel[k]
            vw *= config.momentum
            vw += dw
            vb *= config.momentum
            vb += db
            layer.weights -= lr * vw
            layer.bias -= lr * vb
    else:
        b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
        moments = state.setdefault(
            "moments", [[np.zeros_like(g) for g in pair for _ in range(2)]
                        for pair in grads])
        t = state["t"] = state.get("t", 0) + 1
        c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
        for layer, pair, mom in zip(params.layers, grads, moments):
            for j, (attr, g) in enumerate(zip(("weights", "bias"), pair)):
                m, v = mom[2 * j], mom[2 * j + 1]
                m *= b1
                m += (1.0 - b1) * g
                v *= b2
                v += (1.0 - b2) * g * g
                theta = getattr(layer, attr)
                theta -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    train_accuracy: float
    val_accuracy: float


@dataclass
class TrainingLog:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")

    @property
    def epochs_run(self) -> int:
        return len(self.epochs)

    def to_tsv(self) -> str:
        lines = ["epoch\ttrain_loss\tval_loss\ttrain_accuracy\tval_accuracy"]
        for r in self.epochs:
            lines.append(f"{r.epoch}\t{r.train_loss:.6f}\t{r.val_loss:.6f}\t"
                         f"{r.train_accuracy:.6f}\t{r.val_accuracy:.6f}")
        return "\n".join(lines) + "\n"


def _evaluate(params, blocks, y):
    probs, cache = forward(params, blocks)
    n = len(y)
    loss = float(-_log_softmax(cache.logits)[np.arange(n), y].mean())
    acc = float(np.mean(probs.argmax(axis=1) == y))
    return loss, acc


def train(X, y, topology: NetworkTopology, config: TrainConfig = TrainConfig(),
          params: ModelParams | None = None):
    """Mini-batch training with early stopping on validation loss.

    A seeded shuffle holds out ``validation_fraction`` of the examples.
    Training stops after ``max_epochs`` or once ``patience`` epochs pass
    without a strictly lower validation loss; the parameters of the best
    epoch are returned together with a :class:`TrainingLog`.
    """
    y = np.asarray(y, dtype=np.intp)
    blocks = split_inputs(topology, X)
    n = len(y)
    if n == 0 or any(len(b) != n for b in blocks):
        raise ConfigError("training data is empty or misaligned with labels")
    n_val = max(1, int(round(config.validation_fraction * n)))
    if n - n_val < 1:
        raise ConfigError(f"validation split leaves no training data (n={n})")

    init_seq, split_seq, drop_seq = np.random.SeedSequence(config.seed).spawn(3)
    if params is None:
        init_seed = int(init_seq.generate_state(1)[0])
        _, params = build_topology(topology.architecture, topology.mask,
                                   topology.input_dims, topology.hidden_size,
                                   topology.output_size, topology.dropout, init_seed)
        params.seed = config.seed
    rng = np.random.default_rng(split_seq)
    drop_rng = np.random.default_rng(drop_seq)

    perm = rng.permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    val_blocks = [b[val_idx] for b in blocks]
    tr_blocks = [b[train_idx] for b in blocks]
    y_val, y_tr = y[val_idx], y[train_idx]

    log = TrainingLog()
    best = params.copy()
    state: dict = {}
    for epoch in range(config.max_epochs):
        order = rng.permutation(len(y_tr))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = [b[idx] for b in tr_blocks]
            try:
                _, grads = loss_and_grad(params, batch, y_tr[idx], True, drop_rng)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}, batch at offset {start}: {exc}") from exc
            optimizer_step(params, grads, state, config)
        tr_loss, tr_acc = _evaluate(params, tr_blocks, y_tr)
        val_loss, val_acc = _evaluate(params, val_blocks, y_val)
        if not (np.isfinite(tr_loss) and np.isfinite(val_loss)):
            raise TrainingError(f"non-finite loss after epoch {epoch}")
        log.epochs.append(EpochRecord(epoch, tr_loss, val_loss, tr_acc, val_acc))
        logger.debug("epoch %d: train %.4f (acc %.3f) val %.4f (acc %.3f)",
                     epoch, tr_loss, tr_acc, val_loss, val_acc)
        if val_loss < log.best_val_loss:
            log.best_val_loss = val_loss
            log.best_epoch = epoch
            best = params.copy()
        elif epoch - log.best_epoch >= config.patience:
            break
    return best, log


def predict_type(params: ModelParams, bundle, classes=None):
    """Most probable type for one bundle as ``(type, probability)``.

    Exact ties go to the lowest index. Without ``classes`` the index itself
    is returned.
    """
    if isinstance(bundle, FeatureBundle) and bundle.mask != params.topology.mask:
        raise ConfigError(f"bundle mask {bundle.mask} does not match model mask "
                          f"{params.topology.mask}")
    X = [bundle] if isinstance(bundle, FeatureBundle) else bundle
    probs, _ = forward(params, X)
    k = int(np.argmax(probs[0]))
    label = k if classes is None else classes[k]
    return label, float(probs[0, k])


def save_checkpoint(params: ModelParams, path, taxonomy_hash: int = 0) -> None:
    Path(path).write_bytes(params.to_bytes(taxonomy_hash))


def load_checkpoint(path, input_dims=None) -> tuple[ModelParams, int]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    return ModelParams.from_bytes(data, input_dims)


# -- estimator ---------------------------------------------------------------------

class NeuTypeClassifier(ClassifierMixin, BaseEstimator):
    """Single-label entity type classifier.

    Parameters
    ----------
    architecture : {"neutype1", "neutype2"}
        Merge-then-hidden, or per-input stacks before the merge.
    inputs : str
        Active input components, e.g. ``"a"`` or ``"a+b+c"``.
    input_dims : tuple of int, optional
        Width of each active block of ``X``. Inferred when only one input
        is active.
    hidden_size : int
    dropout : sequence of (position, probability)
        Positions are ``before_M1``, ``between_M1_M2`` and ``after_M2``.
    optimizer, learning_rate, momentum, adam_beta1, adam_beta2, adam_epsilon
        See :class:`TrainConfig`. Defaults are SGD at 0.1.
    batch_size, max_epochs, patience, validation_fraction
        Training-loop controls.
    random_state : int
        Seed for initialization, the validation split, shuffling and dropout.
    classes : array-like, optional
        Full label universe (e.g. every taxonomy type), so the output layer
        covers types absent from ``y``.
    """

    def __init__(self, architecture="neutype1", inputs="a", input_dims=None,
                 hidden_size=512, dropout=(), optimizer="sgd", learning_rate=0.1,
                 momentum=0.9, adam_beta1=0.9, adam_beta2=0.999, adam_epsilon=1e-8,
                 batch_size=64, max_epochs=50, patience=5, validation_fraction=0.1,
                 random_state=0, classes=None):
        self.architecture = architecture
        self.inputs = inputs
        self.input_dims = input_dims
        self.hidden_size = hidden_size
        self.dropout = dropout
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_epsilon = adam_epsilon
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.random_state = random_state
        self.classes = classes

    def _train_config(self):
        return TrainConfig(
            optimizer=self.optimizer, learning_rate=self.learning_rate,
            momentum=self.momentum, adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2, adam_epsilon=self.adam_epsilon,
            batch_size=self.batch_size, max_epochs=self.max_epochs,
            patience=self.patience, validation_fraction=self.validation_fraction,
            seed=0 if self.random_state is None else int(self.random_state),
        )

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        if self.classes is not None:
            self.classes_ = np.asarray(self.classes)
            if not np.isin(y, self.classes_).all():
                raise ConfigError("y contains labels outside `classes`")
        else:
            self.classes_ = unique_labels(y)
        if len(self.classes_) < 2:
            raise ConfigError("need at least two classes")
        mask = InputMask.parse(self.inputs)
        dims = self.input_dims
        if dims is None:
            if len(mask.active) != 1:
                raise ConfigError("input_dims is required with more than one input")
            dims = (X.shape[1],)
        dims = tuple(int(d) for d in dims)
        if sum(dims) != X.shape[1]:
            raise ConfigError(f"input_dims {dims} sum to {sum(dims)} but X has "
                              f"{X.shape[1]} columns")
        topo = NetworkTopology(self.architecture, mask, dims, self.hidden_size,
                               len(self.classes_),
                               tuple((p, float(r)) for p, r in self.dropout))
        lookup = {c: i for i, c in enumerate(self.classes_.tolist())}
        y_idx = np.array([lookup[v] for v in y.tolist()], dtype=np.intp)
        self.params_, self.history_ = train(X, y_idx, topo, self._train_config())
        self.topology_ = topo
        self.best_epoch_ = self.history_.best_epoch
        self.n_epochs_ = self.history_.epochs_run
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        probs, _ = forward(self.params_, X)
        return probs

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def save(self, path, taxonomy_hash: int = 0) -> None:
        check_is_fitted(self, "params_")
        save_checkpoint(self.params_, path, taxonomy_hash)

    @classmethod
    def load(cls, path, classes, input_dims=None, expected_taxonomy_hash=None):
        """Rebuild a fitted classifier from a checkpoint.

        ``classes`` must be the label universe the checkpoint was trained
        with, in the same order.
        """
        params, tax_hash = load_checkpoint(path, input_dims)
        if expected_taxonomy_hash is not None and tax_hash != expected_taxonomy_hash:
            raise DataError(f"checkpoint {path} was trained against a different "
                            f"taxonomy (hash {tax_hash:016x})")
        topo = params.topology
        classes = np.asarray(classes)
        if len(classes) != topo.output_size:
            raise DataError(f"checkpoint has {topo.output_size} outputs but "
                            f"{len(classes)} classes were given")
        est = cls(architecture=topo.architecture, inputs="".join(topo.mask.active),
                  input_dims=topo.input_dims, hidden_size=topo.hidden_size,
                  classes=classes)
        est.params_ = params
        est.topology_ = topo
        est.classes_ = classes
        est.n_features_in_ = sum(topo.input_dims)
        return est
