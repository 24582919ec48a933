"""Dense feedforward network mapping six intensities to gate parameters.

Architecture 6 -> 128 -> 128 -> 64 -> 64 -> 64 -> 64 -> 32 -> 16 -> 3 with
ReLU hidden activations and a sigmoid output. The three outputs encode
(theta, nx, ny) affinely into (0, 1); nz is completed from normalization,
which is why training gates are restricted to the nz > 0 hemisphere; the
gauge pair of any gate lands on the opposite hemisphere, so the restriction
removes the sign ambiguity from the labels.

Everything is plain numpy: forward, backpropagation, Adam moment updates,
multiplicative Gaussian dropout, and a reduce-on-plateau learning-rate
schedule. Training data is generated at run time from the closed-form
intensities, so there is no dataset to store and effectively no reuse of
samples across batches.
"""

import json
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from . import su2
from .errors import (
    CorruptModelError,
    MalformedModelError,
    ModelVersionError,
    TrainingFailureError,
)
from .polarimetry import MeasurementSet, six_intensities_from_quats

MODEL_FORMAT_VERSION = 1
_MAGIC = b"SU2MLP\x00"

FULL_WIDTHS = (6, 128, 128, 64, 64, 64, 64, 32, 16, 3)


@dataclass(frozen=True)
class OutputCodec:
    """Affine maps between sigmoid outputs (0,1)^3 and (theta, nx, ny).

    theta = pi * s1, nx = 2 s2 - 1, ny = 2 s3 - 1; decoding projects
    (nx, ny) radially onto the unit disk if needed and completes
    nz = +sqrt(1 - nx^2 - ny^2).
    """

    def encode(self, theta, axis):
        theta = np.asarray(theta, dtype=float)
        axis = np.asarray(axis, dtype=float)
        out = np.empty(theta.shape + (3,))
        out[..., 0] = theta / np.pi
        out[..., 1] = (axis[..., 0] + 1.0) / 2.0
        out[..., 2] = (axis[..., 1] + 1.0) / 2.0
        return out

    def decode(self, s):
        s = np.asarray(s, dtype=float)
        theta = np.pi * s[..., 0]
        nx = 2.0 * s[..., 1] - 1.0
        ny = 2.0 * s[..., 2] - 1.0
        r = np.hypot(nx, ny)
        scale = np.where(r > 1.0, 1.0 / np.where(r > 1.0, r, 1.0), 1.0)
        nx = nx * scale
        ny = ny * scale
        nz = np.sqrt(np.maximum(1.0 - nx**2 - ny**2, 0.0))
        axis = np.stack([nx, ny, nz], axis=-1)
        axis /= np.linalg.norm(axis, axis=-1, keepdims=True)
        return theta, axis


DEFAULT_CODEC = OutputCodec()


@dataclass
class MlpModel:
    """Weights, biases and activation tags of the dense network."""

    weights: list
    biases: list
    activations: tuple
    version: int = MODEL_FORMAT_VERSION
    meta: dict = field(default_factory=dict)

    @property
    def widths(self):
        return tuple([self.weights[0].shape[0]]
                     + [w.shape[1] for w in self.weights])

    def validate(self):
        if len(self.weights) != len(self.biases) or len(self.weights) != len(
            self.activations
        ):
            raise MalformedModelError("layer list lengths disagree")
        prev = self.weights[0].shape[0]
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.ndim != 1:
                raise MalformedModelError("weights must be 2-d, biases 1-d")
            if w.shape[0] != prev or b.shape[0] != w.shape[1]:
                raise MalformedModelError(
                    f"inconsistent layer shapes {w.shape} / {b.shape}"
                )
            prev = w.shape[1]
        for act in self.activations:
            if act not in ("relu", "sigmoid"):
                raise MalformedModelError(f"unknown activation {act!r}")
        return self


@dataclass
class TrainConfig:
    """Schedule and optimizer settings for supervised training."""

    epochs: int = 50
    batch_size: int = 256
    train_batches: int = 2**12
    val_batches: int = 2**10
    learning_rate: float = 1e-3
    plateau_patience: int = 5
    plateau_factor: float = 0.1
    dropout_rate: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int | None = None
    desk_scale: bool = False

    def __post_init__(self):
        for name in ("epochs", "batch_size", "train_batches", "val_batches"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    @classmethod
    def desk(cls, seed=None):
        """Reduced schedule for quick runs: 10 epochs of 2^10 batches."""
        return cls(
            epochs=10,
            train_batches=2**10,
            val_batches=2**8,
            seed=seed,
            desk_scale=True,
        )


def init_model(rng, widths=FULL_WIDTHS):
    """Fan-in-scaled uniform initialization, biases at zero."""
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    activations = ("relu",) * (len(widths) - 2) + ("sigmoid",)
    return MlpModel(weights, biases, activations).validate()


def dropout_std(rate):
    """Std of the multiplicative unit-mean Gaussian dropout noise."""
    return np.sqrt(rate / (1.0 - rate)) if rate > 0 else 0.0


def forward_batch(model, X):
    """Inference pass (dropout off): (N, 6) intensities -> (N, 3) sigmoids."""
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != model.weights[0].shape[0]:
        raise MalformedModelError(
            f"input width {X.shape[-1]} does not match model "
            f"width {model.weights[0].shape[0]}"
        )
    h = X
    for w, b, act in zip(model.weights, model.biases, model.activations):
        h = h @ w + b
        if act == "relu":
            np.maximum(h, 0.0, out=h)
        else:
            h = 1.0 / (1.0 + np.exp(-h))
    return h


def forward(model, m, codec=DEFAULT_CODEC):
    """Reconstruct one measurement set; canonical by construction (nz >= 0)."""
    if isinstance(m, MeasurementSet):
        x = m.as_array()
    else:
        x = np.asarray(m, dtype=float).reshape(-1)
    if x.shape[0] != model.weights[0].shape[0]:
        raise MalformedModelError(
            f"input width {x.shape[0]} does not match model "
            f"width {model.weights[0].shape[0]}"
        )
    for w, b, act in zip(model.weights, model.biases, model.activations):
        x = x @ w + b
        if act == "relu":
            np.maximum(x, 0.0, out=x)
        else:
            x = 1.0 / (1.0 + np.exp(-x))
    theta, axis = codec.decode(x)
    return su2.GateParams(float(theta), axis)


def generate_training_batch(size, rng, codec=DEFAULT_CODEC):
    """Runtime-generated supervised pairs from hemisphere-restricted gates.

    Gates are Haar-uniform conditioned on nz > 0 (the canonical gauge
    representative of an unconditioned Haar draw). Inputs are the exact six
    intensities; labels are the codec-encoded (theta, nx, ny).
    """
    quats = su2.sample_haar_quats(rng, size)
    theta, axis = su2.quats_to_theta_axis(quats)
    return six_intensities_from_quats(quats), codec.encode(theta, axis)


def loss_and_grads(model, X, Y, noise_std=0.0, rng=None):
    """MSE loss and backpropagated gradients for one batch.

    With noise_std > 0 every hidden activation is multiplied by unit-mean
    Gaussian noise (training-time dropout); the same factors scale the
    gradients on the way back.
    """
    n_layers = len(model.weights)
    h = np.asarray(X, dtype=float)
    inputs, post_relu, noises = [], [], []
    for i, (w, b, act) in enumerate(
        zip(model.weights, model.biases, model.activations)
    ):
        inputs.append(h)
        z = h @ w + b
        if act == "relu":
            h = np.maximum(z, 0.0)
            post_relu.append(h)
            if noise_std > 0.0:
                g = rng.normal(1.0, noise_std, size=h.shape)
                noises.append(g)
                h = h * g
            else:
                noises.append(None)
        else:
            h = 1.0 / (1.0 + np.exp(-z))
            post_relu.append(h)
            noises.append(None)

    out = h
    diff = out - Y
    loss = float(np.mean(diff**2))
    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    # d loss / d out, with the mean over all batch entries and outputs
    delta = 2.0 * diff / diff.size
    for i in reversed(range(n_layers)):
        act = model.activations[i]
        if act == "sigmoid":
            s = post_relu[i]
            dz = delta * s * (1.0 - s)
        else:
            if noises[i] is not None:
                delta = delta * noises[i]
            dz = delta * (post_relu[i] > 0.0)
        grad_w[i] = inputs[i].T @ dz
        grad_b[i] = dz.sum(axis=0)
        if i > 0:
            delta = dz @ model.weights[i].T
    return loss, grad_w, grad_b


def evaluate_mse(model, X, Y, batch_size=4096):
    """Validation MSE with dropout off, streamed in batches."""
    total = 0.0
    n = X.shape[0]
    for lo in range(0, n, batch_size):
        pred = forward_batch(model, X[lo : lo + batch_size])
        total += float(np.sum((pred - Y[lo : lo + batch_size]) ** 2))
    return total / (n * Y.shape[1])


def train(cfg=None, rng=None, widths=FULL_WIDTHS, progress=None):
    """Supervised training run; returns (model, per-epoch log rows).

    Each log row is a dict with epoch, train_mse, val_mse and learning_rate.
    The learning rate is multiplied by plateau_factor whenever the
    validation MSE has not improved for plateau_patience epochs. A
    non-finite loss aborts with TrainingFailureError carrying the log.
    """
    if cfg is None:
        cfg = TrainConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    model = init_model(rng, widths)
    model.meta = {
        "seed": cfg.seed,
        "train_config": {
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "train_batches": cfg.train_batches,
            "val_batches": cfg.val_batches,
            "learning_rate": cfg.learning_rate,
            "plateau_patience": cfg.plateau_patience,
            "plateau_factor": cfg.plateau_factor,
            "dropout_rate": cfg.dropout_rate,
            "adam": [cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps],
            "desk_scale": cfg.desk_scale,
        },
    }
    std = dropout_std(cfg.dropout_rate)

    X_val, Y_val = generate_training_batch(
        cfg.val_batches * cfg.batch_size, rng
    )

    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]
    lr = cfg.learning_rate
    best_val = np.inf
    wait = 0
    step = 0
    log = []

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        train_acc = 0.0
        for _ in range(cfg.train_batches):
            X, Y = generate_training_batch(cfg.batch_size, rng)
            loss, grad_w, grad_b = loss_and_grads(model, X, Y, std, rng)
            if not np.isfinite(loss):
                raise TrainingFailureError(
                    f"non-finite loss at epoch {epoch}", log=log
                )
            train_acc += loss
            step += 1
            b1c = 1.0 - cfg.adam_beta1**step
            b2c = 1.0 - cfg.adam_beta2**step
            for i in range(len(model.weights)):
                for g, mm, vv, p in (
                    (grad_w[i], m_w[i], v_w[i], model.weights[i]),
                    (grad_b[i], m_b[i], v_b[i], model.biases[i]),
                ):
                    mm *= cfg.adam_beta1
                    mm += (1.0 - cfg.adam_beta1) * g
                    vv *= cfg.adam_beta2
                    vv += (1.0 - cfg.adam_beta2) * g * g
                    p -= lr * (mm / b1c) / (np.sqrt(vv / b2c) + cfg.adam_eps)
        val_mse = evaluate_mse(model, X_val, Y_val)
        if not np.isfinite(val_mse):
            raise TrainingFailureError(
                f"non-finite validation loss at epoch {epoch}", log=log
            )
        row = {
            "epoch": epoch,
            "train_mse": train_acc / cfg.train_batches,
            "val_mse": val_mse,
            "learning_rate": lr,
        }
        log.append(row)
        if progress is not None:
            progress(dict(row, seconds=time.perf_counter() - t0))
        if val_mse < best_val:
            best_val = val_mse
            wait = 0
        else:
            wait += 1
            if wait >= cfg.plateau_patience:
                lr *= cfg.plateau_factor
                wait = 0
    return model, log


def save_model(model, path):
    """Versioned binary container: header JSON then little-endian float64."""
    model.validate()
    header = json.dumps(
        {
            "widths": list(model.widths),
            "activations": list(model.activations),
            "codec": {"theta": [0.0, np.pi], "nx": [-1.0, 1.0],
                      "ny": [-1.0, 1.0]},
            "meta": model.meta,
        }
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", model.version))
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_model(path):
    """Inverse of save_model; validates version, layout and completeness."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 12 or not blob.startswith(_MAGIC):
        raise CorruptModelError(f"{path} is not a model file")
    off = len(_MAGIC)
    (version,) = struct.unpack_from("<I", blob, off)
    off += 4
    if version != MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported model format version {version}"
        )
    (hlen,) = struct.unpack_from("<Q", blob, off)
    off += 8
    if off + hlen > len(blob):
        raise CorruptModelError("truncated model header")
    try:
        header = json.loads(blob[off : off + hlen].decode())
        widths = [int(w) for w in header["widths"]]
        activations = tuple(header["activations"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptModelError(f"unreadable model header: {exc}") from None
    off += hlen
    if len(widths) < 2 or len(activations) != len(widths) - 1:
        raise MalformedModelError("header widths/activations inconsistent")
    expected = sum(
        8 * (i * o + o) for i, o in zip(widths[:-1], widths[1:])
    )
    if len(blob) - off != expected:
        raise CorruptModelError(
            f"model payload has {len(blob) - off} bytes, expected {expected}"
        )
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        n = fan_in * fan_out
        w = np.frombuffer(blob, dtype="<f8", count=n, offset=off)
        off += 8 * n
        b = np.frombuffer(blob, dtype="<f8", count=fan_out, offset=off)
        off += 8 * fan_out
        weights.append(w.reshape(fan_in, fan_out).astype(float))
        biases.append(b.astype(float))
    model = MlpModel(
        weights, biases, activations, version=version,
        meta=header.get("meta", {}),
    )
    return model.validate()


def save_training_log(log, path):
    """Per-epoch CSV: epoch, train_mse, val_mse, learning_rate."""
    with open(path, "w") as fh:
        fh.write("epoch,train_mse,val_mse,learning_rate\n")
        for row in log:
            fh.write(
                f"{row['epoch']},{row['train_mse']:.10g},"
                f"{row['val_mse']:.10g},{row['learning_rate']:.10g}\n"
            )
