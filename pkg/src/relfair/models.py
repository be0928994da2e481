"""Gradient-trainable base classifiers: logistic regression, linear SVM, MLP.

Backpropagation is hand-derived for these three fixed architectures (no
autodiff). Every classifier exposes a probability-like score in (0, 1): the
sigmoid of the logit for LR/MLP and the sigmoid of the raw margin for the
SVM, so the correlation regularizer and the fairness metrics share one code
path. ``loss_and_grad`` accepts an extra upstream gradient on that score,
which is how the regularizer injects its pull without the model code knowing
about fairness at all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

PROB_EPS = 1e-7  # clamp for probabilities before logs

_KINDS = ("lr", "svm", "mlp")
_CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    input_dim: int
    hidden_dims: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if self.kind == "mlp" and not self.hidden_dims:
            object.__setattr__(self, "hidden_dims", (64, 32))
        if self.kind != "mlp" and self.hidden_dims:
            raise ValueError(f"hidden_dims only apply to mlp, got {self.hidden_dims}")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, 1]
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]


@dataclass
class ModelParams:
    """Per-layer weights and biases; the last layer maps to a single output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def init_params(spec: ModelSpec) -> ModelParams:
    """Deterministic init: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero."""
    rng = np.random.default_rng(spec.seed)
    weights, biases = [], []
    for fan_in, fan_out in spec.layer_dims:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights=weights, biases=biases)


def _check_input(spec: ModelSpec, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise ValueError(
            f"X must be (n, {spec.input_dim}), got {X.shape}"
        )
    return X


def _forward_cache(params: ModelParams, spec: ModelSpec, X: np.ndarray):
    """Returns (raw output scores, list of post-activation layer inputs)."""
    acts = [X]
    h = X
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        if i < last:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            raw = z[:, 0]
    return raw, acts


def raw_scores(params: ModelParams, spec: ModelSpec, X) -> np.ndarray:
    """Pre-sigmoid output: the logit for LR/MLP, the margin for the SVM."""
    X = _check_input(spec, X)
    raw, _ = _forward_cache(params, spec, X)
    return raw


def forward(params: ModelParams, spec: ModelSpec, X) -> np.ndarray:
    """Probability-like score in (0, 1) for every row of X."""
    return expit(raw_scores(params, spec, X))


def loss_and_grad(
    params: ModelParams,
    spec: ModelSpec,
    X,
    y,
    extra_grad_on_yhat=None,
) -> tuple[float, ModelParams]:
    """Classification loss and its parameter gradient.

    The upstream gradient at the probability output is
    d(loss)/d(yhat) + extra_grad_on_yhat, so a caller can fold any
    differentiable function of yhat into the backward pass. The returned
    loss is the classification term only (sum over rows): binary cross
    entropy for LR/MLP, hinge on the margins for the SVM.
    """
    X = _check_input(spec, X)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise ValueError(f"y must be ({X.shape[0]},), got {y.shape}")
    extra = (
        np.zeros(X.shape[0])
        if extra_grad_on_yhat is None
        else np.asarray(extra_grad_on_yhat, dtype=float)
    )
    if extra.shape != (X.shape[0],):
        raise ValueError("extra_grad_on_yhat must have one entry per row")

    raw, acts = _forward_cache(params, spec, X)
    yhat = expit(raw)

    if spec.kind == "svm":
        t = 2.0 * y - 1.0
        margin_loss = np.maximum(0.0, 1.0 - t * raw)
        loss = float(margin_loss.sum())
        d_raw = -t * (margin_loss > 0.0)
        d_raw = d_raw + extra * yhat * (1.0 - yhat)
    else:
        yc = np.clip(yhat, PROB_EPS, 1.0 - PROB_EPS)
        loss = float(-(y * np.log(yc) + (1.0 - y) * np.log(1.0 - yc)).sum())
        d_yhat = (yc - y) / (yc * (1.0 - yc)) + extra
        d_raw = d_yhat * yhat * (1.0 - yhat)

    grads_w = [np.empty(0)] * len(params.weights)
    grads_b = [np.empty(0)] * len(params.biases)
    delta = d_raw[:, None]
    for i in range(len(params.weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * (acts[i] > 0.0)
    return loss, ModelParams(weights=grads_w, biases=grads_b)


def save_checkpoint(path, params: ModelParams, spec: ModelSpec) -> None:
    """Write spec + parameters as a versioned .npz (layout documented in README)."""
    meta = {
        "format_version": _CHECKPOINT_VERSION,
        "kind": spec.kind,
        "input_dim": spec.input_dim,
        "hidden_dims": list(spec.hidden_dims),
        "seed": spec.seed,
        "n_layers": len(params.weights),
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    np.savez(path, **arrays)


def load_checkpoint(path) -> tuple[ModelParams, ModelSpec]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("format_version") != _CHECKPOINT_VERSION:
            raise ValueError(
                f"unsupported checkpoint version {meta.get('format_version')}"
            )
        spec = ModelSpec(
            kind=meta["kind"],
            input_dim=meta["input_dim"],
            hidden_dims=tuple(meta["hidden_dims"]),
            seed=meta["seed"],
        )
        weights = [data[f"w{i}"] for i in range(meta["n_layers"])]
        biases = [data[f"b{i}"] for i in range(meta["n_layers"])]
    return ModelParams(weights=weights, biases=biases), spec
