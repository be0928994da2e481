"""Training loops: classification pretraining and the alternating fair loop.

The fair loop alternates two phases per epoch.  First the model parameters
take Adam steps against ``L_cls + eta * sum_j lambda_j R_j`` with the penalty
and its gradient computed on the current mini-batch (means re-estimated per
batch).  Then, with the model fixed, the feature weights are refreshed in
closed form: ``lambda = solve_lambda(eta * R, beta)`` with R measured on the
full training split, which is the exact minimizer of the lambda-part of the
objective.  Batch order and parameter init are fully determined by the seed.

Model selection: among epochs whose evaluation-split penalty is no worse than
110% of the final epoch's penalty, the checkpoint with the best evaluation
accuracy wins.  Reported metrics always come from the held-out test split.
"""

import dataclasses
import json

import numpy as np

from relfair.data import (
    RelatedFeatureSet,
    drop_features,
    encode,
    resolve_related,
    split,
)
from relfair.metrics import (
    MetricUndefinedError,
    SeedResult,
    accuracy,
    aggregate,
    delta_dp,
    delta_eo,
)
from relfair.models import ModelSpec, forward, init_params, loss_and_grad
from relfair.objective import ObjectiveConfig, penalty_grad_yhat, related_penalty, total_objective
from relfair.weights import solve_lambda

VARIANTS = (
    "vanilla",
    "fairrf",
    "constrain_s",
    "remove_related",
    "fixed_lambda",
    "constrain_all",
    "random_related",
    "top1",
    "noisy",
)

MIN_IMPROVEMENT = 1e-5  # outer-loop convergence threshold on eval objective
PRETRAIN_PATIENCE = 3
SELECTION_PENALTY_SLACK = 1.10


class TrainingDivergedError(RuntimeError):
    """Loss or parameters became non-finite during training."""


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    eta: float = 0.3
    beta: float = 0.5
    learning_rate: float = 0.001
    pretrain_epochs: int = 10
    max_epochs: int = 100
    batch_size: int = 256
    model_train_steps: object = None  # None -> one full pass per lambda refresh
    learn_lambda: bool = True
    seed: int = 0
    early_stop_patience: int = 5

    def __post_init__(self):
        if self.eta < 0 or self.beta <= 0:
            raise ValueError("need eta >= 0 and beta > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.pretrain_epochs < 0:
            raise ValueError("pretrain_epochs must be >= 0")
        for field in ("max_epochs", "batch_size", "early_stop_patience"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1")
        if self.model_train_steps is not None and self.model_train_steps < 1:
            raise ValueError("model_train_steps must be >= 1 when given")

    def objective_config(self):
        return ObjectiveConfig(eta=self.eta, beta=self.beta)


# ---------------------------------------------------------------------------
# trace

TRACE_FIELDS = (
    "epoch",
    "cls_loss",
    "penalty_total",
    "per_feature",
    "lam",
    "eval_accuracy",
    "eval_delta_eo",
    "eval_delta_dp",
    "eval_objective",
)


@dataclasses.dataclass(frozen=True)
class EpochRecord:
    epoch: int
    cls_loss: float
    penalty_total: float
    per_feature: tuple
    lam: tuple
    eval_accuracy: float
    eval_delta_eo: object  # None when the eval split has no usable groups
    eval_delta_dp: object
    eval_objective: float


@dataclasses.dataclass
class TrainTrace:
    records: list = dataclasses.field(default_factory=list)

    def append(self, record):
        lam = np.asarray(record.lam, dtype=float)
        if len(lam) and (np.any(lam < -1e-10) or abs(lam.sum() - 1.0) > 1e-8):
            raise TrainingDivergedError(
                f"epoch {record.epoch}: lambda left the simplex: {lam}"
            )
        self.records.append(record)

    def to_jsonl(self):
        lines = []
        for r in self.records:
            row = dataclasses.asdict(r)
            row["per_feature"] = list(row["per_feature"])
            row["lam"] = list(row["lam"])
            lines.append(json.dumps(row, sort_keys=True))
        return "\n".join(lines) + ("\n" if self.records else "")

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @property
    def final_lambda(self):
        return np.asarray(self.records[-1].lam) if self.records else None


# ---------------------------------------------------------------------------
# optimizer


class Adam:
    def __init__(self, arrays, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.lr * np.sqrt(1 - b2**self.t) / (1 - b1**self.t)
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            a -= scale * m / (np.sqrt(v) + self.eps)


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _check_finite(value, params, where):
    if not np.isfinite(value):
        raise TrainingDivergedError(f"non-finite loss at {where}")
    if not params.all_finite():
        raise TrainingDivergedError(f"non-finite parameters at {where}")


def _cls_loss(params, spec, X, y):
    loss, _ = loss_and_grad(params, spec, X, y)
    return loss


# ---------------------------------------------------------------------------
# pretraining


def pretrain(spec, params, train, evaluation, cfg):
    """Mini-batch Adam on the classification loss alone.

    Runs for cfg.pretrain_epochs or until the evaluation loss stops improving
    for PRETRAIN_PATIENCE consecutive epochs.  pretrain_epochs=0 is a no-op.
    """
    params = params.copy()
    if cfg.pretrain_epochs == 0:
        return params
    rng = np.random.default_rng([cfg.seed, 1])
    opt = Adam(params.arrays(), cfg.learning_rate)
    best_eval = np.inf
    stall = 0
    for epoch in range(cfg.pretrain_epochs):
        for idx in _batches(train.n, cfg.batch_size, rng):
            loss, grads = loss_and_grad(params, spec, train.X[idx], train.y[idx])
            _check_finite(loss, params, f"pretrain epoch {epoch}")
            opt.step(params.arrays(), grads.arrays())
        eval_loss = _cls_loss(params, spec, evaluation.X, evaluation.y)
        _check_finite(eval_loss, params, f"pretrain epoch {epoch} (eval)")
        if eval_loss < best_eval - MIN_IMPROVEMENT:
            best_eval = eval_loss
            stall = 0
        else:
            stall += 1
            if stall >= PRETRAIN_PATIENCE:
                break
    return params


# ---------------------------------------------------------------------------
# the alternating fair loop


def _eval_fairness(yhat, y, s):
    """Soft metrics for the trace; None when the split cannot support them."""
    if s is None:
        return None, None
    try:
        eo = delta_eo(yhat, y, s)
    except MetricUndefinedError:
        eo = None
    try:
        dp = delta_dp(yhat, s)
    except MetricUndefinedError:
        dp = None
    return eo, dp


def train_fairrf(spec, params, train, evaluation, related, cfg, *,
                 reg_train=None, reg_eval=None):
    """Alternate Adam steps on the penalized loss with closed-form lambda.

    ``related`` may be None only for penalty-free runs (eta must then be 0).
    ``reg_train``/``reg_eval`` override the matrices the penalty reads its
    regularized columns from; they default to the model inputs themselves.
    The sensitive-aware baseline passes the group column here so the penalty
    machinery is shared, while the model inputs stay untouched.
    """
    params = params.copy()
    if related is None and (cfg.eta != 0 or cfg.learn_lambda):
        raise ValueError(
            "a related feature set is required unless eta=0 and learn_lambda=false"
        )
    if reg_train is None:
        reg_train = train.X
    if reg_eval is None:
        reg_eval = evaluation.X
    if len(reg_train) != train.n or len(reg_eval) != evaluation.n:
        raise ValueError("regularized-column matrices must align with the splits")

    obj_cfg = cfg.objective_config()
    lam = related.lambda0.copy() if related is not None else np.zeros(0)
    rng = np.random.default_rng([cfg.seed, 2])
    opt = Adam(params.arrays(), cfg.learning_rate)
    trace = TrainTrace()
    history = []  # (eval_accuracy, eval_penalty, params snapshot)
    best_obj = np.inf
    stall = 0

    batch_stream = _batches(train.n, cfg.batch_size, rng)
    for epoch in range(cfg.max_epochs):
        # (a) theta phase
        steps = cfg.model_train_steps
        taken = 0
        while True:
            idx = next(batch_stream, None)
            if idx is None:
                batch_stream = _batches(train.n, cfg.batch_size, rng)
                if steps is None:
                    break  # one full pass per refresh
                continue
            Xb, yb = train.X[idx], train.y[idx]
            extra = None
            if related is not None and cfg.eta > 0:
                yhat_b = forward(params, spec, Xb)
                extra = cfg.eta * penalty_grad_yhat(
                    reg_train[idx], related, lam, yhat_b
                )
            loss, grads = loss_and_grad(params, spec, Xb, yb, extra_grad_on_yhat=extra)
            _check_finite(loss, params, f"epoch {epoch}")
            opt.step(params.arrays(), grads.arrays())
            taken += 1
            if steps is not None and taken >= steps:
                break

        # (b) lambda refresh: exact minimizer given the current model
        if related is not None:
            yhat_full = forward(params, spec, train.X)
            _, per_feature = related_penalty(reg_train, related, lam, yhat_full)
            if cfg.learn_lambda:
                lam = solve_lambda(cfg.eta * per_feature, cfg.beta).lam
        else:
            per_feature = np.zeros(0)

        # (c) bookkeeping on train and evaluation splits
        cls_loss = _cls_loss(params, spec, train.X, train.y)
        penalty_total = float(lam @ per_feature)
        yhat_eval = forward(params, spec, evaluation.X)
        eval_cls = _cls_loss(params, spec, evaluation.X, evaluation.y)
        if related is not None:
            eval_penalty, _ = related_penalty(reg_eval, related, lam, yhat_eval)
        else:
            eval_penalty = 0.0
        eval_obj = total_objective(eval_cls, eval_penalty, lam, obj_cfg)
        eval_acc = accuracy(yhat_eval, evaluation.y)
        eo, dp = _eval_fairness(yhat_eval, evaluation.y, getattr(evaluation, "s", None))
        trace.append(
            EpochRecord(
                epoch=epoch,
                cls_loss=float(cls_loss),
                penalty_total=penalty_total,
                per_feature=tuple(float(v) for v in per_feature),
                lam=tuple(float(v) for v in lam),
                eval_accuracy=eval_acc,
                eval_delta_eo=eo,
                eval_delta_dp=dp,
                eval_objective=eval_obj,
            )
        )
        history.append((eval_acc, eval_penalty, params.copy()))

        # (d) convergence on the evaluation objective
        if eval_obj < best_obj - MIN_IMPROVEMENT:
            best_obj = eval_obj
            stall = 0
        else:
            stall += 1
            if stall >= cfg.early_stop_patience:
                break

    # model selection: best eval accuracy among epochs whose penalty is
    # within slack of the final one (the final epoch always qualifies)
    final_penalty = history[-1][1]
    allowed = final_penalty * SELECTION_PENALTY_SLACK + 1e-12
    chosen = max(
        (h for h in history if h[1] <= allowed),
        key=lambda h: h[0],
    )
    return chosen[2], trace


# ---------------------------------------------------------------------------
# variants


@dataclasses.dataclass
class TrainResult:
    variant: str
    spec: ModelSpec
    params: object
    trace: TrainTrace
    encoded_train: object
    encoded_eval: object
    encoded_test: object
    related: object  # RelatedFeatureSet or None
    regularized: tuple  # names actually regularized (empty for penalty-free)

    def predictions(self, which="test"):
        enc = getattr(self, f"encoded_{which}")
        return forward(self.params, self.spec, enc.X)

    def test_metrics(self, seed):
        enc = self.encoded_test
        yhat = self.predictions("test")
        if enc.s is None:
            raise ValueError("test split carries no sensitive attribute")
        return SeedResult(
            seed=seed,
            accuracy=accuracy(yhat, enc.y),
            delta_eo=delta_eo(yhat, enc.y, enc.s),
            delta_dp=delta_dp(yhat, enc.s),
        )


def _input_names(schema):
    return [f.name for f in schema if f.role == "input"]


def _variant_related_names(variant, schema, related_names, rng):
    """Which feature names the variant regularizes (None = no penalty)."""
    inputs = _input_names(schema)
    if variant in ("vanilla", "remove_related"):
        return None
    if variant in ("fairrf", "fixed_lambda", "top1"):
        return list(related_names)
    if variant == "constrain_all":
        return inputs
    if variant == "random_related":
        k = min(len(related_names), len(inputs))
        return list(rng.choice(inputs, size=k, replace=False))
    if variant == "noisy":
        names = list(related_names)
        outside = [n for n in inputs if n not in names]
        if not outside:
            raise ValueError("noisy variant needs at least one non-related input")
        names[int(rng.integers(len(names)))] = str(rng.choice(outside))
        return names
    if variant == "constrain_s":
        return []  # the group column itself, handled specially
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def train_variant(
    variant,
    train_raw,
    eval_raw,
    test_raw,
    related_names,
    model_kind,
    cfg,
    *,
    hidden_dims=(),
    allow_sensitive_in_training=False,
):
    """Train one baseline/method variant on pre-split raw data."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    rng = np.random.default_rng([cfg.seed, 3])

    if variant == "remove_related":
        train_raw = drop_features(train_raw, related_names)
        eval_raw = drop_features(eval_raw, related_names)
        test_raw = drop_features(test_raw, related_names)

    enc_train, enc_eval, enc_test = encode(train_raw, [eval_raw, test_raw])
    spec = ModelSpec(
        kind=model_kind,
        input_dim=enc_train.n_columns,
        hidden_dims=tuple(hidden_dims),
        seed=cfg.seed,
    )
    params = init_params(spec)
    train_view = enc_train.train_view()

    names = _variant_related_names(variant, train_raw.schema, related_names, rng)

    penalty_free = names is None
    if penalty_free:
        fair_cfg = dataclasses.replace(cfg, eta=0.0, learn_lambda=False)
        params = pretrain(spec, params, train_view, enc_eval, fair_cfg)
        params, trace = train_fairrf(
            spec, params, train_view, enc_eval, None, fair_cfg
        )
        return TrainResult(
            variant, spec, params, trace,
            enc_train, enc_eval, enc_test, None, (),
        )

    if variant == "constrain_s":
        if not allow_sensitive_in_training:
            raise ValueError(
                "constrain_s trains against the sensitive attribute; pass "
                "allow_sensitive_in_training=True to opt in"
            )
        if enc_train.s is None or enc_eval.s is None:
            raise ValueError("constrain_s requires the sensitive attribute")
        related = RelatedFeatureSet(
            features=("__sensitive__",),
            column_groups=((0,),),
            lambda0=np.array([1.0]),
        )
        reg_train = enc_train.s.astype(float)[:, None]
        reg_eval = enc_eval.s.astype(float)[:, None]
        fair_cfg = dataclasses.replace(cfg, learn_lambda=False)
        params = pretrain(spec, params, train_view, enc_eval, fair_cfg)
        params, trace = train_fairrf(
            spec, params, train_view, enc_eval, related, fair_cfg,
            reg_train=reg_train, reg_eval=reg_eval,
        )
        return TrainResult(
            variant, spec, params, trace,
            enc_train, enc_eval, enc_test, related, ("__sensitive__",),
        )

    if variant == "top1":
        if enc_eval.s is None:
            raise ValueError("top1 selects by evaluation fairness and needs "
                             "the sensitive attribute on the eval split")
        best = None
        for name in names:
            candidate = train_variant(
                "fairrf", train_raw, eval_raw, test_raw, [name],
                model_kind, cfg, hidden_dims=hidden_dims,
            )
            yhat_eval = candidate.predictions("eval")
            dp = delta_dp(yhat_eval, enc_eval.s)
            if best is None or dp < best[0]:
                best = (dp, candidate)
        result = best[1]
        return dataclasses.replace(result, variant="top1")

    learn = cfg.learn_lambda and variant != "fixed_lambda"
    fair_cfg = dataclasses.replace(cfg, learn_lambda=learn)
    related = resolve_related(train_raw.schema, enc_train, names)
    params = pretrain(spec, params, train_view, enc_eval, fair_cfg)
    params, trace = train_fairrf(
        spec, params, train_view, enc_eval, related, fair_cfg
    )
    return TrainResult(
        variant, spec, params, trace,
        enc_train, enc_eval, enc_test, related, tuple(names),
    )


# ---------------------------------------------------------------------------
# seeded experiment runs


def run_single(
    raw,
    related_names,
    variant,
    model_kind,
    cfg,
    seed,
    *,
    hidden_dims=(),
    allow_sensitive_in_training=False,
):
    """One seed: re-split, train the variant, measure the test split."""
    run_cfg = dataclasses.replace(cfg, seed=seed)
    train_raw, eval_raw, test_raw = split(raw, seed=seed)
    result = train_variant(
        variant, train_raw, eval_raw, test_raw, related_names,
        model_kind, run_cfg, hidden_dims=hidden_dims,
        allow_sensitive_in_training=allow_sensitive_in_training,
    )
    metrics = result.test_metrics(seed)
    return result, metrics


def run_seeds(raw, related_names, variant, model_kind, cfg, seeds, **kwargs):
    """Independent runs over seeds; returns (FairnessReport, per-seed results)."""
    results, metrics = [], []
    for seed in seeds:
        result, m = run_single(
            raw, related_names, variant, model_kind, cfg, seed, **kwargs
        )
        results.append(result)
        metrics.append(m)
    return aggregate(metrics), results
