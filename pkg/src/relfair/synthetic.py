"""Synthetic tabular data with a hidden group driving label bias.

A binary group s (kept only for evaluation) pushes the label through the
logit and leaks into two observed proxy columns.  A clean signal column
carries the legitimate part of the label, and a pure-noise column rounds out
the inputs.  Optionally a label-echo column is added: strongly tied to the
outcome but tied to the group only through it — useful for checking that
learned feature weights prefer group proxies over outcome carriers.
"""

import csv
import dataclasses

import numpy as np
from scipy.special import expit

from relfair.data import Dataset, FeatureSchema


@dataclasses.dataclass(frozen=True)
class SyntheticSpec:
    n: int = 4000
    label_signal: float = 1.5  # weight of the clean column in the label logit
    bias_signal: float = 0.8  # weight of the group in the label logit
    proxy_noise: float = 0.6  # noise std on the two group proxies
    label_echo: bool = False  # add the outcome-echo column
    echo_strength: float = 1.0
    echo_noise: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("need at least 10 rows")
        if self.proxy_noise <= 0 or self.echo_noise <= 0:
            raise ValueError("noise scales must be positive")


def schema(spec):
    names = ["signal", "noise", "proxy_a", "proxy_b"]
    if spec.label_echo:
        names.append("echo")
    features = [FeatureSchema(n, "continuous") for n in names]
    features.append(FeatureSchema("outcome", "categorical", role="label"))
    features.append(FeatureSchema("group", "categorical", role="sensitive"))
    return tuple(features)


def related_features(spec):
    """The columns a fairness-aware run should regularize."""
    return ["proxy_a", "proxy_b"] + (["echo"] if spec.label_echo else [])


def generate(spec):
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    s = rng.integers(0, 2, size=n)
    sgn = 2.0 * s - 1.0
    signal = rng.normal(size=n)
    noise = rng.normal(size=n)
    proxy_a = sgn + rng.normal(scale=spec.proxy_noise, size=n)
    proxy_b = -0.9 * sgn + rng.normal(scale=spec.proxy_noise, size=n)
    logit = spec.label_signal * signal + spec.bias_signal * sgn
    y = (rng.uniform(size=n) < expit(logit)).astype(int)

    columns = [signal, noise, proxy_a, proxy_b]
    if spec.label_echo:
        echo = spec.echo_strength * (2.0 * y - 1.0) + rng.normal(
            scale=spec.echo_noise, size=n
        )
        columns.append(echo)

    rows = tuple(
        tuple(float(col[i]) for col in columns) + (int(y[i]), int(s[i]))
        for i in range(n)
    )
    return Dataset(rows=rows, schema=schema(spec))


def write_csv(dataset, path):
    """Dump a Dataset back to headered CSV (binary columns become 0/1).

    The file round-trips through load_csv with label/sensitive positive
    value "1".
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f.name for f in dataset.schema])
        for row in dataset.rows:
            writer.writerow(
                [v if isinstance(v, str) else repr(v) for v in row]
            )
