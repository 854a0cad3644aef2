"""Self-contained 2-D imbalanced four-class experiment.

Four Gaussian clusters with heavily skewed counts, a two-layer MLP trained
with Adam, and online batch selection each epoch using the per-sample
gradients of the final layer as selection features.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractViolationError
from .linalg import DEFAULT_EPS, FeatureMatrix
from .metrics import DiversityReport, diversity_report
from .selectors import (
    PAD_UNIFORM,
    SelectionConfig,
    SelectionResult,
    select_divbs,
    select_greedy,
    select_kmeanspp,
    select_top_score,
    select_uniform,
)

DEFAULT_MEANS = ((0.0, 0.0), (5.0, 0.0), (0.0, 5.0), (5.0, 5.0))
DEFAULT_COUNTS = (1000, 300, 150, 20)

TOY_STRATEGIES = ("uniform", "top_loss", "greedy", "divbs", "kmeanspp")


@dataclass
class ToyDatasetSpec:
    means: tuple = DEFAULT_MEANS
    counts: tuple = DEFAULT_COUNTS
    seed: int = 0


def generate_toy_dataset(spec: ToyDatasetSpec) -> tuple[FeatureMatrix, np.ndarray]:
    """Seeded unit-variance Gaussian clusters; labels 0..3 by cluster."""
    rng = np.random.default_rng(spec.seed)
    points = []
    labels = []
    for cls, (mean, count) in enumerate(zip(spec.means, spec.counts)):
        points.append(rng.normal(loc=mean, scale=1.0, size=(count, 2)))
        labels.append(np.full(count, cls, dtype=np.int32))
    x = np.vstack(points)
    y = np.concatenate(labels)
    return FeatureMatrix(x, row_labels=y), y


@dataclass
class MlpState:
    """Two-layer ReLU MLP parameters plus Adam optimizer state."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    PARAMS = ("w1", "b1", "w2", "b2")

    def __post_init__(self):
        for name in self.PARAMS:
            p = getattr(self, name)
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
            if name not in self.v:
                self.v[name] = np.zeros_like(p)

    @property
    def n_hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[0]


def init_mlp(seed: int, n_in: int = 2, n_hidden: int = 100, n_classes: int = 4) -> MlpState:
    rng = np.random.default_rng(seed)
    w1 = rng.normal(scale=math.sqrt(2.0 / n_in), size=(n_hidden, n_in))
    w2 = rng.normal(scale=math.sqrt(2.0 / n_hidden), size=(n_classes, n_hidden))
    return MlpState(w1=w1, b1=np.zeros(n_hidden), w2=w2, b2=np.zeros(n_classes))


def forward(model: MlpState, inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ReLU hidden activations and softmax class probabilities, row per sample."""
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    hidden = np.maximum(x @ model.w1.T + model.b1, 0.0)
    logits = hidden @ model.w2.T + model.b2
    logits = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True)
    return hidden, probs


def per_sample_loss(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Cross-entropy of each sample against its integer label."""
    n = probs.shape[0]
    p = probs[np.arange(n), labels]
    return -np.log(np.maximum(p, 1e-300))


def last_layer_gradient_features(
    model: MlpState, inputs: np.ndarray, labels: np.ndarray
) -> FeatureMatrix:
    """Per-sample cross-entropy gradient w.r.t. the output layer.

    Row layout: the 4x100 weight gradient flattened row-major, then the
    4 bias gradients; equals (p - onehot(y)) outer hidden for the weight
    block and (p - onehot(y)) for the bias block.
    """
    hidden, probs = forward(model, inputs)
    n = probs.shape[0]
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    w_block = np.einsum("nc,nh->nch", delta, hidden).reshape(n, -1)
    feats = np.hstack([w_block, delta])
    return FeatureMatrix(feats, row_labels=np.asarray(labels, dtype=np.int32))


def loss_and_gradients(
    model: MlpState, inputs: np.ndarray, labels: np.ndarray
) -> tuple[float, dict]:
    """Mean cross-entropy and its gradient w.r.t. every parameter."""
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    pre = x @ model.w1.T + model.b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ model.w2.T + model.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    n = x.shape[0]
    loss = float(per_sample_loss(probs, labels).mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    grads = {
        "w2": dlogits.T @ hidden,
        "b2": dlogits.sum(axis=0),
    }
    dhidden = dlogits @ model.w2
    dpre = dhidden * (pre > 0.0)
    grads["w1"] = dpre.T @ x
    grads["b1"] = dpre.sum(axis=0)
    return loss, grads


def adam_step(model: MlpState, grads: dict) -> MlpState:
    """One bias-corrected Adam update; returns a new state."""
    t = model.step + 1
    new_params = {}
    new_m = {}
    new_v = {}
    for name in MlpState.PARAMS:
        g = grads[name]
        p = getattr(model, name)
        if g.shape != p.shape:
            raise ContractViolationError(f"gradient shape mismatch for {name}")
        m = model.beta1 * model.m[name] + (1.0 - model.beta1) * g
        v = model.beta2 * model.v[name] + (1.0 - model.beta2) * g * g
        m_hat = m / (1.0 - model.beta1**t)
        v_hat = v / (1.0 - model.beta2**t)
        new_params[name] = p - model.lr * m_hat / (np.sqrt(v_hat) + model.adam_eps)
        new_m[name] = m
        new_v[name] = v
    return replace(model, **new_params, m=new_m, v=new_v, step=t)


@dataclass
class ToyRunReport:
    strategy: str
    seed: int
    accuracy: list[float]
    final_indices: list[int]
    final_padded: list[bool]
    cluster_counts: list[int]
    diversity: DiversityReport
    # raw data for scatter output, not part of the JSON report
    points: np.ndarray
    labels: np.ndarray
    selected_mask: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "final_indices": self.final_indices,
            "final_padded": self.final_padded,
            "cluster_counts": self.cluster_counts,
            "diversity": self.diversity.to_json_dict(),
        }


def _select(strategy: str, feats: FeatureMatrix, losses, cfg: SelectionConfig) -> SelectionResult:
    if strategy == "uniform":
        return select_uniform(feats, cfg)
    if strategy == "top_loss":
        return select_top_score(feats, losses, cfg)
    if strategy == "greedy":
        return select_greedy(feats, cfg)
    if strategy == "divbs":
        return select_divbs(feats, cfg)
    if strategy == "kmeanspp":
        return select_kmeanspp(feats, cfg)
    raise ContractViolationError(f"unknown strategy {strategy!r}")


def run_toy_experiment(
    strategy: str,
    budget_ratio: float = 0.1,
    epochs: int = 100,
    seed: int = 0,
    dataset: ToyDatasetSpec | None = None,
    eps: float = DEFAULT_EPS,
    pad_policy: str = PAD_UNIFORM,
) -> ToyRunReport:
    """Train the toy MLP with per-epoch batch selection.

    Each epoch runs a forward pass over the whole dataset, selects
    floor(budget_ratio * N) samples with the given strategy, and takes one
    Adam step on the mean loss over the selected subset.
    """
    if strategy not in TOY_STRATEGIES:
        raise ContractViolationError(f"unknown strategy {strategy!r}")
    if not 0.0 < budget_ratio <= 1.0:
        raise ContractViolationError(f"budget_ratio must be in (0, 1], got {budget_ratio}")
    spec = dataset if dataset is not None else ToyDatasetSpec(seed=seed)
    data, labels = generate_toy_dataset(spec)
    x = data.values
    n = data.n_rows
    budget = max(1, int(budget_ratio * n))
    model = init_mlp(seed)
    accuracy: list[float] = []
    result: SelectionResult | None = None
    feats: FeatureMatrix | None = None
    for epoch in range(epochs):
        _, probs = forward(model, x)
        accuracy.append(float(np.mean(probs.argmax(axis=1) == labels)))
        feats = last_layer_gradient_features(model, x, labels)
        losses = per_sample_loss(probs, labels)
        cfg = SelectionConfig(
            budget=budget,
            eps=eps,
            pad_policy=pad_policy,
            seed=(seed * 1_000_003 + epoch) % 2**63,
        )
        result = _select(strategy, feats, losses, cfg)
        sel = result.indices
        _, grads = loss_and_gradients(model, x[sel], labels[sel])
        model = adam_step(model, grads)
    assert result is not None and feats is not None
    sel = result.indices
    counts = [int(np.sum(labels[sel] == c)) for c in range(len(spec.counts))]
    mask = np.zeros(n, dtype=bool)
    mask[sel] = True
    return ToyRunReport(
        strategy=strategy,
        seed=seed,
        accuracy=accuracy,
        final_indices=[int(i) for i in sel],
        final_padded=list(result.padded),
        cluster_counts=counts,
        diversity=diversity_report(feats, sel, ks=[1], eps=eps),
        points=x,
        labels=labels,
        selected_mask=mask,
    )
