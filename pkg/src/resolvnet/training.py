"""Training loop with early stopping, plus losses, metrics, and task containers.

The loop is deterministic given the seed: initialization, dropout masks and
update order are all driven by one generator, and graph batches are visited
in a fixed order with summed gradient reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import WeightedGraph
from .model import ResolvNetModel


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 10000
    patience: int = 100
    weight_decay: float = 0.0
    dropout_p: float = 0.0
    seed: int = 0
    optimizer: str = "sgd"

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout probability must lie in [0, 1)")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate, "max_epochs": self.max_epochs,
                "patience": self.patience, "weight_decay": self.weight_decay,
                "dropout_p": self.dropout_p, "seed": self.seed,
                "optimizer": self.optimizer}

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        return TrainConfig(**{k: d[k] for k in TrainConfig().to_dict() if k in d})


@dataclass
class NodeClassificationTask:
    graph: WeightedGraph
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray

    def __post_init__(self):
        for name in ("train_mask", "val_mask"):
            if not np.any(getattr(self, name)):
                raise ValueError(f"empty split: {name}")


@dataclass
class GraphRegressionTask:
    graphs: list[WeightedGraph]
    features: list[np.ndarray]
    targets: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        for name in ("train_idx", "val_idx"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"empty split: {name}")


@dataclass
class TrainResult:
    model: object
    history: list[tuple[int, float, float]]
    best_epoch: int
    best_val: float
    test_metric: float | None = None
    extras: dict = field(default_factory=dict)


def cross_entropy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray
                  ) -> tuple[float, np.ndarray]:
    """Masked mean cross-entropy and its gradient w.r.t. the logits."""
    idx = np.nonzero(mask)[0]
    sub = logits[idx]
    shifted = sub - sub.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -float(np.mean(log_probs[np.arange(idx.size), labels[idx]]))
    grad = np.zeros_like(logits)
    probs = np.exp(log_probs)
    probs[np.arange(idx.size), labels[idx]] -= 1.0
    grad[idx] = probs / idx.size
    return loss, grad


def accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    idx = np.nonzero(mask)[0]
    return float(np.mean(logits[idx].argmax(axis=1) == labels[idx]))


def _dropout_masks(model, n: int, p: float, rng: np.random.Generator):
    if p == 0.0:
        return None
    return [(rng.random((n, layer.f_in)) >= p) / (1.0 - p) for layer in model.layers]


class _Optimizer:
    """SGD or Adam over the model's named parameters; bias-style parameters
    (beta, head_b) are exempt from weight decay."""

    def __init__(self, model, config: TrainConfig):
        self.model = model
        self.cfg = config
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    @staticmethod
    def _decays(name: str) -> bool:
        return not (name.endswith("beta") or name.endswith("_b"))

    def step(self, grads: dict) -> None:
        self.t += 1
        lr, wd = self.cfg.learning_rate, self.cfg.weight_decay
        for name, value in self.model.parameters():
            g = grads.get(name)
            if g is None:
                continue
            if wd and self._decays(name):
                g = g + wd * value
            if self.cfg.optimizer == "sgd":
                self.model.set_param(name, value - lr * g)
            else:
                b1, b2, eps = 0.9, 0.999, 1e-8
                m = self.m.get(name, np.zeros_like(value))
                v = self.v.get(name, np.zeros_like(value))
                m = b1 * m + (1 - b1) * g
                v = b2 * v + (1 - b2) * g * g
                self.m[name], self.v[name] = m, v
                mh = m / (1 - b1 ** self.t)
                vh = v / (1 - b2 ** self.t)
                self.model.set_param(name, value - lr * mh / (np.sqrt(vh) + eps))


def _node_epoch(model, op, task, drop_masks):
    caches: list[dict] = []
    feats = model.feature_map(op, task.features, caches=caches, drop_masks=drop_masks)
    head_cache: dict = {}
    logits = model.head_forward(feats, task.graph.mu, cache=head_cache)
    loss, grad_logits = cross_entropy(logits, task.labels, task.train_mask)
    grad_feats, grads = model.head_backward(head_cache, grad_logits, task.graph.mu)
    grads.update(model.backward_layers(op, caches, grad_feats, drop_masks=drop_masks))
    return loss, grads


def _graph_epoch(model, ops, task, p, rng):
    n_train = len(task.train_idx)
    total: dict[str, np.ndarray] = {}
    loss = 0.0
    for gi in task.train_idx:
        graph, X = task.graphs[gi], task.features[gi]
        drop_masks = _dropout_masks(model, graph.n, p, rng)
        caches: list[dict] = []
        feats = model.feature_map(ops[gi], X, caches=caches, drop_masks=drop_masks)
        head_cache: dict = {}
        pred = model.head_forward(feats, graph.mu, cache=head_cache)
        residual = float(pred.reshape(-1)[0] - task.targets[gi])
        loss += abs(residual) / n_train
        grad_pred = np.array([[np.sign(residual) / n_train]])
        grad_feats, grads = model.head_backward(head_cache, grad_pred, graph.mu)
        grads.update(model.backward_layers(ops[gi], caches, grad_feats,
                                           drop_masks=drop_masks))
        for name, g in grads.items():
            if name == "input":
                continue
            total[name] = total.get(name, 0.0) + g
    return loss, total


def predict_graphs(model, task: GraphRegressionTask, idx, ops=None) -> np.ndarray:
    preds = []
    for gi in idx:
        op = ops[gi] if ops is not None else model.operator(task.graphs[gi])
        feats = model.feature_map(op, task.features[gi])
        preds.append(float(model.head_forward(feats, task.graphs[gi].mu).reshape(-1)[0]))
    return np.asarray(preds)


def mae(preds: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean(np.abs(preds - targets)))


def train(model, task, config: TrainConfig) -> TrainResult:
    """Fit the model; early-stops on the validation metric and restores the
    best parameters. Node tasks maximize accuracy, graph tasks minimize MAE."""
    rng = np.random.default_rng(config.seed)
    if not getattr(model, "_initialized", False):
        model.init(rng)
        model._initialized = True
    is_node = isinstance(task, NodeClassificationTask)
    if is_node:
        if model.mode != "node":
            raise ValueError("node task requires a node-mode model")
        op = model.operator(task.graph)
        ops = None
    else:
        if model.mode != "graph":
            raise ValueError("graph task requires a graph-mode model")
        ops = [model.operator(g) for g in task.graphs]
    optimizer = _Optimizer(model, config)
    better = (lambda a, b: a > b) if is_node else (lambda a, b: a < b)
    best_val = -np.inf if is_node else np.inf
    best_state = model.state_copy()
    best_epoch = 0
    history: list[tuple[int, float, float]] = []
    since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        if is_node:
            drop_masks = _dropout_masks(model, task.graph.n, config.dropout_p, rng)
            loss, grads = _node_epoch(model, op, task, drop_masks)
        else:
            loss, grads = _graph_epoch(model, ops, task, config.dropout_p, rng)
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite training loss at epoch {epoch}")
        optimizer.step(grads)
        if is_node:
            logits = model.head_forward(model.feature_map(op, task.features),
                                        task.graph.mu)
            val_metric = accuracy(logits, task.labels, task.val_mask)
        else:
            val_metric = mae(predict_graphs(model, task, task.val_idx, ops),
                             task.targets[task.val_idx])
        history.append((epoch, loss, val_metric))
        if better(val_metric, best_val):
            best_val = val_metric
            best_state = model.state_copy()
            best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break
    model.load_state(best_state)
    if is_node:
        logits = model.head_forward(model.feature_map(op, task.features), task.graph.mu)
        test_metric = (accuracy(logits, task.labels, task.test_mask)
                       if np.any(task.test_mask) else None)
    else:
        test_metric = (mae(predict_graphs(model, task, task.test_idx, ops),
                           task.targets[task.test_idx])
                       if len(task.test_idx) else None)
    return TrainResult(model=model, history=history, best_epoch=best_epoch,
                       best_val=float(best_val), test_metric=test_metric)


def history_to_csv(history) -> str:
    lines = ["epoch,train_loss,val_metric"]
    for epoch, loss, val in history:
        lines.append(f"{epoch},{loss!r},{val!r}")
    return "\n".join(lines) + "\n"
