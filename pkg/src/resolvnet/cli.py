"""Command-line interface.

Subcommands: decompose, coarsen, verify <suite>, train, eval,
experiment clique|collapse. All outputs (CSV metric tables, JSON reports)
are byte-identical across reruns with the same seed; the exit code is 0
iff every requested check passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import (ExperimentConfig, clique_default_config,
                          collapse_default_config, run_clique_experiment,
                          run_collapse_experiment)
from .graphs import load_graph
from .model import ResolvNetModel, model_forward
from .multiscale import coarsen, coarsening_to_document, decompose, separation_ratio
from .reports import reports_to_json, rows_to_csv, scan_to_csv, summarize
from .training import (NodeClassificationTask, TrainConfig, accuracy,
                       history_to_csv, train)
from .verify import VERIFY_SUITES


def _write(out_dir: str | None, name: str, text: str) -> None:
    if out_dir is None:
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


def _cmd_decompose(args) -> int:
    g = load_graph(Path(args.graph))
    d = decompose(g, args.tau)
    info = {
        "n": g.n,
        "tau": args.tau,
        "n_high_edges": int(np.count_nonzero(np.triu(d.W_high, 1))),
        "n_reg_edges": int(np.count_nonzero(np.triu(d.W_reg, 1))),
        "lambda_max_reg": d.lambda_max_reg,
        "lambda_1_high": d.lambda_1_high,
        "separation_ratio": separation_ratio(d) if d.has_high_part else None,
    }
    text = json.dumps(info, indent=2) + "\n"
    _write(args.out, "decomposition.json", text)
    print(text if args.json else
          "\n".join(f"{k}: {v}" for k, v in info.items()))
    return 0


def _cmd_coarsen(args) -> int:
    g = load_graph(Path(args.graph))
    doc = coarsening_to_document(coarsen(decompose(g, args.tau)))
    text = json.dumps(doc, indent=2) + "\n"
    _write(args.out, "coarsening.json", text)
    print(text)
    return 0


def _cmd_verify(args) -> int:
    suite = VERIFY_SUITES[args.suite]
    kwargs = {}
    if args.suite != "mpnn":
        kwargs["seed"] = args.seed
    if args.scan and args.suite in ("thm31", "thm41", "thm42", "appA"):
        kwargs["s_values"] = tuple(float(s) for s in args.scan.split(","))
    reports = suite(**kwargs)
    _write(args.out, f"verify_{args.suite}.json", reports_to_json(reports))
    if args.out:
        for r in reports:
            if r.scan is not None:
                _write(args.out, f"verify_{args.suite}_{r.name}.csv",
                       scan_to_csv(r.name, r.scan, r.slope))
    print(reports_to_json(reports) if args.json else summarize(reports))
    return 0 if all(r.passed for r in reports) else 1


def _load_config(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _node_task_from_config(cfg: dict) -> NodeClassificationTask:
    g = load_graph(Path(cfg["graph"]))
    if g.node_features is None or g.labels is None:
        raise SystemExit("graph document must carry features and labels")
    split = cfg.get("split", {})
    rng = np.random.default_rng(split.get("seed", 0))
    n = g.n
    train_mask = np.zeros(n, dtype=bool)
    val_mask = np.zeros(n, dtype=bool)
    test_mask = np.zeros(n, dtype=bool)
    if "train" in split:
        train_mask[split["train"]] = True
        val_mask[split["val"]] = True
        test_mask[split.get("test", [])] = True
    else:
        order = rng.permutation(n)
        n_train = int(split.get("train_frac", 0.6) * n)
        n_val = int(split.get("val_frac", 0.2) * n)
        train_mask[order[:n_train]] = True
        val_mask[order[n_train:n_train + n_val]] = True
        test_mask[order[n_train + n_val:]] = True
    return NodeClassificationTask(graph=g, features=g.node_features,
                                  labels=g.labels, train_mask=train_mask,
                                  val_mask=val_mask, test_mask=test_mask)


def _model_from_config(cfg: dict, f_in: int, out_dim: int) -> ResolvNetModel:
    m = cfg.get("model", {})
    widths = [f_in] + list(m.get("hidden_widths", [m.get("hidden", 32)]))
    return ResolvNetModel.build(widths, out_dim, a=m.get("a", 0), K=m.get("K", 1),
                                z=m.get("z", -1.0), mode="node",
                                c_nf_fraction=m.get("c_nf"),
                                head_hidden=m.get("head_hidden"))


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    if cfg.get("task", "node") != "node":
        raise SystemExit("the train subcommand handles node-classification "
                         "configs; use `experiment collapse` for regression")
    task = _node_task_from_config(cfg)
    n_classes = int(task.labels.max()) + 1
    model = _model_from_config(cfg, task.features.shape[1], n_classes)
    tc = TrainConfig.from_dict(cfg.get("train", {}))
    if args.seed is not None:
        tc.seed = args.seed
    result = train(model, task, tc)
    _write(args.out, "checkpoint.json", json.dumps(model.to_dict()) + "\n")
    _write(args.out, "history.csv", history_to_csv(result.history))
    print(f"best_epoch: {result.best_epoch}")
    print(f"best_val_accuracy: {result.best_val!r}")
    if result.test_metric is not None:
        print(f"test_accuracy: {result.test_metric!r}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    task = _node_task_from_config(cfg)
    model = ResolvNetModel.from_dict(json.loads(Path(args.checkpoint).read_text()))
    logits = model_forward(model, task.graph, task.features)
    metrics = {
        "train_accuracy": accuracy(logits, task.labels, task.train_mask),
        "val_accuracy": accuracy(logits, task.labels, task.val_mask),
    }
    if np.any(task.test_mask):
        metrics["test_accuracy"] = accuracy(logits, task.labels, task.test_mask)
    text = json.dumps(metrics, indent=2) + "\n"
    _write(args.out, "eval.json", text)
    print(text)
    return 0


def _cmd_experiment(args) -> int:
    if args.config:
        config = ExperimentConfig.from_dict(_load_config(args.config))
    else:
        config = (clique_default_config() if args.kind == "clique"
                  else collapse_default_config())
    if args.seed is not None:
        config.seed = args.seed
        config.train.seed = args.seed
    if args.kind == "clique":
        result = run_clique_experiment(config)
        csv_text = rows_to_csv(result["header"], result["rows"])
        _write(args.out, "clique_accuracy.csv", csv_text)
        _write(args.out, "clique_summary.json",
               json.dumps(result["summary"], indent=2) + "\n")
        print(csv_text)
        print(json.dumps(result["summary"], indent=2))
        return 0
    result = run_collapse_experiment(config)
    dist_csv = rows_to_csv(result["distance_header"], result["distance_rows"])
    mae_csv = rows_to_csv(result["mae_header"], result["mae_rows"])
    _write(args.out, "collapse_distances.csv", dist_csv)
    _write(args.out, "collapse_mae.csv", mae_csv)
    _write(args.out, "collapse_bounds.json", reports_to_json(result["bound_reports"]))
    print(dist_csv)
    print(mae_csv)
    print(summarize(result["bound_reports"]))
    return 0 if all(r.passed for r in result["bound_reports"]) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resolvnet",
        description="Resolvent-based multi-scale graph networks: decompose and "
                    "coarsen graphs, verify the convergence/stability suite, "
                    "train models, and run the two reference experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="two-scale split of a graph document")
    p.add_argument("--graph", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("coarsen", help="coarse-grain a graph document")
    p.add_argument("--graph", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_coarsen)

    p = sub.add_parser("verify", help="run one verification suite")
    p.add_argument("suite", choices=sorted(VERIFY_SUITES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scan", help="comma-separated scale values")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("train", help="train a node-classification model")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("experiment", help="run a reference experiment")
    p.add_argument("kind", choices=["clique", "collapse"])
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
