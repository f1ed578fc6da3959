"""Command-line workflow over a run directory.

    faithrel gen-data --out run/              # corpus splits
    faithrel train --out run/                 # model.json
    faithrel search-beta --out run/           # betas.json
    faithrel fit-temperature --out run/       # temperature.json
    faithrel fit-threshold --out run/         # threshold.json
    faithrel predict --out run/ [--split test]
    faithrel evaluate --out run/ [--split test]
    faithrel timeline --out run/ [--split test]
    faithrel reliability --out run/ [--split test]

Without ``--config``, stages after gen-data read the ``run.cfg`` it wrote
into the run directory. Each command prints a JSON summary on stdout. Exit codes: 0 success,
2 configuration error, 3 missing prerequisite artifact.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import defaultdict
from dataclasses import asdict
from pathlib import Path

import numpy as np

from faithrel import config as cfgmod
from faithrel.calibrate import ece, fit_temperature, fit_threshold
from faithrel.core import DEFAULT_LABELS, VAGUE
from faithrel.counterfactual import BiasCoefficients, search_betas
from faithrel.metrics import f1_scores
from faithrel.model import ModelParams, train
from faithrel.pipeline import featurize, gold_indices, predict_views, run_pipeline
from faithrel.records import CorpusRecord, PredictionRecord, dumps, iter_jsonl, read_jsonl, write_jsonl
from faithrel.synth import SPLITS, generate
from faithrel.timeline import construct, timeline_metrics

log = logging.getLogger("faithrel")
LABELS = DEFAULT_LABELS

EXIT_CONFIG = 2
EXIT_MISSING = 3

# artifact name -> stage that produces it
PRODUCERS = {
    "train.jsonl": "gen-data",
    "dev.jsonl": "gen-data",
    "test.jsonl": "gen-data",
    "model.json": "train",
    "betas.json": "search-beta",
    "temperature.json": "fit-temperature",
    "threshold.json": "fit-threshold",
}


class MissingArtifact(Exception):
    pass


def _need(run: Path, name: str) -> Path:
    path = run / name
    if not path.exists():
        stage = PRODUCERS.get(name)
        if stage is None and name.startswith("predictions."):
            stage = "predict"
        if stage is None and name.endswith(".timelines.jsonl"):
            stage = "gen-data"
        raise MissingArtifact(f"missing {path}: run the '{stage}' stage first")
    return path


def _write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj) + "\n", encoding="utf-8")


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _records(run: Path, split: str) -> list[CorpusRecord]:
    return [r.validate(LABELS) for r in read_jsonl(_need(run, f"{split}.jsonl"), CorpusRecord)]


def _views(run: Path, split: str):
    params = ModelParams.load(_need(run, "model.json"))
    data = featurize(_records(run, split))
    return data, predict_views(params, data)


def _betas(run: Path) -> BiasCoefficients:
    b = _read_json(_need(run, "betas.json"))
    return BiasCoefficients(b["beta1"], b["beta2"], b["a"], b["b"])


def cmd_gen_data(args, cfg) -> dict:
    args.out.mkdir(parents=True, exist_ok=True)
    splits = generate(cfg.gen_config())
    counts = {}
    for split in SPLITS:
        records, timelines = splits[split]
        counts[split] = write_jsonl(args.out / f"{split}.jsonl", records)
        write_jsonl(args.out / f"{split}.timelines.jsonl", timelines)
    (args.out / "run.cfg").write_text(cfgmod.dump(cfg), encoding="utf-8")
    return {"stage": "gen-data", "records": counts}


def cmd_train(args, cfg) -> dict:
    records = _records(args.out, "train")
    data = featurize(records)
    params = train(data.full, gold_indices(data.gold, LABELS), len(LABELS), cfg.train_config())
    params.save(args.out / "model.json", LABELS)
    return {"stage": "train", "n": len(records), "final_loss": params.history[-1] if params.history else None,
            "loss_history": params.history}


def cmd_search_beta(args, cfg) -> dict:
    data, triple = _views(args.out, "dev")
    res = search_betas(triple, data.gold, LABELS, metric=cfg.metric, bounds=(cfg.beta_lo, cfg.beta_hi),
                       step=cfg.beta_step, pre_abstention=cfg.pre_abstention, eps=cfg.eps)
    out = asdict(res.betas) | {"score": res.score, "metric": cfg.metric, "grid_points": len(res.grid)}
    _write_json(args.out / "betas.json", out)
    return {"stage": "search-beta"} | out


def _dev_logits(args, cfg):
    data, triple = _views(args.out, "dev")
    betas = _betas(args.out)
    return data, triple, betas


def cmd_fit_temperature(args, cfg) -> dict:
    data, triple, betas = _dev_logits(args, cfg)
    out = run_pipeline(triple, betas, 1.0, np.inf, LABELS, cfg.eps)
    gold = gold_indices(data.gold, LABELS)
    keep = gold >= 0
    T = fit_temperature(out.z_prime[keep], gold[keep], bounds=(cfg.t_lo, cfg.t_hi))
    _write_json(args.out / "temperature.json", {"temperature": T})
    return {"stage": "fit-temperature", "temperature": T, "n": int(keep.sum())}


def cmd_fit_threshold(args, cfg) -> dict:
    data, triple, betas = _dev_logits(args, cfg)
    T = _read_json(_need(args.out, "temperature.json"))["temperature"]
    out = run_pipeline(triple, betas, T, np.inf, LABELS, cfg.eps)
    tau = fit_threshold(out.y_hat, data.gold, LABELS)
    _write_json(args.out / "threshold.json", {"tau": tau})
    return {"stage": "fit-threshold", "tau": tau}


def cmd_predict(args, cfg) -> dict:
    _need(args.out, "model.json")
    betas = _betas(args.out)
    T = _read_json(_need(args.out, "temperature.json"))["temperature"]
    tau = _read_json(_need(args.out, "threshold.json"))["tau"]
    records = _records(args.out, args.split)
    data, triple = _views(args.out, args.split)
    out = run_pipeline(triple, betas, T, tau, LABELS, cfg.eps)
    preds = [
        PredictionRecord(
            id=r.id, doc_id=r.doc_id, event1=r.event1, event2=r.event2, gold=r.label,
            y_full=triple.y_full[i], y_trigger=triple.y_trigger[i], y_empty=triple.y_empty[i],
            y_debiased=out.y_debiased[i], y_hat=out.y_hat[i], entropy=float(out.entropy[i]),
            decision=out.decisions[i], confidence=float(out.confidence[i]),
        )
        for i, r in enumerate(records)
    ]
    path = args.out / f"predictions.{args.split}.jsonl"
    write_jsonl(path, preds)
    return {"stage": "predict", "split": args.split, "n": len(preds),
            "abstained": sum(p.decision == VAGUE for p in preds)}


def _predictions(run: Path, split: str) -> list[PredictionRecord]:
    return read_jsonl(_need(run, f"predictions.{split}.jsonl"), PredictionRecord)


def evaluate_predictions(preds: list[PredictionRecord], labels=LABELS, n_bins: int = 10) -> dict:
    """K-way and (K+1)-way F1 plus ECE of ``y_hat`` on gold in-distribution pairs."""
    gold = [p.gold for p in preds]
    dec = [p.decision for p in preds]
    kway = f1_scores(gold, dec, labels)
    k1way = f1_scores(gold, dec, labels, include_vague=True)
    id_rows = [p for p in preds if p.gold != VAGUE]
    if id_rows:
        rep = ece(np.array([p.y_hat for p in id_rows]), [labels.index(p.gold) for p in id_rows], n_bins)
        cal = {"ece": rep.ece, "nll": rep.nll}
    else:
        cal = {"ece": None, "nll": None}
    return {
        "n": len(preds),
        "micro_f1": kway["micro_f1"],
        "macro_f1": kway["macro_f1"],
        "micro_f1_with_vague": k1way["micro_f1"],
        "macro_f1_with_vague": k1way["macro_f1"],
        **cal,
        "abstention_rate": sum(d == VAGUE for d in dec) / len(dec) if dec else 0.0,
    }


def cmd_evaluate(args, cfg) -> dict:
    metrics = evaluate_predictions(_predictions(args.out, args.split), LABELS, cfg.ece_bins)
    _write_json(args.out / f"metrics.{args.split}.json", metrics)
    return {"stage": "evaluate", "split": args.split} | metrics


def cmd_timeline(args, cfg) -> dict:
    preds = _predictions(args.out, args.split)
    gold = {d["doc_id"]: d["timeline"] for d in iter_jsonl(_need(args.out, f"{args.split}.timelines.jsonl"))}
    by_doc: dict[str, list[PredictionRecord]] = defaultdict(list)
    for p in preds:
        by_doc[p.doc_id].append(p)
    rows = []
    for doc_id in sorted(by_doc):
        pairs = by_doc[doc_id]
        index = {}
        for p in pairs:
            for e in (p.event1, p.event2):
                index[e] = int(e[1:])
        res = construct(doc_id, [(p.event1, p.event2, p.decision, p.confidence) for p in pairs], index)
        em, med = timeline_metrics(res.timeline, gold[doc_id])
        rows.append({
            "doc_id": doc_id,
            "timeline": res.timeline,
            "removed_edges": [{"from": e.src, "to": e.dst, "confidence": e.confidence} for e in res.removed],
            "exact_match": em,
            "med": med,
        })
    write_jsonl(args.out / f"timelines.{args.split}.jsonl", rows)
    n = len(rows)
    return {"stage": "timeline", "split": args.split, "documents": n,
            "exact_match": sum(r["exact_match"] for r in rows) / n if n else 0.0,
            "mean_med": sum(r["med"] for r in rows) / n if n else 0.0}


def cmd_reliability(args, cfg) -> dict:
    preds = [p for p in _predictions(args.out, args.split) if p.gold != VAGUE]
    if not preds:
        raise cfgmod.ConfigError("no in-distribution predictions to bin")
    rep = ece(np.array([p.y_hat for p in preds]), [LABELS.index(p.gold) for p in preds], cfg.ece_bins)
    path = args.out / f"reliability.{args.split}.csv"
    rep.write_csv(path)
    return {"stage": "reliability", "split": args.split, "ece": rep.ece, "nll": rep.nll, "csv": path.name}


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "search-beta": cmd_search_beta,
    "fit-temperature": cmd_fit_temperature,
    "fit-threshold": cmd_fit_threshold,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "timeline": cmd_timeline,
    "reliability": cmd_reliability,
}
SPLIT_COMMANDS = ("predict", "evaluate", "timeline", "reliability")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faithrel", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--out", type=Path, required=True, help="run directory")
        p.add_argument("--config", type=Path, default=None, help="key = value config file")
        p.add_argument("--seed", type=int, default=None)
        if name == "search-beta":
            p.add_argument("--metric", choices=("micro-f1", "macro-f1"), default=None)
        if name in SPLIT_COMMANDS:
            p.add_argument("--split", choices=SPLITS, default="test")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = args.config
    if config is None and args.command != "gen-data" and (args.out / "run.cfg").exists():
        config = args.out / "run.cfg"  # settings recorded by gen-data
    try:
        cfg = cfgmod.load(config, overrides={"seed": args.seed, "metric": getattr(args, "metric", None)})
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = COMMANDS[args.command](args, cfg)
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
