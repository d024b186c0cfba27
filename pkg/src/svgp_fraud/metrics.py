"""Test-set scoring: accuracy, mean predictive log-likelihood, confusion counts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch

P_CLAMP = 1e-15

TSV_COLUMNS = ("kernel", "M", "test_likelihood", "test_accuracy")


@dataclass
class EvalReport:
    n_test: int
    accuracy: float
    mean_log_likelihood: float
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    threshold: float = 0.5
    metadata: dict = field(default_factory=dict)

    @property
    def error_rate(self) -> float:
        return (self.fp + self.fn) / self.n_test

    def to_record(self) -> str:
        """Key/value text, one ``key\\tvalue`` pair per line, stable key order."""
        items = [
            ("n_test", self.n_test),
            ("accuracy", repr(self.accuracy)),
            ("mean_log_likelihood", repr(self.mean_log_likelihood)),
            ("tp", self.tp),
            ("fp", self.fp),
            ("tn", self.tn),
            ("fn", self.fn),
            ("precision", repr(self.precision)),
            ("recall", repr(self.recall)),
            ("threshold", repr(self.threshold)),
        ]
        items += [(f"meta.{k}", v) for k, v in sorted(self.metadata.items())]
        return "".join(f"{k}\t{v}\n" for k, v in items)

    @classmethod
    def from_record(cls, text: str) -> "EvalReport":
        kv = dict(line.split("\t", 1) for line in text.splitlines() if line)
        meta = {k[5:]: v for k, v in kv.items() if k.startswith("meta.")}
        return cls(
            n_test=int(kv["n_test"]),
            accuracy=float(kv["accuracy"]),
            mean_log_likelihood=float(kv["mean_log_likelihood"]),
            tp=int(kv["tp"]),
            fp=int(kv["fp"]),
            tn=int(kv["tn"]),
            fn=int(kv["fn"]),
            precision=float(kv["precision"]),
            recall=float(kv["recall"]),
            threshold=float(kv["threshold"]),
            metadata=meta,
        )

    def tsv_row(self, kernel: str, M: int) -> str:
        return f"{kernel}\t{M}\t{self.mean_log_likelihood:.4f}\t{self.accuracy:.4f}"


def evaluate(probs, labels, threshold: float = 0.5, metadata: dict | None = None) -> EvalReport:
    probs = np.asarray(probs, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if probs.shape != labels.shape:
        raise LengthMismatch(f"{probs.shape[0]} probabilities for {labels.shape[0]} labels")
    n = probs.shape[0]
    if n < 1:
        raise LengthMismatch("need at least one test point")
    pred = probs >= threshold
    pos = labels == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    tn = int(np.sum(~pred & ~pos))
    fn = int(np.sum(~pred & pos))
    p = np.clip(probs, P_CLAMP, 1.0 - P_CLAMP)
    ll = float(np.mean(np.where(pos, np.log(p), np.log1p(-p))))
    meta = dict(metadata or {})
    if tp + fp == 0:
        meta["precision_undefined"] = True
    if tp + fn == 0:
        meta["recall_undefined"] = True
    return EvalReport(
        n_test=n,
        accuracy=(tp + tn) / n,
        mean_log_likelihood=ll,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / (tp + fn) if tp + fn else 0.0,
        threshold=threshold,
        metadata=meta,
    )
