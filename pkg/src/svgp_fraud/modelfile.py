"""
The ``model.gpc`` record: a versioned JSON document holding everything needed
to score raw rows again (kernel, Z, q(u), likelihood, standardization) plus
the configuration that produced it.

Floats are written with ``repr`` so every value round-trips bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import SplitSpec, Standardization
from .errors import ModelVersionMismatch
from .kernels import KernelSpec
from .likelihoods import likelihood_from_dict
from .svgp import InducingInputs, SvgpModel, VariationalGaussian
from .training import TrainConfig

FORMAT = "svgp-fraud-model"
VERSION = 1


@dataclass
class ModelRecord:
    model: SvgpModel
    feature_names: tuple[str, ...]
    standardization: Standardization | None
    train_config: TrainConfig
    split: SplitSpec
    label_column: str = "Class"
    Z_init: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def to_dict(rec: ModelRecord) -> dict:
    model = rec.model
    names = list(rec.feature_names)
    return {
        "format": FORMAT,
        "version": VERSION,
        "kernel": model.kernel.to_dict(),
        "likelihood": model.likelihood.to_dict(),
        "freeze_inducing": model.freeze_inducing,
        "Z": model.Z.tolist(),
        "Z_init": None if rec.Z_init is None else np.asarray(rec.Z_init).tolist(),
        "m": model.q.m.tolist(),
        "L_S": model.q.L_S.tolist(),
        "feature_names": names,
        "label_column": rec.label_column,
        "standardization": None if rec.standardization is None else rec.standardization.to_dict(names),
        "train_config": rec.train_config.to_dict(),
        "split": rec.split.to_dict(),
        "extra": rec.extra,
    }


def from_dict(d: dict) -> ModelRecord:
    if d.get("format") != FORMAT:
        raise ModelVersionMismatch(f"not a model file (format {d.get('format')!r})")
    if d.get("version") != VERSION:
        raise ModelVersionMismatch(f"model file version {d.get('version')} != supported {VERSION}")
    kernel = KernelSpec.from_dict(d["kernel"])
    q = VariationalGaussian(np.array(d["m"], dtype=float), np.array(d["L_S"], dtype=float))
    model = SvgpModel(
        kernel,
        InducingInputs(np.array(d["Z"], dtype=float)),
        q,
        likelihood_from_dict(d["likelihood"]),
        bool(d["freeze_inducing"]),
    )
    names = tuple(d["feature_names"])
    std = d.get("standardization")
    return ModelRecord(
        model=model,
        feature_names=names,
        standardization=None if std is None else Standardization.from_dict(std, names),
        train_config=TrainConfig.from_dict(d["train_config"]),
        split=SplitSpec(**d["split"]),
        label_column=d.get("label_column", "Class"),
        Z_init=None if d.get("Z_init") is None else np.array(d["Z_init"], dtype=float),
        extra=d.get("extra", {}),
    )


def dumps(rec: ModelRecord) -> str:
    return json.dumps(to_dict(rec), indent=1, allow_nan=False) + "\n"


def save(rec: ModelRecord, path) -> None:
    Path(path).write_text(dumps(rec), encoding="utf-8")


def load(path) -> ModelRecord:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelVersionMismatch(f"{path}: not a readable model file ({exc})") from exc
    return from_dict(d)
