"""
End-to-end runs: prepare data, fit, score, and sweep kernels x inducing counts.

The CLI is a thin argparse layer over :class:`RunConfig` and the ``run_*``
functions here, so the same pipeline is reachable from tests and scripts.
"""

from __future__ import annotations

import json
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import data as data_mod
from . import modelfile, svgp
from .errors import MTooLarge, SplitMismatch
from .kernels import KernelSpec, parse_kernel
from .likelihoods import BernoulliProbit
from .metrics import TSV_COLUMNS, EvalReport, evaluate
from .training import Adam, Sgd, TrainConfig, TrainTrace, train

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class RunConfig:
    data: Path | None = None
    label_column: str = "Class"
    split: data_mod.SplitSpec = field(default_factory=data_mod.SplitSpec)
    kernel: str = "rbf"
    lengthscale: float = 1.0
    signal_variance: float = 2.0
    white_variance: float = 1.0
    M: int = 50
    train: TrainConfig = field(default_factory=TrainConfig)
    out: Path = Path("out")
    threshold: float = 0.5
    standardize_columns: tuple[str, ...] | None = None
    kmeans_iters: int = 100

    def kernel_spec(self) -> KernelSpec:
        return parse_kernel(self.kernel, self.lengthscale, self.signal_variance, self.white_variance)

@dataclass
class Prepared:
    train: data_mod.Dataset
    test: data_mod.Dataset
    stats: data_mod.Standardization

def prepare(d: data_mod.Dataset, cfg: RunConfig) -> Prepared:
    """Split, then standardize with training statistics only."""
    train_raw, test_raw = data_mod.split(d, cfg.split)
    train_std = data_mod.standardize(train_raw, cfg.standardize_columns)
    stats = train_std.standardization
    test_std = data_mod.standardize(test_raw, stats=stats)
    return Prepared(train_std, test_std, stats)

def fit(prep: Prepared, cfg: RunConfig):
    """inverse dataset -> k-means Z -> q at the prior -> minibatch training."""
    if not 1 <= cfg.M <= prep.train.N:
        raise MTooLarge(f"M = {cfg.M} must lie in [1, {prep.train.N}]")
    inv = data_mod.inverse_dataset(prep.train, cfg.split.seed)
    Z = data_mod.kmeans_init(inv, cfg.M, cfg.train.seed, cfg.kmeans_iters)
    model = svgp.init_model(cfg.kernel_spec(), Z, BernoulliProbit(), cfg.train.freeze_inducing)
    trained, trace = train(model, prep.train, cfg.train)
    return trained, trace, Z.Z

def score(model: svgp.SvgpModel, test: data_mod.Dataset, cfg: RunConfig, extra_meta=None) -> EvalReport:
    probs, _, _ = svgp.predict(model, test.X)
    meta = {
        "kernel": cfg.kernel,
        "M": model.M,
        "seed": cfg.split.seed,
        "n_test_positive": test.n_positive,
        "test_fraud_ratio": cfg.split.test_fraud_ratio,
        "test_composition": f"{test.n_positive}/{test.N}",
    }
    meta.update(extra_meta or {})
    return evaluate(probs, test.y, cfg.threshold, meta)

def _record(model, prep, cfg, Z_init, trace: TrainTrace) -> modelfile.ModelRecord:
    return modelfile.ModelRecord(
        model=model,
        feature_names=prep.train.feature_names,
        standardization=prep.stats,
        train_config=cfg.train,
        split=cfg.split,
        label_column=cfg.label_column,
        Z_init=Z_init,
        extra={
            "kernel_name": cfg.kernel,
            "n_train": prep.train.N,
            "n_train_positive": prep.train.n_positive,
            "final_elbo": trace.records[-1].elbo if trace.records else None,
        },
    )

def _write_meta(out: Path, name: str, payload: dict):
    payload = dict(payload, written_at=time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    (out / name).write_text(json.dumps(payload, indent=1, default=str) + "\n")

def run_train(cfg: RunConfig, dataset: data_mod.Dataset | None = None):
    dataset = dataset or data_mod.load_csv(cfg.data, cfg.label_column)
    prep = prepare(dataset, cfg)
    t0 = time.perf_counter()
    model, trace, Z_init = fit(prep, cfg)
    rec = _record(model, prep, cfg, Z_init, trace)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    modelfile.save(rec, out / "model.gpc")
    (out / "trace.tsv").write_text(trace.to_tsv())
    _write_meta(out, "run.json", {"command": "train", "data": str(cfg.data), "seconds": time.perf_counter() - t0})
    return rec, trace

def run_eval(model_path, cfg: RunConfig, dataset: data_mod.Dataset | None = None, requested_seed=None):
    """Score a saved model on the test split rebuilt from its stored split spec.

    ``requested_seed`` overrides the stored split seed (with a warning).
    """
    rec = modelfile.load(model_path)
    split = rec.split
    if requested_seed is not None and requested_seed != split.seed:
        warnings.warn(
            f"requested split seed {requested_seed} differs from stored seed {split.seed}; using requested",
            SplitMismatch,
        )
        split = replace(split, seed=requested_seed)
    dataset = dataset or data_mod.load_csv(cfg.data, rec.label_column)
    _, test_raw = data_mod.split(dataset, split)
    test = data_mod.standardize(test_raw, stats=rec.standardization) if rec.standardization else test_raw
    cfg = replace(cfg, split=split, kernel=rec.extra.get("kernel_name", cfg.kernel))
    report = score(rec.model, test, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.tsv").write_text(report.to_record())
    return report

@dataclass
class CellResult:
    kernel: str
    M: int
    report: EvalReport | None = None
    final_elbo: float | None = None
    error: str | None = None

    def tsv_row(self) -> str:
        if self.error is not None:
            cell = f"ERROR({self.error})"
            return f"{self.kernel}\t{self.M}\t{cell}\t{cell}"
        return f"{self.kernel}\t{self.M}\t{self.report.mean_log_likelihood!r}\t{self.report.accuracy!r}"

def run_cell(prep: Prepared, cfg: RunConfig) -> CellResult:
    try:
        model, trace, _ = fit(prep, cfg)
        report = score(model, prep.test, cfg)
        return CellResult(cfg.kernel, cfg.M, report, trace.records[-1].elbo if trace.records else None)
    except Exception as exc:  # a failed cell must not stop the sweep
        log.warning("cell %s M=%d failed: %s", cfg.kernel, cfg.M, exc)
        return CellResult(cfg.kernel, cfg.M, error=type(exc).__name__)

def _run_cell_args(args):
    return run_cell(*args)

def run_sweep(cfg: RunConfig, kernels, Ms, dataset=None, jobs: int = 1) -> list[CellResult]:
    dataset = dataset or data_mod.load_csv(cfg.data, cfg.label_column)
    prep = prepare(dataset, cfg)
    cells = [(prep, replace(cfg, kernel=k, M=int(m))) for k in kernels for m in Ms]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_cell_args, cells))
    else:
        results = [run_cell(*c) for c in cells]
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.tsv").write_text(sweep_tsv(results))
    return results

def sweep_tsv(results) -> str:
    return "\t".join(TSV_COLUMNS) + "\n" + "".join(r.tsv_row() + "\n" for r in results)

def make_train_config(optimizer="adam", lr=None, **kw) -> TrainConfig:
    if optimizer == "sgd":
        opt = Sgd(lr if lr is not None else 1e-3)
    else:
        opt = Adam(lr if lr is not None else 0.01)
    return TrainConfig(optimizer=opt, **kw)

def verify_report(results) -> tuple[str, bool]:
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{'ALL PASS' if ok else 'FAILED'}: {sum(r.passed for r in results)}/{len(results)} checks")
    return "\n".join(lines) + "\n", ok

