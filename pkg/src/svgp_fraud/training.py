"""
Minibatch gradient ascent on the sparse-GP bound.

One optimizer state covers the whole flat parameter vector (see
``svgp.pack``). Blocks that are switched off (inducing inputs under
``freeze_inducing``, hyperparameters unless ``train_hyperparams``) are masked
out so they stay bit-identical.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import svgp
from .errors import ShapeMismatch, SvgpError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Adam:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")


@dataclass(frozen=True)
class Sgd:
    lr: float = 1e-3

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")


@dataclass(frozen=True)
class TrainConfig:
    optimizer: Adam | Sgd = field(default_factory=Adam)
    batch_size: int = 100
    epochs: int = 50
    seed: int = 0
    freeze_inducing: bool = False
    train_hyperparams: bool = False
    elbo_eval_every: int | None = None  # None: once per epoch

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")

    def to_dict(self) -> dict:
        opt = self.optimizer
        if isinstance(opt, Sgd):
            o = {"name": "sgd", "lr": opt.lr}
        else:
            o = {"name": "adam", "lr": opt.lr, "beta1": opt.beta1, "beta2": opt.beta2, "eps": opt.eps}
        return {
            "optimizer": o,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "freeze_inducing": self.freeze_inducing,
            "train_hyperparams": self.train_hyperparams,
            "elbo_eval_every": self.elbo_eval_every,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        o = dict(d["optimizer"])
        name = o.pop("name")
        opt = Sgd(**o) if name == "sgd" else Adam(**o)
        return cls(opt, **{k: v for k, v in d.items() if k != "optimizer"})


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(state: AdamState, params, grads, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam step in the *ascent* direction (params += step)."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise ShapeMismatch(f"params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grads
    v = beta2 * state.v + (1 - beta2) * grads**2
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    return AdamState(m, v, t), params + lr * m_hat / (np.sqrt(v_hat) + eps)


def minibatches(n: int, batch_size: int, seed: int, epoch: int) -> Iterator[np.ndarray]:
    """Seeded permutation of range(n) for this epoch, chunked; short last chunk kept."""
    if batch_size > n:
        raise ValueError(f"batch_size {batch_size} exceeds N = {n}")
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


@dataclass
class TraceRecord:
    step: int
    elbo: float
    kl: float
    clamps: int
    seconds: float


@dataclass
class TrainTrace:
    records: list[TraceRecord] = field(default_factory=list)

    HEADER = "step\telbo\tkl\tclamps\tseconds"

    def append(self, rec: TraceRecord):
        if self.records and rec.step <= self.records[-1].step:
            raise ValueError("trace steps must be strictly increasing")
        self.records.append(rec)

    def to_tsv(self) -> str:
        lines = [self.HEADER]
        for r in self.records:
            lines.append(f"{r.step}\t{float(r.elbo)!r}\t{float(r.kl)!r}\t{r.clamps}\t{r.seconds:.3f}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "TrainTrace":
        lines = text.strip().splitlines()
        if lines[0] != cls.HEADER:
            raise ValueError("unexpected trace header")
        tr = cls()
        for line in lines[1:]:
            s, e, k, c, sec = line.split("\t")
            tr.append(TraceRecord(int(s), float(e), float(k), int(c), float(sec)))
        return tr

    @property
    def elbos(self) -> np.ndarray:
        return np.array([r.elbo for r in self.records])


class TrainingError(SvgpError, RuntimeError):
    def __init__(self, step: int, cause: Exception):
        self.step = step
        super().__init__(f"step {step}: {cause}")


def trainable_mask(model: svgp.SvgpModel, cfg: TrainConfig) -> np.ndarray:
    blocks = svgp.param_blocks(model)
    mask = np.ones(blocks["likelihood"].stop, dtype=bool)
    if cfg.freeze_inducing or model.freeze_inducing:
        mask[blocks["Z"]] = False
    if not cfg.train_hyperparams:
        mask[blocks["kernel"]] = False
        mask[blocks["likelihood"]] = False
    return mask


def _full_batch_record(model, X, y, step, t0) -> TraceRecord:
    mm = svgp.q_marginals(model, X)
    kl = svgp.kl_qu_pu(model)
    data = float(np.sum(model.likelihood.variational_expectations(y, mm.mu, mm.var)))
    return TraceRecord(step, data - kl, kl, mm.n_clamped, time.perf_counter() - t0)


def train(model: svgp.SvgpModel, data, cfg: TrainConfig, progress=None):
    """Run ``cfg.epochs`` passes of minibatch ascent. Returns (model, trace).

    ``data`` needs ``X`` and ``y`` attributes. The data term of each batch is
    scaled by N / |batch|; the KL term is not scaled.
    """
    X, y = np.asarray(data.X, dtype=float), np.asarray(data.y)
    n = X.shape[0]
    if X.ndim != 2 or X.shape[1] != model.inducing.D:
        raise ShapeMismatch(f"data is {X.shape}, model expects D = {model.inducing.D}")
    trace = TrainTrace()
    if cfg.epochs == 0:
        return model, trace

    batch = min(cfg.batch_size, n)
    steps_per_epoch = -(-n // batch)
    every = cfg.elbo_eval_every or steps_per_epoch
    model = svgp.SvgpModel(
        model.kernel, model.inducing, model.q, model.likelihood,
        model.freeze_inducing or cfg.freeze_inducing,
    )
    mask = trainable_mask(model, cfg)
    theta = svgp.pack(model)
    state = AdamState.zeros(theta.shape[0])
    opt = cfg.optimizer

    t0 = time.perf_counter()
    trace.append(_full_batch_record(model, X, y, 0, t0))
    step = 0
    for epoch in range(cfg.epochs):
        for idx in minibatches(n, batch, cfg.seed, epoch):
            step += 1
            try:
                g = svgp.elbo_gradients(model, X[idx], y[idx], scale=n / len(idx)).flat()
            except (SvgpError, ValueError, np.linalg.LinAlgError) as exc:
                raise TrainingError(step, exc) from exc
            g = np.where(mask, g, 0.0)
            if isinstance(opt, Adam):
                state, new = adam_step(state, theta, g, opt.lr, opt.beta1, opt.beta2, opt.eps)
            else:
                new = theta + opt.lr * g
            theta = np.where(mask, new, theta)
            try:
                model = svgp.unpack(model, theta)
            except ValueError as exc:
                raise TrainingError(step, exc) from exc
            if step % every == 0:
                rec = _full_batch_record(model, X, y, step, t0)
                trace.append(rec)
                log.info("step %d elbo %.6g kl %.6g clamps %d", rec.step, rec.elbo, rec.kl, rec.clamps)
        if progress is not None:
            progress(epoch, model, trace)
    return model, trace
