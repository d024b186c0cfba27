"""
Stationary covariance functions: RBF, Matern-3/2, White, and sums of them.

Hyperparameters are held in log space on :class:`KernelSpec`; the plain
values only appear on disk (``to_dict``/``from_dict``). All kernels are
isotropic, with one lengthscale shared by every input dimension.

White noise is an index-space kernel: it adds its variance on the diagonal
of ``gram`` and in ``diag`` but never in ``cross_cov``, because data inputs
and inducing inputs are different index sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch

SQRT3 = np.sqrt(3.0)

KINDS = ("rbf", "matern32", "white", "sum")


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    log_lengthscale: float = 0.0
    log_signal_variance: float = 0.0
    log_noise_variance: float = 0.0
    terms: tuple["KernelSpec", ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "sum":
            if len(self.terms) < 2:
                raise ValueError("a sum kernel needs at least two terms")
            object.__setattr__(self, "terms", tuple(self.terms))
        elif self.terms:
            raise ValueError(f"{self.kind} kernel takes no terms")

    # plain-valued views
    @property
    def lengthscale(self) -> float:
        return float(np.exp(self.log_lengthscale))

    @property
    def signal_variance(self) -> float:
        return float(np.exp(self.log_signal_variance))

    @property
    def noise_variance(self) -> float:
        return float(np.exp(self.log_noise_variance))

    def leaves(self) -> list["KernelSpec"]:
        if self.kind == "sum":
            return [leaf for t in self.terms for leaf in t.leaves()]
        return [self]

    def is_white_only(self) -> bool:
        return all(leaf.kind == "white" for leaf in self.leaves())

    # flat log-parameter vector, in a fixed depth-first order
    def param_names(self, prefix: str = "") -> list[str]:
        if self.kind == "sum":
            names = []
            for i, t in enumerate(self.terms):
                names += t.param_names(f"{prefix}sum[{i}].")
            return names
        if self.kind == "white":
            return [f"{prefix}white.log_noise_variance"]
        return [f"{prefix}{self.kind}.log_lengthscale", f"{prefix}{self.kind}.log_signal_variance"]

    @property
    def n_params(self) -> int:
        return len(self.param_names())

    def get_params(self) -> np.ndarray:
        if self.kind == "sum":
            return np.concatenate([t.get_params() for t in self.terms])
        if self.kind == "white":
            return np.array([self.log_noise_variance])
        return np.array([self.log_lengthscale, self.log_signal_variance])

    def with_params(self, theta) -> "KernelSpec":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise DimensionMismatch(f"expected {self.n_params} parameters, got {theta.shape}")
        if self.kind == "sum":
            out, i = [], 0
            for t in self.terms:
                out.append(t.with_params(theta[i : i + t.n_params]))
                i += t.n_params
            return replace(self, terms=tuple(out))
        if self.kind == "white":
            return replace(self, log_noise_variance=float(theta[0]))
        return replace(self, log_lengthscale=float(theta[0]), log_signal_variance=float(theta[1]))

    def to_dict(self) -> dict:
        if self.kind == "sum":
            return {"kind": "sum", "terms": [t.to_dict() for t in self.terms]}
        if self.kind == "white":
            return {"kind": "white", "variance": self.noise_variance}
        return {
            "kind": self.kind,
            "lengthscale": self.lengthscale,
            "signal_variance": self.signal_variance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        kind = d["kind"]
        if kind == "sum":
            return cls("sum", terms=tuple(cls.from_dict(t) for t in d["terms"]))
        if kind == "white":
            return white(d["variance"])
        if kind in ("rbf", "matern32"):
            return cls(
                kind,
                log_lengthscale=float(np.log(d["lengthscale"])),
                log_signal_variance=float(np.log(d["signal_variance"])),
            )
        raise ValueError(f"unknown kernel kind {kind!r}")


def rbf(lengthscale: float = 1.0, signal_variance: float = 1.0) -> KernelSpec:
    return KernelSpec("rbf", float(np.log(lengthscale)), float(np.log(signal_variance)))


def matern32(lengthscale: float = 1.0, signal_variance: float = 1.0) -> KernelSpec:
    return KernelSpec("matern32", float(np.log(lengthscale)), float(np.log(signal_variance)))


def white(variance: float = 1.0) -> KernelSpec:
    return KernelSpec("white", log_noise_variance=float(np.log(variance)))


def sum_of(*terms: KernelSpec) -> KernelSpec:
    return KernelSpec("sum", terms=tuple(terms))


def parse_kernel(
    name: str,
    lengthscale: float = 1.0,
    signal_variance: float = 2.0,
    white_variance: float = 1.0,
) -> KernelSpec:
    """Build a kernel from a CLI name such as ``rbf`` or ``matern32+white``."""
    parts = [p.strip().lower() for p in name.split("+")]
    terms = []
    for p in parts:
        if p == "rbf":
            terms.append(rbf(lengthscale, signal_variance))
        elif p == "matern32":
            terms.append(matern32(lengthscale, signal_variance))
        elif p == "white":
            terms.append(white(white_variance))
        else:
            raise ValueError(f"unknown kernel {p!r} in {name!r}")
    return terms[0] if len(terms) == 1 else sum_of(*terms)


def kernel_name(spec: KernelSpec) -> str:
    return "+".join(leaf.kind for leaf in spec.leaves())


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _check_2d(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {X.shape}")
    return X


def _check_pair(X, Z):
    X, Z = _check_2d(X, "X"), _check_2d(Z, "Z")
    if X.shape[1] != Z.shape[1]:
        raise DimensionMismatch(f"input dimensions differ: {X.shape[1]} vs {Z.shape[1]}")
    return X, Z


def _stationary(spec: KernelSpec, r2: np.ndarray) -> np.ndarray:
    s2, ell = spec.signal_variance, spec.lengthscale
    if spec.kind == "rbf":
        return s2 * np.exp(-0.5 * r2 / ell**2)
    t = SQRT3 * np.sqrt(r2) / ell
    return s2 * (1.0 + t) * np.exp(-t)


def kernel_eval(spec: KernelSpec, x, x2, same_index: bool | None = None) -> float:
    """k(x, x2) for a single pair.

    ``same_index`` says whether x and x2 are the same input point, which is
    what White noise keys on; by default identical coordinates count as the
    same point.
    """
    x, x2 = np.asarray(x, dtype=float).ravel(), np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise DimensionMismatch(f"dimensions differ: {x.shape} vs {x2.shape}")
    if same_index is None:
        same_index = bool(np.array_equal(x, x2))
    return _eval_pair(spec, x, x2, same_index)


def _eval_pair(spec, x, x2, same_index):
    if spec.kind == "sum":
        return float(sum(_eval_pair(t, x, x2, same_index) for t in spec.terms))
    if spec.kind == "white":
        return spec.noise_variance if same_index else 0.0
    r2 = float(np.sum((x - x2) ** 2))
    return float(_stationary(spec, np.array(r2)))


def sqdist(X, Z) -> np.ndarray:
    return cdist(X, Z, "sqeuclidean")


def cross_cov(spec: KernelSpec, X, Z) -> np.ndarray:
    """N x M matrix of k(x_n, z_m); White contributes nothing here."""
    X, Z = _check_pair(X, Z)
    return _cross(spec, sqdist(X, Z))


def _cross(spec, r2):
    if spec.kind == "sum":
        out = np.zeros_like(r2)
        for t in spec.terms:
            out += _cross(t, r2)
        return out
    if spec.kind == "white":
        return np.zeros_like(r2)
    return _stationary(spec, r2)


def gram(spec: KernelSpec, X) -> np.ndarray:
    """N x N prior covariance of X with itself, White on the diagonal."""
    X = _check_2d(X, "X")
    r2 = sqdist(X, X)
    K = _cross(spec, r2)
    K[np.diag_indices_from(K)] += _white_total(spec)
    return K


def _white_total(spec) -> float:
    return sum(leaf.noise_variance for leaf in spec.leaves() if leaf.kind == "white")


def diag(spec: KernelSpec, X) -> np.ndarray:
    X = _check_2d(X, "X")
    total = _white_total(spec) + sum(
        leaf.signal_variance for leaf in spec.leaves() if leaf.kind != "white"
    )
    return np.full(X.shape[0], total)


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------


def _leaf_grads(spec, r2, with_white_diag):
    """d K / d(log theta) for a single non-sum kernel, as a list of arrays."""
    if spec.kind == "white":
        g = np.zeros_like(r2)
        if with_white_diag:
            g[np.diag_indices_from(g)] = spec.noise_variance
        return [g]
    ell = spec.lengthscale
    K = _stationary(spec, r2)
    if spec.kind == "rbf":
        d_log_ell = K * r2 / ell**2
    else:
        t = SQRT3 * np.sqrt(r2) / ell
        d_log_ell = spec.signal_variance * t**2 * np.exp(-t)
    return [d_log_ell, K]


def _grads(spec, r2, with_white_diag):
    if spec.kind == "sum":
        out = []
        for t in spec.terms:
            out += _grads(t, r2, with_white_diag)
        return out
    return _leaf_grads(spec, r2, with_white_diag)


def kernel_grads(spec: KernelSpec, X, Z=None) -> list[np.ndarray]:
    """Per log-hyperparameter derivative matrices, in ``param_names`` order.

    With ``Z`` absent the derivatives are of ``gram(X)``; otherwise of
    ``cross_cov(X, Z)``.
    """
    if Z is None:
        X = _check_2d(X, "X")
        return _grads(spec, sqdist(X, X), True)
    X, Z = _check_pair(X, Z)
    return _grads(spec, sqdist(X, Z), False)


def diag_grads(spec: KernelSpec, X) -> list[np.ndarray]:
    """Per log-hyperparameter derivatives of ``diag(X)``."""
    X = _check_2d(X, "X")
    n = X.shape[0]
    out = []
    for leaf in spec.leaves():
        if leaf.kind == "white":
            out.append(np.full(n, leaf.noise_variance))
        else:
            out += [np.zeros(n), np.full(n, leaf.signal_variance)]
    return out


def _dk_dr2_coeff(spec, r2):
    """Coefficient c with d k(x, z) / d z = c * (x - z), summed over leaves."""
    if spec.kind == "sum":
        return sum(_dk_dr2_coeff(t, r2) for t in spec.terms)
    if spec.kind == "white":
        return np.zeros_like(r2)
    ell = spec.lengthscale
    if spec.kind == "rbf":
        return _stationary(spec, r2) / ell**2
    t = SQRT3 * np.sqrt(r2) / ell
    return 3.0 * spec.signal_variance / ell**2 * np.exp(-t)


def cross_cov_grad_z(spec: KernelSpec, G, X, Z) -> np.ndarray:
    """sum_{n,m} G[n,m] * d cross_cov(X,Z)[n,m] / dZ, an M x D array."""
    X, Z = _check_pair(X, Z)
    C = np.asarray(G) * _dk_dr2_coeff(spec, sqdist(X, Z))
    return C.T @ X - C.sum(axis=0)[:, None] * Z


def gram_grad_z(spec: KernelSpec, G, Z) -> np.ndarray:
    """sum_{a,b} G[a,b] * d gram(Z)[a,b] / dZ, counting both arguments."""
    G = np.asarray(G)
    return cross_cov_grad_z(spec, G + G.T, Z, Z)
