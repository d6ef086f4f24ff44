"""
Bidirectional LSTM sequence regressor (float64; recurrences compiled with numba).

Each direction has gate blocks stacked as ``[input, forget, output, cell]``:
``W`` is (4H, D), ``U`` is (4H, H) and ``b`` is (4H,). A linear head maps the
concatenated forward/backward hidden states (2H) to one value per step.
Inputs are z-scored with statistics from the training data (binary
columns are left as 0/1) and predictions are mapped back to target units
with the training target's mean and standard deviation.
"""
from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .errors import ConfigurationError, DivergenceError, ModelError, ShapeError, TrainingError
from .features import BINARY_COLUMNS, FeatureMatrix

log = logging.getLogger(__name__)

FORMAT = "perfexpect-regressor"
VERSION = 1
PARAM_NAMES = ("Wf", "Uf", "bf", "Wb", "Ub", "bb", "w_out", "b_out")


@dataclass
class TrainingConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 500
    patience: int = 25
    validation_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.validation_fraction < 0.5:
            raise ConfigurationError("validation_fraction must be in (0, 0.5)")
        if self.patience > self.max_epochs:
            raise ConfigurationError("patience must not exceed max_epochs")
        if self.learning_rate <= 0 or self.max_epochs < 1:
            raise ConfigurationError("learning_rate must be > 0 and max_epochs >= 1")


@dataclass
class Regressor:
    input_dim: int
    hidden: int
    params: Dict[str, np.ndarray]
    seed: int = 0
    columns: Tuple[str, ...] = ()
    feature_set: str = ""
    target: str = ""
    norm_mean: Optional[np.ndarray] = None
    norm_std: Optional[np.ndarray] = None
    target_mean: float = 0.0
    target_std: float = 1.0
    config: Optional[TrainingConfig] = None
    history: List[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.norm_mean is None:
            self.norm_mean = np.zeros(self.input_dim)
        if self.norm_std is None:
            self.norm_std = np.ones(self.input_dim)

    def copy(self) -> "Regressor":
        return copy.deepcopy(self)

    def normalize(self, rows: np.ndarray) -> np.ndarray:
        return (rows - self.norm_mean) / self.norm_std

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "input_dim": self.input_dim,
            "hidden": self.hidden,
            "seed": self.seed,
            "columns": list(self.columns),
            "feature_set": self.feature_set,
            "target": self.target,
            "shapes": {k: list(v.shape) for k, v in self.params.items()},
            "params": {k: v.ravel().tolist() for k, v in self.params.items()},
            "normalization": {"mean": self.norm_mean.tolist(), "std": self.norm_std.tolist(),
                              "target_mean": self.target_mean, "target_std": self.target_std},
            "training_config": asdict(self.config) if self.config else None,
            "history": self.history,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Regressor":
        if obj.get("format") != FORMAT or obj.get("version") != VERSION:
            raise ModelError("not a version-1 regressor model")
        params = {k: np.array(obj["params"][k], dtype=float).reshape(obj["shapes"][k])
                  for k in PARAM_NAMES}
        norm = obj["normalization"]
        cfg = obj.get("training_config")
        return cls(obj["input_dim"], obj["hidden"], params, obj["seed"], tuple(obj["columns"]),
                   obj["feature_set"], obj["target"], np.array(norm["mean"], dtype=float),
                   np.array(norm["std"], dtype=float), float(norm["target_mean"]),
                   float(norm["target_std"]), TrainingConfig(**cfg) if cfg else None,
                   list(obj.get("history", [])))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "Regressor":
        return cls.from_dict(json.loads(text))


def init_regressor(input_dim: int, hidden: int = 5, seed: int = 0) -> Regressor:
    if input_dim < 1 or hidden < 1:
        raise ConfigurationError("input_dim and hidden must be >= 1")
    rng = np.random.default_rng(seed)
    D, H = input_dim, hidden
    params = {}
    for d in "fb":
        lim = 1.0 / math.sqrt(D + H)
        params["W" + d] = rng.uniform(-lim, lim, (4 * H, D))
        params["U" + d] = rng.uniform(-lim, lim, (4 * H, H))
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        params["b" + d] = b
    lim = 1.0 / math.sqrt(2 * H)
    params["w_out"] = rng.uniform(-lim, lim, 2 * H)
    params["b_out"] = np.zeros(1)
    return Regressor(D, H, params, seed)


@njit(cache=True)
def _run(W, U, b, X):
    """One LSTM direction over X (T, D); returns hidden states and a cache."""
    T, D = X.shape
    H = U.shape[1]
    hs = np.zeros((T + 1, H))  # hs[t + 1] is the state after step t
    cs = np.zeros((T + 1, H))
    gates = np.empty((T, 4 * H))
    tcs = np.empty((T, H))
    a = np.empty(4 * H)
    for t in range(T):
        for r in range(4 * H):
            s = b[r]
            for d in range(D):
                s += W[r, d] * X[t, d]
            for k in range(H):
                s += U[r, k] * hs[t, k]
            a[r] = s
        for r in range(3 * H):
            gates[t, r] = 0.5 * (1.0 + math.tanh(0.5 * a[r]))
        for r in range(3 * H, 4 * H):
            gates[t, r] = math.tanh(a[r])
        for k in range(H):
            c = gates[t, H + k] * cs[t, k] + gates[t, k] * gates[t, 3 * H + k]
            cs[t + 1, k] = c
            tc = math.tanh(c)
            tcs[t, k] = tc
            hs[t + 1, k] = gates[t, 2 * H + k] * tc
    return hs, (X, hs, cs, gates, tcs)


@njit(cache=True)
def _bptt_kernel(U, cs, gates, tcs, dH):
    B, T, H = dH.shape
    dA = np.empty((B, T, 4 * H))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for bi in range(B):
        dh_next[:] = 0.0
        dc_next[:] = 0.0
        for t in range(T - 1, -1, -1):
            for k in range(H):
                i = gates[t, k]
                f = gates[t, H + k]
                o = gates[t, 2 * H + k]
                cc = gates[t, 3 * H + k]
                tc = tcs[t, k]
                dh = dH[bi, t, k] + dh_next[k]
                dc = dh * o * (1.0 - tc * tc) + dc_next[k]
                dA[bi, t, k] = dc * cc * i * (1.0 - i)
                dA[bi, t, H + k] = dc * cs[t, k] * f * (1.0 - f)
                dA[bi, t, 2 * H + k] = dh * tc * o * (1.0 - o)
                dA[bi, t, 3 * H + k] = dc * i * (1.0 - cc * cc)
                dc_next[k] = dc * f
            for k in range(H):
                s = 0.0
                for r in range(4 * H):
                    s += dA[bi, t, r] * U[r, k]
                dh_next[k] = s
    return dA


def _bptt(U, cache, dH):
    """Backpropagate dH (B, T, H) through one direction.

    Returns dA (B, T, 4H), the gradient w.r.t. gate pre-activations.
    """
    X, hs, cs, gates, tcs = cache
    return _bptt_kernel(U, cs, gates, tcs, np.ascontiguousarray(dH))


def _rows(model: Regressor, features) -> np.ndarray:
    rows = features.rows if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    if rows.ndim != 2 or rows.shape[1] != model.input_dim:
        raise ShapeError(f"expected {model.input_dim} feature columns, got shape {rows.shape}")
    return rows


def _forward_normalized(model: Regressor, Xn: np.ndarray):
    p = model.params
    H = model.hidden
    Xn = np.ascontiguousarray(Xn, dtype=float)
    hf, cf = _run(p["Wf"], p["Uf"], p["bf"], Xn)
    hb, cb = _run(p["Wb"], p["Ub"], p["bb"], np.ascontiguousarray(Xn[::-1]))
    Hcat = np.hstack([hf[1:], hb[1:][::-1]])
    z = Hcat @ p["w_out"] + p["b_out"][0]
    y = model.target_mean + model.target_std * z
    return y, (Hcat, cf, cb)


def forward(model: Regressor, features) -> np.ndarray:
    """Prediction per row, in target units."""
    Xn = model.normalize(_rows(model, features))
    return _forward_normalized(model, Xn)[0]


predict = forward


def _backward(model: Regressor, cache, dY: np.ndarray, want_params=True, want_inputs=False):
    """dY (B, T): upstream gradient on outputs (batched for Jacobians)."""
    p = model.params
    H = model.hidden
    Hcat, cf, cb = cache
    dZ = dY * model.target_std
    dHf = dZ[:, :, None] * p["w_out"][:H]
    dHb = dZ[:, ::-1, None] * p["w_out"][H:]
    dAf = _bptt(p["Uf"], cf, dHf)
    dAb = _bptt(p["Ub"], cb, dHb)
    out = {}
    if want_params:
        Af, Ab = dAf.sum(0), dAb.sum(0)
        Xf, hsf = cf[0], cf[1]
        Xb, hsb = cb[0], cb[1]
        out["Wf"] = Af.T @ Xf
        out["Uf"] = Af.T @ hsf[:-1]
        out["bf"] = Af.sum(0)
        out["Wb"] = Ab.T @ Xb
        out["Ub"] = Ab.T @ hsb[:-1]
        out["bb"] = Ab.sum(0)
        dz = dZ.sum(0)
        out["w_out"] = dz @ Hcat
        out["b_out"] = np.array([dz.sum()])
    if want_inputs:
        dX = dAf @ p["Wf"] + (dAb @ p["Wb"])[:, ::-1]
        out["inputs"] = dX
    return out


def _target_values(target) -> np.ndarray:
    return np.asarray(getattr(target, "values", target), dtype=float)


def gradients(model: Regressor, features, target):
    """Mean squared error over steps and its gradient for every parameter.

    Returns ``(grads, loss)``.
    """
    Xn = model.normalize(_rows(model, features))
    y_true = _target_values(target)
    if y_true.shape != (Xn.shape[0],):
        raise ShapeError(f"target length {y_true.shape} does not match {Xn.shape[0]} rows")
    y, cache = _forward_normalized(model, Xn)
    err = y - y_true
    loss = float(np.mean(err * err))
    grads = _backward(model, cache, (2.0 * err / len(err))[None, :])
    return grads, loss


def loss(model: Regressor, features, target) -> float:
    err = forward(model, features) - _target_values(target)
    return float(np.mean(err * err))


def input_jacobian(model: Regressor, features) -> np.ndarray:
    """J[tau, t, f] = d y_tau / d x_norm[t, f] over a whole sequence."""
    Xn = model.normalize(_rows(model, features))
    _, cache = _forward_normalized(model, Xn)
    T = Xn.shape[0]
    return _backward(model, cache, np.eye(T), want_params=False, want_inputs=True)["inputs"]


def grad_check(model: Regressor, features, target, epsilon: float = 1e-5,
               analytic=None) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``analytic`` overrides the gradients under test (defaults to ``gradients``).
    """
    if analytic is None:
        analytic, _ = gradients(model, features, target)
    probe = model.copy()
    worst = 0.0
    for name in PARAM_NAMES:
        theta = probe.params[name]
        flat = theta.reshape(-1)
        an = analytic[name].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + epsilon
            up = loss(probe, features, target)
            flat[k] = orig - epsilon
            down = loss(probe, features, target)
            flat[k] = orig
            num = (up - down) / (2 * epsilon)
            err = abs(an[k] - num) / max(abs(an[k]) + abs(num), 1e-8)
            worst = max(worst, err)
    return worst


def normalization_stats(columns: Sequence[str], rows: Sequence[np.ndarray]):
    X = np.vstack(rows)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < 1e-12] = 1.0
    for j, c in enumerate(columns):
        if c in BINARY_COLUMNS:
            mean[j], std[j] = 0.0, 1.0
    return mean, std


class _Adam:
    def __init__(self, params, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(model: Regressor, pieces: Sequence[Tuple[FeatureMatrix, object]],
          config: Optional[TrainingConfig] = None):
    """Fit by Adam on whole-piece sequences with early stopping.

    ``pieces`` holds (FeatureMatrix, TargetSeries) pairs. Returns a new
    trained Regressor (best-validation parameters) and the loss history.
    """
    config = config or TrainingConfig()
    if not pieces:
        raise TrainingError("empty training set")
    model = model.copy()
    rng = np.random.default_rng(config.seed)
    fms = [fm for fm, _ in pieces]
    ys = [_target_values(t) for _, t in pieces]
    for fm, y in zip(fms, ys):
        if len(y) != _rows(model, fm).shape[0]:
            raise ShapeError(f"{getattr(fm, 'piece_id', '?')}: target/feature length mismatch")
    columns = tuple(fms[0].columns) if isinstance(fms[0], FeatureMatrix) else ()
    model.columns = columns or model.columns
    model.norm_mean, model.norm_std = normalization_stats(
        model.columns or [""] * model.input_dim, [_rows(model, fm) for fm in fms])
    all_y = np.concatenate(ys)
    model.target_mean = float(all_y.mean())
    model.target_std = float(all_y.std()) if all_y.std() > 1e-12 else 1.0
    model.config = config

    n = len(pieces)
    n_val = int(round(config.validation_fraction * n))
    if n - n_val < 1:
        n_val = 0
    perm = rng.permutation(n)
    val_idx, fit_idx = perm[:n_val], perm[n_val:]
    Xn = [model.normalize(_rows(model, fm)) for fm in fms]

    opt = _Adam(model.params, config.learning_rate)
    best = math.inf
    best_params = {k: v.copy() for k, v in model.params.items()}
    wait = 0
    history = []
    for epoch in range(config.max_epochs):
        losses = []
        for i in rng.permutation(fit_idx):
            y, cache = _forward_normalized(model, Xn[i])
            err = y - ys[i]
            losses.append(float(np.mean(err * err)))
            g = _backward(model, cache, (2.0 * err / len(err))[None, :])
            opt.step(model.params, g)
        train_loss = float(np.mean(losses))
        if not math.isfinite(train_loss):
            raise DivergenceError(f"training loss is not finite at epoch {epoch}", epoch)
        record = {"epoch": epoch, "train_loss": train_loss}
        if n_val:
            val_loss = float(np.mean([np.mean((_forward_normalized(model, Xn[i])[0] - ys[i]) ** 2)
                                      for i in val_idx]))
            if not math.isfinite(val_loss):
                raise DivergenceError(f"validation loss is not finite at epoch {epoch}", epoch)
            record["val_loss"] = val_loss
            score = val_loss
        else:
            score = train_loss
        history.append(record)
        if score < best:
            best = score
            best_params = {k: v.copy() for k, v in model.params.items()}
            wait = 0
        else:
            wait += 1
            if n_val and wait >= config.patience:
                log.debug("early stop at epoch %d (best %.6g)", epoch, best)
                break
    model.params = best_params
    model.history = history
    return model, history
