"""Stacked LSTM regressors written directly in NumPy.

Each network maps a short window of scalar values (a speed series or an
unwrapped bearing series, min-max scaled to ``[0, 1]``) to the next value
through a stack of LSTM layers and a sigmoid output unit. Training uses
backpropagation through time over the window and Adam updates; multi-step
forecasts feed each prediction back into the input window.

Gate weights are kept concatenated in forget / input / candidate / output
order: ``W_x`` is ``(n_in, 4 * cells)``, ``W_h`` is ``(cells, 4 * cells)``.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from pcra.dataset import RangeScaler, feature_series
from pcra.exceptions import ArtifactError, CatalogError, ShapeError, TrainingError
from pcra.trajectory import (
    STATIONARY_EPS,
    Feature,
    ObjectClass,
    Scene,
    VelocityVector,
    normalize_degrees,
    unwrap_degrees,
)

_LOG = logging.getLogger(__name__)

CHECKPOINT_VERSION = "pcra-model-v1"

# name -> (hidden layers, cells per layer)
CATALOG: dict[str, tuple[int, int]] = {
    "Simple-TP": (1, 3),
    "Deep-TP-3-10": (3, 10),
    "Deep-TP-3-40": (3, 40),
    "Deep-TP-3-80": (3, 80),
    "Deep-TP-5-10": (5, 10),
    "Deep-TP-5-40": (5, 40),
    "Deep-TP-5-80": (5, 80),
    "Deep-TP-10-10": (10, 10),
    "Deep-TP-10-40": (10, 40),
    "Deep-TP-10-80": (10, 80),
}
_ALIASES = {"DeepTP-3-80": "Deep-TP-3-80"}

_GATES = ("f", "i", "c", "o")


def sigmoid(z):
    # split by sign so neither branch overflows
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class ModelConfig:
    name: str = "Deep-TP-3-10"
    hidden_layers: int = 3
    cells: int = 10
    dropout_ratio: float = 0.2
    window: int = 3
    epochs: int = 80
    learning_rate: float = 1e-3
    seed: int = 0
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.hidden_layers < 1 or self.cells < 1 or self.window < 1 or self.epochs < 1:
            raise ValueError("hidden_layers, cells, window and epochs must be positive")
        if not 0.0 <= self.dropout_ratio < 1.0:
            raise ValueError(f"dropout_ratio must lie in [0, 1), got {self.dropout_ratio}")
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError("learning_rate and batch_size must be positive")


def catalog_config(name: str, seed: int = 0, **overrides) -> ModelConfig:
    """Configuration of a catalog model, with optional field overrides."""
    key = _ALIASES.get(name, name)
    if key not in CATALOG:
        raise CatalogError(f"unknown model {name!r}; choose from {', '.join(CATALOG)}")
    layers, cells = CATALOG[key]
    return ModelConfig(name=key, hidden_layers=layers, cells=cells, seed=seed, **overrides)


@dataclass
class LstmCellParams:
    W_x: np.ndarray
    W_h: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        cells = self.W_h.shape[0]
        if (
            self.W_h.shape != (cells, 4 * cells)
            or self.W_x.ndim != 2
            or self.W_x.shape[1] != 4 * cells
            or self.b.shape != (4 * cells,)
        ):
            raise ShapeError(
                f"inconsistent LSTM parameter shapes W_x{self.W_x.shape} W_h{self.W_h.shape} b{self.b.shape}"
            )

    @property
    def cells(self) -> int:
        return self.W_h.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.W_x.shape[0]

    def gate(self, kind: str, gate: str) -> np.ndarray:
        """Slice of one gate: ``kind`` is ``'x'``, ``'h'`` or ``'b'``."""
        k = _GATES.index(gate)
        H = self.cells
        arr = {"x": self.W_x, "h": self.W_h, "b": self.b}[kind]
        return arr[..., k * H:(k + 1) * H]

    W_xf = property(lambda self: self.gate("x", "f"))
    W_hf = property(lambda self: self.gate("h", "f"))
    W_xi = property(lambda self: self.gate("x", "i"))
    W_hi = property(lambda self: self.gate("h", "i"))
    W_xc = property(lambda self: self.gate("x", "c"))
    W_hc = property(lambda self: self.gate("h", "c"))
    W_xo = property(lambda self: self.gate("x", "o"))
    W_ho = property(lambda self: self.gate("h", "o"))
    b_f = property(lambda self: self.gate("b", "f"))
    b_i = property(lambda self: self.gate("b", "i"))
    b_c = property(lambda self: self.gate("b", "c"))
    b_o = property(lambda self: self.gate("b", "o"))

    @classmethod
    def zeros(cls, n_inputs: int, cells: int) -> "LstmCellParams":
        return cls(np.zeros((n_inputs, 4 * cells)), np.zeros((cells, 4 * cells)), np.zeros(4 * cells))

    @classmethod
    def from_gates(cls, **mats: np.ndarray) -> "LstmCellParams":
        """Build from the twelve per-gate arrays (``W_xf`` ... ``b_o``)."""
        W_x = np.concatenate([np.atleast_2d(mats[f"W_x{g}"]) for g in _GATES], axis=1)
        W_h = np.concatenate([np.atleast_2d(mats[f"W_h{g}"]) for g in _GATES], axis=1)
        b = np.concatenate([np.ravel(mats[f"b_{g}"]) for g in _GATES])
        return cls(W_x.astype(float), W_h.astype(float), b.astype(float))


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray


@dataclass
class OutputHead:
    W_hy: np.ndarray  # (cells, 1)
    b_y: np.ndarray = field(default_factory=lambda: np.zeros(1))


@dataclass
class LstmModel:
    config: ModelConfig
    layers: list[LstmCellParams]
    head: OutputHead
    scaler: tuple[float, float] | None = None
    feature: Feature = Feature.SPEED
    object_class: ObjectClass | None = None
    loss_curve: list[float] = field(default_factory=list)

    def parameters(self) -> list[np.ndarray]:
        """Every trainable array, in a fixed order shared with the gradients."""
        params = []
        for layer in self.layers:
            params.extend([layer.W_x, layer.W_h, layer.b])
        params.extend([self.head.W_hy, self.head.b_y])
        return params

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def range_scaler(self) -> RangeScaler:
        if self.scaler is None:
            raise ValueError("model has no scaler; fit it through LstmRegressor or set .scaler")
        return RangeScaler.from_range(*self.scaler)

    def copy(self) -> "LstmModel":
        return copy.deepcopy(self)


def init_model(config: ModelConfig, n_inputs: int = 1) -> LstmModel:
    """Uniform ``±1/sqrt(cells)`` weights, forget-gate bias 1, seeded by config."""
    rng = np.random.default_rng(config.seed)
    H = config.cells
    bound = 1.0 / math.sqrt(H)
    layers = []
    for k in range(config.hidden_layers):
        n_in = n_inputs if k == 0 else H
        W_x = rng.uniform(-bound, bound, size=(n_in, 4 * H))
        W_h = rng.uniform(-bound, bound, size=(H, 4 * H))
        b = np.zeros(4 * H)
        b[:H] = 1.0
        layers.append(LstmCellParams(W_x, W_h, b))
    head = OutputHead(rng.uniform(-bound, bound, size=(H, 1)), np.zeros(1))
    return LstmModel(config, layers, head)


def model_from_catalog(name: str, seed: int = 0, **overrides) -> LstmModel:
    """Freshly initialised model for a catalog entry."""
    return init_model(catalog_config(name, seed=seed, **overrides))


def zero_model(config: ModelConfig) -> LstmModel:
    model = init_model(config)
    for p in model.parameters():
        p[...] = 0.0
    return model


def cell_forward(params: LstmCellParams, x, prev: LstmState) -> LstmState:
    """One LSTM step. ``x`` may be a vector or a ``(batch, n_in)`` matrix."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.n_inputs or prev.h.shape[-1] != params.cells or prev.c.shape[-1] != params.cells:
        raise ShapeError(
            f"input of width {x.shape[-1]} / state of width {prev.h.shape[-1]} "
            f"does not fit a {params.n_inputs}->{params.cells} cell"
        )
    return _step(params, x, prev.h, prev.c)[0]


def _step(params: LstmCellParams, x, h_prev, c_prev):
    H = params.cells
    z = x @ params.W_x + h_prev @ params.W_h + params.b
    f = sigmoid(z[..., :H])
    i = sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return LstmState(h, c), (f, i, g, o, tc)


def _forward(model: LstmModel, Xn: np.ndarray, masks: list[np.ndarray] | None = None):
    """Batched forward pass over ``(batch, window)`` normalised inputs.

    ``masks[k]`` (if given) multiplies layer ``k``'s hidden sequence before it
    reaches layer ``k + 1``.
    """
    B, T = Xn.shape
    inputs = Xn[:, :, None]
    cache = []
    for k, layer in enumerate(model.layers):
        H = layer.cells
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        hs = np.empty((B, T, H))
        steps = []
        for t in range(T):
            h_prev, c_prev = h, c
            state, gates = _step(layer, inputs[:, t], h_prev, c_prev)
            h, c = state.h, state.c
            hs[:, t] = h
            steps.append((h_prev, c_prev) + gates)
        cache.append((inputs, steps))
        if masks is not None and k < len(model.layers) - 1:
            inputs = hs * masks[k]
        else:
            inputs = hs
    h_top = inputs[:, -1]
    yhat = sigmoid(h_top @ model.head.W_hy + model.head.b_y).reshape(-1)
    return yhat, (cache, h_top, masks)


def _backward(model: LstmModel, cache, yhat: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    layer_cache, h_top, masks = cache
    B = len(y)
    da = ((yhat - y) / B * yhat * (1.0 - yhat))[:, None]  # (B, 1)
    grads_head = [h_top.T @ da, da.sum(axis=0)]
    L = len(model.layers)
    T = layer_cache[0][0].shape[1]
    dH = np.zeros((B, T, model.layers[-1].cells))
    dH[:, -1] = da @ model.head.W_hy.T
    grads_layers: list[list[np.ndarray]] = [None] * L  # type: ignore[list-item]
    for k in range(L - 1, -1, -1):
        layer = model.layers[k]
        inputs, steps = layer_cache[k]
        H = layer.cells
        dW_x = np.zeros_like(layer.W_x)
        dW_h = np.zeros_like(layer.W_h)
        db = np.zeros_like(layer.b)
        dinputs = np.zeros_like(inputs)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            h_prev, c_prev, f, i, g, o, tc = steps[t]
            dh = dH[:, t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            dz = np.concatenate(
                [
                    dc * c_prev * f * (1.0 - f),
                    dc * g * i * (1.0 - i),
                    dc * i * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dc_next = dc * f
            x_t = inputs[:, t]
            dW_x += x_t.T @ dz
            dW_h += h_prev.T @ dz
            db += dz.sum(axis=0)
            dinputs[:, t] = dz @ layer.W_x.T
            dh_next = dz @ layer.W_h.T
        grads_layers[k] = [dW_x, dW_h, db]
        if k > 0:
            dH = dinputs
            if masks is not None:
                dH = dH * masks[k - 1]
    grads = []
    for gl in grads_layers:
        grads.extend(gl)
    grads.extend(grads_head)
    return grads


def loss_and_gradients(
    model: LstmModel, Xn, yn, masks: list[np.ndarray] | None = None
) -> tuple[float, list[np.ndarray]]:
    """Batch loss ``mean(0.5 * (y - yhat)**2)`` and its gradients.

    Gradients are ordered like :meth:`LstmModel.parameters`.
    """
    Xn = np.asarray(Xn, dtype=float)
    yn = np.asarray(yn, dtype=float).reshape(-1)
    yhat, cache = _forward(model, Xn, masks)
    loss = float(np.mean(0.5 * (yn - yhat) ** 2))
    return loss, _backward(model, cache, yhat, yn)


def batch_loss(model: LstmModel, Xn, yn) -> float:
    yhat, _ = _forward(model, np.asarray(Xn, dtype=float))
    return float(np.mean(0.5 * (np.asarray(yn, dtype=float).reshape(-1) - yhat) ** 2))


def predict_normalized(model: LstmModel, Xn) -> np.ndarray:
    """Inference (no dropout) on a ``(batch, window)`` array of scaled inputs."""
    Xn = np.atleast_2d(np.asarray(Xn, dtype=float))
    if Xn.shape[1] != model.config.window:
        raise ShapeError(f"expected windows of length {model.config.window}, got {Xn.shape[1]}")
    return _forward(model, Xn)[0]


def forward_sequence(model: LstmModel, window: Sequence[float]) -> float:
    """Predicted next (normalised) value for one window."""
    w = np.asarray(window, dtype=float).reshape(-1)
    if w.size != model.config.window:
        raise ShapeError(f"expected a window of length {model.config.window}, got {w.size}")
    return float(predict_normalized(model, w[None, :])[0])


class Adam:
    def __init__(self, params: list[np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _as_arrays(windows) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(windows, tuple) and len(windows) == 2 and isinstance(windows[0], np.ndarray):
        X, y = windows
    else:
        pairs = list(windows)
        if not pairs:
            raise ValueError("training set is empty")
        X = np.array([np.asarray(w, dtype=float) for w, _ in pairs])
        y = np.array([float(t) for _, t in pairs])
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(y) == 0:
        raise ValueError("training set is empty")
    return X, y


def train(
    model: LstmModel,
    windows: Iterable[tuple[Sequence[float], float]] | tuple[np.ndarray, np.ndarray],
    config: ModelConfig | None = None,
) -> tuple[LstmModel, list[float]]:
    """Fit a copy of ``model`` on normalised ``(window, target)`` pairs.

    Returns the trained copy and the mean training loss of each epoch.
    Dropout (inverted) is applied between stacked layers only while
    training. Raises :class:`TrainingError` when the loss becomes NaN.
    """
    config = config or model.config
    X, y = _as_arrays(windows)
    if X.shape[1] != config.window:
        raise ShapeError(f"expected windows of length {config.window}, got {X.shape[1]}")
    model = model.copy()
    model.config = config
    rng = np.random.default_rng([config.seed, 1])
    opt = Adam(model.parameters(), config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    n = len(y)
    keep = 1.0 - config.dropout_ratio
    losses: list[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            masks = None
            if config.dropout_ratio > 0 and len(model.layers) > 1:
                masks = [
                    (rng.random((len(idx), config.window, layer.cells)) < keep) / keep
                    for layer in model.layers[:-1]
                ]
            loss, grads = loss_and_gradients(model, X[idx], y[idx], masks)
            if not math.isfinite(loss):
                raise TrainingError(f"loss became {loss} in epoch {epoch}", epoch=epoch)
            opt.step(grads)
            total += loss * len(idx)
        losses.append(total / n)
        _LOG.debug("%s epoch %d loss %.6g", config.name, epoch, losses[-1])
    model.loss_curve = list(losses)
    return model, losses


def circular_mean(degrees) -> float:
    rad = np.radians(np.asarray(degrees, dtype=float).reshape(-1))
    return float(np.degrees(np.arctan2(np.sin(rad).mean(), np.cos(rad).mean())))


def align_degrees(seqs: np.ndarray, center: float) -> np.ndarray:
    """Unwrap bearing rows and shift each by whole turns so its mean lies near ``center``."""
    seqs = np.atleast_2d(np.asarray(seqs, dtype=float))
    out = np.vstack([unwrap_degrees(row) for row in seqs]) if seqs.size else seqs.copy()
    turns = np.round((center - out.mean(axis=1)) / 360.0)
    return out + 360.0 * turns[:, None]


def forecast(model: LstmModel, history, steps: int) -> np.ndarray:
    """Autoregressive forecast in original units.

    ``history`` is ``(batch, >= window)``; only its last ``window`` columns
    seed the recursion. Each round predicts one value, drops the oldest
    window entry and appends the prediction. Returns ``(batch, steps)``.
    Bearing forecasts stay unwrapped (not reduced modulo 360).
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    w = model.config.window
    hist = np.atleast_2d(np.asarray(history, dtype=float))
    if hist.shape[1] < w:
        raise ShapeError(f"need at least {w} observed values, got {hist.shape[1]}")
    scaler = model.range_scaler()
    if model.feature is Feature.DEGREE:
        hist = align_degrees(hist, 0.5 * (model.scaler[0] + model.scaler[1]))
    win = scaler.transform(hist[:, -w:])
    out = np.empty((hist.shape[0], steps))
    for s in range(steps):
        yn = _forward(model, win)[0]
        out[:, s] = scaler.inverse_transform(yn)
        win = np.column_stack([win[:, 1:], yn])
    if scaler.n_clipped_:
        _LOG.debug("clipped %d observed values outside the scaler range", scaler.n_clipped_)
    return out


def _model_of(m) -> LstmModel:
    return m.model_ if isinstance(m, LstmRegressor) else m


def rollout(
    model_speed: "LstmModel | LstmRegressor",
    model_degree: "LstmModel | LstmRegressor",
    observed: Sequence[VelocityVector | Sequence[float]],
    steps: int,
) -> list[VelocityVector]:
    """Predict the next ``steps`` velocity vectors from an observed sequence."""
    ms, md = _model_of(model_speed), _model_of(model_degree)
    need = max(ms.config.window, md.config.window)
    if len(observed) < need:
        raise ValueError(f"observed sequence of length {len(observed)} is shorter than the window {need}")
    obs = np.array([(v[0], v[1]) for v in observed], dtype=float)
    speeds = np.maximum(forecast(ms, obs[None, :, 0], steps)[0], 0.0)
    degrees = normalize_degrees(forecast(md, obs[None, :, 1], steps)[0])
    return [
        VelocityVector(float(s), float(d) if s > STATIONARY_EPS else 0.0, bool(s <= STATIONARY_EPS))
        for s, d in zip(speeds, np.atleast_1d(degrees))
    ]


@dataclass
class MseReport:
    object_class: ObjectClass
    speed_model: str
    degree_model: str
    speed_mse: float
    degree_mse: float
    n_trajectories: int
    n_skipped: int

    def rows(self) -> list[tuple[str, str, float]]:
        """Rows shaped like ``(target dataset, model name, test MSE)``."""
        label = self.object_class.label
        return [
            (f"{label} speed", self.speed_model, self.speed_mse),
            (f"{label} degree", self.degree_model, self.degree_mse),
        ]


def evaluate_trajectory_mse(
    model_speed: "LstmModel | LstmRegressor",
    model_degree: "LstmModel | LstmRegressor",
    scenes: Sequence[Scene],
    object_class: ObjectClass | str,
    preceding_fraction: float = 2.0 / 3.0,
) -> MseReport:
    """Trajectory-level test error of a speed/degree model pair.

    Each velocity sequence is cut into a preceding part (at least one
    window long) and the remainder; the remainder is forecast from the
    preceding part alone and compared with the observations in scaled
    units. Bearing errors are taken on the circle before scaling. The
    per-trajectory MSEs are averaged.
    """
    ms, md = _model_of(model_speed), _model_of(model_degree)
    object_class = ObjectClass(object_class)
    w = max(ms.config.window, md.config.window)
    sp_scale, dg_scale = ms.range_scaler(), md.range_scaler()
    per_speed, per_degree = [], []
    skipped = 0
    for scene in scenes:
        traj = scene.trajectory(object_class)
        speeds = feature_series(traj, Feature.SPEED)
        degrees = feature_series(traj, Feature.DEGREE)
        n = len(speeds)
        n_pre = max(w, int(math.floor(preceding_fraction * n)))
        n_post = n - n_pre
        if n_post < 1:
            skipped += 1
            continue
        ps = forecast(ms, speeds[None, :n_pre], n_post)[0]
        pd = forecast(md, degrees[None, :n_pre], n_post)[0]
        es = sp_scale.transform(ps) - sp_scale.transform(speeds[n_pre:])
        ed = (np.mod(pd - degrees[n_pre:] + 180.0, 360.0) - 180.0) / dg_scale.span
        per_speed.append(float(np.mean(es ** 2)))
        per_degree.append(float(np.mean(ed ** 2)))
    if skipped:
        _LOG.warning("%d %s trajectories too short for trajectory-level MSE", skipped, object_class.value)
    nan = float("nan")
    return MseReport(
        object_class,
        ms.config.name,
        md.config.name,
        float(np.mean(per_speed)) if per_speed else nan,
        float(np.mean(per_degree)) if per_degree else nan,
        len(per_speed),
        skipped,
    )


class LstmRegressor(RegressorMixin, BaseEstimator):
    """Scikit-learn wrapper around one stacked-LSTM network.

    ``X`` rows are windows of raw values (speeds, or unwrapped bearings when
    ``feature='degree'``) and ``y`` the following value. The min-max scaler
    is fitted on the training windows and stored with the model.

    Parameters left as ``None`` fall back to the catalog entry ``name``.
    """

    def __init__(
        self,
        name: str = "Deep-TP-3-10",
        feature: str = "speed",
        hidden_layers: int | None = None,
        cells: int | None = None,
        dropout: float = 0.2,
        window: int = 3,
        epochs: int = 80,
        learning_rate: float = 1e-3,
        batch_size: int = 32,
        seed: int = 0,
    ):
        self.name = name
        self.feature = feature
        self.hidden_layers = hidden_layers
        self.cells = cells
        self.dropout = dropout
        self.window = window
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed

    def _config(self) -> ModelConfig:
        base = catalog_config(self.name, seed=self.seed) if self.name in CATALOG or self.name in _ALIASES else ModelConfig(name=self.name, seed=self.seed)
        return replace(
            base,
            hidden_layers=self.hidden_layers or base.hidden_layers,
            cells=self.cells or base.cells,
            dropout_ratio=self.dropout,
            window=self.window,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
        )

    def fit(self, X, y, object_class: str | None = None):
        X, y = check_X_y(X, y, y_numeric=True)
        if X.shape[1] != self.window:
            raise ShapeError(f"expected windows of length {self.window}, got {X.shape[1]}")
        feature = Feature(self.feature)
        if feature is Feature.DEGREE:
            rows = np.column_stack([X, y])
            full = align_degrees(rows, circular_mean(rows))
            X, y = full[:, :-1], full[:, -1]
        scaler = RangeScaler(clip=False).fit(X, y)
        config = self._config()
        model = init_model(config)
        model.scaler = (scaler.data_min_, scaler.data_max_)
        model.feature = feature
        model.object_class = ObjectClass(object_class) if object_class else None
        self.model_, self.loss_curve_ = train(model, (scaler.transform(X), scaler.transform(y)), config)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return forecast(self.model_, X, 1)[:, 0]

    def forecast(self, history, steps: int) -> np.ndarray:
        check_is_fitted(self, "model_")
        return forecast(self.model_, history, steps)

    @classmethod
    def from_model(cls, model: LstmModel) -> "LstmRegressor":
        c = model.config
        est = cls(
            name=c.name, feature=model.feature.value, hidden_layers=c.hidden_layers, cells=c.cells,
            dropout=c.dropout_ratio, window=c.window, epochs=c.epochs,
            learning_rate=c.learning_rate, batch_size=c.batch_size, seed=c.seed,
        )
        est.model_ = model
        est.loss_curve_ = list(model.loss_curve)
        est.n_features_in_ = c.window
        return est


# -- checkpoints -------------------------------------------------------------

def model_to_dict(model: LstmModel) -> dict:
    layers = []
    for layer in model.layers:
        entry = {}
        for g in _GATES:
            entry[f"W_x{g}"] = layer.gate("x", g).tolist()
            entry[f"W_h{g}"] = layer.gate("h", g).tolist()
        for g in _GATES:
            entry[f"b_{g}"] = layer.gate("b", g).tolist()
        layers.append(entry)
    return {
        "version": CHECKPOINT_VERSION,
        "feature": model.feature.value,
        "object_class": model.object_class.value if model.object_class else None,
        "config": asdict(model.config),
        "scaler": None if model.scaler is None else {"min": model.scaler[0], "max": model.scaler[1]},
        "layers": layers,
        "head": {"W_hy": model.head.W_hy.tolist(), "b_y": float(model.head.b_y[0])},
        "loss_curve": list(model.loss_curve),
    }


def model_from_dict(data: dict) -> LstmModel:
    if data.get("version") != CHECKPOINT_VERSION:
        raise ArtifactError(f"model checkpoint version {data.get('version')!r}, expected {CHECKPOINT_VERSION!r}")
    config = ModelConfig(**data["config"])
    layers = [LstmCellParams.from_gates(**{k: np.array(v, dtype=float) for k, v in entry.items()}) for entry in data["layers"]]
    if len(layers) != config.hidden_layers:
        raise ArtifactError(f"checkpoint has {len(layers)} layers, config says {config.hidden_layers}")
    head = OutputHead(np.array(data["head"]["W_hy"], dtype=float).reshape(-1, 1), np.array([data["head"]["b_y"]], dtype=float))
    sc = data.get("scaler")
    return LstmModel(
        config,
        layers,
        head,
        None if sc is None else (float(sc["min"]), float(sc["max"])),
        Feature(data.get("feature", "speed")),
        ObjectClass(data["object_class"]) if data.get("object_class") else None,
        list(data.get("loss_curve", [])),
    )
