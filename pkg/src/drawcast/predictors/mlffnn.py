"""One-hidden-layer feed-forward regressor (sigmoid hidden, linear output).

Two batch trainers are supported and nothing else: plain gradient descent
(``"gd"``) and Levenberg-Marquardt (``"lm"``).  Inputs and target are
z-scored with constants computed from the training rows and stored on the
model, so predictions come back in original units.  Training stops early
once the epoch-over-epoch MSE improvement stays below ``1e-8`` for 10
consecutive epochs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRAIN_METHODS = ("gd", "lm")
EARLY_STOP_DELTA = 1e-8
EARLY_STOP_PATIENCE = 10


class MlffnnError(ValueError):
    """Invalid network inputs or a diverged training run."""


@dataclass
class MlffnnModel:
    """Weights plus the z-score constants baked in at training time."""

    w1: np.ndarray      # (hidden, d)
    b1: np.ndarray      # (hidden,)
    w2: np.ndarray      # (hidden,)
    b2: float
    x_mean: np.ndarray  # (d,)
    x_sd: np.ndarray    # (d,), floored where constant
    y_mean: float
    y_sd: float

    def __post_init__(self) -> None:
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.x_mean = np.asarray(self.x_mean, dtype=np.float64)
        self.x_sd = np.asarray(self.x_sd, dtype=np.float64)
        h, d = self.w1.shape
        if self.b1.shape != (h,) or self.w2.shape != (h,):
            raise MlffnnError("hidden-layer shapes disagree")
        if self.x_mean.shape != (d,) or self.x_sd.shape != (d,):
            raise MlffnnError("normalisation constants must match input width")
        if np.any(self.x_sd <= 0) or self.y_sd <= 0:
            raise MlffnnError("normalisation scales must be positive")

    @property
    def hidden(self) -> int:
        return int(self.w1.shape[0])

    @property
    def n_inputs(self) -> int:
        return int(self.w1.shape[1])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _normalise(model: MlffnnModel, X: np.ndarray) -> np.ndarray:
    return (X - model.x_mean) / model.x_sd


def _hidden(model: MlffnnModel, Z: np.ndarray) -> np.ndarray:
    return _sigmoid(Z @ model.w1.T + model.b1)


def mlffnn_predict(model: MlffnnModel, X: np.ndarray) -> np.ndarray:
    """Network output in original units for each row of ``X``."""
    X = _check_x(model, X)
    H = _hidden(model, _normalise(model, X))
    return (H @ model.w2 + model.b2) * model.y_sd + model.y_mean


def mlffnn_gradient(
    model: MlffnnModel, X: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Gradient of the original-unit training MSE w.r.t. ``(w1, b1, w2, b2)``."""
    X, y = _check_xy(model, X, y)
    Z = _normalise(model, X)
    H = _hidden(model, Z)
    t = (y - model.y_mean) / model.y_sd
    e = H @ model.w2 + model.b2 - t
    n = X.shape[0]
    scale = 2.0 * model.y_sd**2 / n  # d(mse_orig)/d(raw residual sums)
    g_b2 = float(scale * e.sum())
    g_w2 = scale * (H.T @ e)
    dz = (e[:, None] * model.w2[None, :]) * H * (1.0 - H)
    g_b1 = scale * dz.sum(axis=0)
    g_w1 = scale * (dz.T @ Z)
    return g_w1, g_b1, g_w2, g_b2


def mlffnn_train(
    X: np.ndarray,
    y: np.ndarray,
    hidden: int = 40,
    method: str = "lm",
    max_epochs: int = 200,
    learning_rate: float = 0.05,
    seed: int | None = None,
) -> tuple[MlffnnModel, list[float]]:
    """Train from scratch; returns the model and per-epoch original-unit MSE.

    ``method`` must be ``"gd"`` (batch gradient descent at a fixed rate) or
    ``"lm"`` (Levenberg-Marquardt with an adaptive damping factor); no
    other variant is implemented.  Requires at least as many rows as hidden
    nodes.  A run whose MSE stops being finite aborts with the last finite
    epoch reported.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise MlffnnError("X must be 2-d with matching y")
    if hidden < 1:
        raise MlffnnError("need at least one hidden node")
    if X.shape[0] < hidden:
        raise MlffnnError(f"need at least {hidden} rows to fit {hidden} hidden nodes")
    if method not in TRAIN_METHODS:
        raise MlffnnError(f"unsupported training variant {method!r}; use one of {TRAIN_METHODS}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise MlffnnError("training data must be finite")

    rng = np.random.default_rng(seed)
    x_mean = X.mean(axis=0)
    x_sd = np.where(X.std(axis=0) > 0, X.std(axis=0), 1.0)
    y_mean = float(y.mean())
    y_sd = float(y.std()) or 1.0
    d = X.shape[1]
    model = MlffnnModel(
        w1=rng.uniform(-0.5, 0.5, (hidden, d)),
        b1=rng.uniform(-0.5, 0.5, hidden),
        w2=rng.uniform(-0.5, 0.5, hidden),
        b2=0.0,
        x_mean=x_mean,
        x_sd=x_sd,
        y_mean=y_mean,
        y_sd=y_sd,
    )
    Z = _normalise(model, X)
    t = (y - y_mean) / y_sd
    if method == "gd":
        history = _train_gd(model, Z, t, max_epochs, learning_rate)
    else:
        history = _train_lm(model, Z, t, max_epochs)
    return model, [m * y_sd**2 for m in history]


def _norm_mse(model: MlffnnModel, Z: np.ndarray, t: np.ndarray) -> float:
    e = _hidden(model, Z) @ model.w2 + model.b2 - t
    return float(e @ e / e.size)


def _train_gd(
    model: MlffnnModel, Z: np.ndarray, t: np.ndarray, max_epochs: int, lr: float
) -> list[float]:
    if lr <= 0:
        raise MlffnnError("learning rate must be positive")
    history: list[float] = []
    n = Z.shape[0]
    for epoch in range(max_epochs):
        H = _hidden(model, Z)
        e = H @ model.w2 + model.b2 - t
        mse = float(e @ e / n)
        if not np.isfinite(mse):
            last = history[-1] if history else float("nan")
            raise MlffnnError(
                f"training diverged at epoch {epoch}; last finite MSE {last!r}"
            )
        history.append(mse)
        if _stalled(history):
            break
        scale = 2.0 / n
        dz = (e[:, None] * model.w2[None, :]) * H * (1.0 - H)
        model.b2 -= lr * scale * float(e.sum())
        model.w2 -= lr * scale * (H.T @ e)
        model.b1 -= lr * scale * dz.sum(axis=0)
        model.w1 -= lr * scale * (dz.T @ Z)
    return history


def _train_lm(
    model: MlffnnModel, Z: np.ndarray, t: np.ndarray, max_epochs: int
) -> list[float]:
    lam = 1e-3
    history = [_norm_mse(model, Z, t)]
    for epoch in range(max_epochs):
        if not np.isfinite(history[-1]):
            raise MlffnnError(
                f"training diverged at epoch {epoch}; last finite MSE "
                f"{next((m for m in reversed(history) if np.isfinite(m)), float('nan'))!r}"
            )
        if _stalled(history):
            break
        J, r = _jacobian(model, Z, t)
        g = J.T @ r
        JtJ = J.T @ J
        improved = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(JtJ + lam * np.eye(JtJ.shape[0]), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = _apply_delta(model, delta)
            mse = _norm_mse(trial, Z, t)
            if np.isfinite(mse) and mse < history[-1]:
                _copy_weights(trial, model)
                history.append(mse)
                lam = max(lam * 0.1, 1e-12)
                improved = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if not improved:
            break
    return history


def _jacobian(model: MlffnnModel, Z: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample residual derivatives, packed (w1, b1, w2, b2)."""
    n, d = Z.shape
    h = model.hidden
    H = _hidden(model, Z)
    r = H @ model.w2 + model.b2 - t
    dH = model.w2[None, :] * H * (1.0 - H)            # (n, h)
    Jw1 = (dH[:, :, None] * Z[:, None, :]).reshape(n, h * d)
    J = np.concatenate([Jw1, dH, H, np.ones((n, 1))], axis=1)
    return J, r


def _apply_delta(model: MlffnnModel, delta: np.ndarray) -> MlffnnModel:
    h, d = model.w1.shape
    k = h * d
    return MlffnnModel(
        w1=model.w1 + delta[:k].reshape(h, d),
        b1=model.b1 + delta[k : k + h],
        w2=model.w2 + delta[k + h : k + 2 * h],
        b2=model.b2 + float(delta[-1]),
        x_mean=model.x_mean,
        x_sd=model.x_sd,
        y_mean=model.y_mean,
        y_sd=model.y_sd,
    )


def _copy_weights(src: MlffnnModel, dst: MlffnnModel) -> None:
    dst.w1 = src.w1
    dst.b1 = src.b1
    dst.w2 = src.w2
    dst.b2 = src.b2


def _stalled(history: list[float]) -> bool:
    if len(history) < EARLY_STOP_PATIENCE + 1:
        return False
    recent = history[-(EARLY_STOP_PATIENCE + 1) :]
    return all(
        prev - cur < EARLY_STOP_DELTA for prev, cur in zip(recent, recent[1:])
    )


def _check_x(model: MlffnnModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise MlffnnError(f"X must be 2-d with {model.n_inputs} columns")
    return X


def _check_xy(model: MlffnnModel, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = _check_x(model, X)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise MlffnnError("y length must match X rows")
    return X, y
