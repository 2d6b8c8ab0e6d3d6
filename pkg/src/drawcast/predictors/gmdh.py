"""Self-organising network of pairwise quadratic neurons.

Each neuron regresses the target on one pair of its layer's inputs through
the full quadratic

    g(u, v) = c0 + c1 u + c2 v + c3 u^2 + c4 v^2 + c5 u v

fitted by least squares on an internal *fit* part of the training rows and
scored by RMSE on a held-aside *selection* part (the external criterion
that stops the network from memorising).  A layer fits every input pair,
ranks candidates by the criterion, and admits those within
``best + pressure * (worst - best)``, at most ``n_keep``; admitted outputs
become the next layer's inputs.  Growth stops when a layer fails to
improve the best criterion, or at ``max_layers``.  The delivered network
keeps only the best neuron's ancestry.

Inputs and target are z-scored inside training (constants kept on the
model, predictions in original units): squaring raw industrial magnitudes
would otherwise push the pair moment matrices past any workable
conditioning.  Stored neuron criteria are original-unit RMSEs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

FIT_FRACTION = 0.7
# column exponents of the quadratic design: 1, u, v, u^2, v^2, uv
_COL_EXP = ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1))


class GmdhError(ValueError):
    """Invalid GMDH inputs or configuration."""


@dataclass
class GmdhNeuron:
    """One quadratic neuron: input pair (previous-layer indices) + 6 coefficients."""

    in1: int
    in2: int
    coeffs: np.ndarray
    criterion: float

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (6,):
            raise GmdhError("neuron needs exactly 6 coefficients")

    def evaluate(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        c = self.coeffs
        return c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * v * v + c[5] * u * v


@dataclass
class GmdhNetwork:
    """Pruned network: layer 1 reads z-scored input columns, later layers the one before.

    Carries the training normalization constants and the growth
    configuration, so a stored network predicts in original units on its
    own.
    """

    n_inputs: int
    layers: list[list[GmdhNeuron]]
    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: float
    y_sd: float
    n_keep: int = 50
    max_layers: int = 7
    pressure: float = 0.6
    criterion_history: list[float] = field(default_factory=list)
    input_names: list[str] | None = None

    def __post_init__(self) -> None:
        if not self.layers or any(not layer for layer in self.layers):
            raise GmdhError("network must contain at least one non-empty layer")
        if len(self.layers[-1]) != 1:
            raise GmdhError("final layer must hold exactly one neuron")
        self.x_mean = np.asarray(self.x_mean, dtype=np.float64)
        self.x_sd = np.asarray(self.x_sd, dtype=np.float64)
        if self.x_mean.shape != (self.n_inputs,) or self.x_sd.shape != (self.n_inputs,):
            raise GmdhError("normalization constants must cover every input column")
        if np.any(self.x_sd <= 0) or self.y_sd <= 0:
            raise GmdhError("normalization scales must be positive")

    @property
    def depth(self) -> int:
        return len(self.layers)


def gmdh_train(
    X: np.ndarray,
    y: np.ndarray,
    n_keep: int = 50,
    max_layers: int = 7,
    pressure: float = 0.6,
    seed: int | None = None,
    shuffle_split: bool = False,
    input_names: list[str] | None = None,
) -> GmdhNetwork:
    """Grow, stop, and prune a GMDH network on training rows.

    The fit/selection re-split of the training rows is chronological (first
    70% fit) by default, making the whole procedure deterministic;
    ``shuffle_split=True`` draws the fit rows with the seeded generator
    instead.  Needs at least two input columns and four rows.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise GmdhError("X must be 2-d with matching y")
    n, d = X.shape
    if d < 2:
        raise GmdhError("need at least two input columns to form pairs")
    if n < 4:
        raise GmdhError("need at least 4 rows for the fit/selection re-split")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise GmdhError("training data must be finite")
    if n_keep < 1:
        raise GmdhError("n_keep must be at least 1")
    if max_layers < 1:
        raise GmdhError("max_layers must be at least 1")
    if not 0.0 <= pressure <= 1.0:
        raise GmdhError("pressure must lie in [0, 1]")
    if input_names is not None and len(input_names) != d:
        raise GmdhError("input_names length must match columns")

    n_fit = min(max(int(round(FIT_FRACTION * n)), 2), n - 1)
    if shuffle_split:
        rng = np.random.default_rng(seed)
        order = rng.permutation(n)
        fit_rows, sel_rows = np.sort(order[:n_fit]), np.sort(order[n_fit:])
    else:
        fit_rows, sel_rows = np.arange(n_fit), np.arange(n_fit, n)

    x_mean = X.mean(axis=0)
    x_sd = X.std(axis=0)
    x_sd = np.where(x_sd > 0, x_sd, 1.0)
    y_mean = float(y.mean())
    y_sd = float(y.std())
    y_sd = y_sd if y_sd > 0 else 1.0
    Z = (X - x_mean) / x_sd
    yn = (y - y_mean) / y_sd

    layers: list[list[GmdhNeuron]] = []
    outputs_prev = None  # admitted-neuron outputs on all rows
    best_so_far = np.inf
    history: list[float] = []
    for _ in range(max_layers):
        src = Z if outputs_prev is None else outputs_prev
        neurons, crits = _fit_layer(src[fit_rows], yn[fit_rows], src[sel_rows], yn[sel_rows])
        layer_best = float(crits[0])
        if layer_best >= best_so_far:
            break
        best_so_far = layer_best
        history.append(layer_best)
        admitted = _admit(neurons, crits, n_keep, pressure)
        layers.append(admitted)
        outputs_prev = np.column_stack(
            [nrn.evaluate(src[:, nrn.in1], src[:, nrn.in2]) for nrn in admitted]
        )
        if len(admitted) < 2:
            break  # a single survivor cannot form a pair
    if not layers:
        raise GmdhError("no layer improved the external criterion")
    pruned = _prune(layers)
    for layer in pruned:  # report criteria in original target units
        for nrn in layer:
            nrn.criterion *= y_sd
    return GmdhNetwork(
        d,
        pruned,
        x_mean,
        x_sd,
        y_mean,
        y_sd,
        n_keep=n_keep,
        max_layers=max_layers,
        pressure=pressure,
        criterion_history=[h * y_sd for h in history],
        input_names=list(input_names) if input_names else None,
    )


def gmdh_predict(net: GmdhNetwork, X: np.ndarray) -> np.ndarray:
    """Evaluate the pruned network on each row of ``X``, in original units."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.n_inputs:
        raise GmdhError(f"X must be 2-d with {net.n_inputs} columns")
    Z = (X - net.x_mean) / net.x_sd
    for layer in net.layers:
        Z = np.column_stack([nrn.evaluate(Z[:, nrn.in1], Z[:, nrn.in2]) for nrn in layer])
    return net.y_mean + net.y_sd * Z[:, 0]


# ---------------------------------------------------------------------------
# layer fitting
# ---------------------------------------------------------------------------


def _fit_layer(
    Zf: np.ndarray, yf: np.ndarray, Zs: np.ndarray, ys: np.ndarray
) -> tuple[list[GmdhNeuron], np.ndarray]:
    """Fit all pairs, score on the selection part, return ranked neurons."""
    k = Zf.shape[1]
    pairs = np.array(list(combinations(range(k), 2)), dtype=np.int64)
    iu, iv = pairs[:, 0], pairs[:, 1]

    # moment matrices Σ u^a v^b over fit rows, for every column pair at once
    P = [np.ones_like(Zf)] + [Zf**p for p in (1, 2, 3, 4)]
    M = {}
    for au in range(5):
        for av in range(5 - au):
            M[(au, av)] = P[au].T @ P[av]
    Ny = {}
    yf_col = yf[:, None]
    for au, av in _COL_EXP:
        Ny[(au, av)] = P[au].T @ (P[av] * yf_col)

    m = len(pairs)
    AtA = np.empty((m, 6, 6))
    Aty = np.empty((m, 6))
    for p, (apu, apv) in enumerate(_COL_EXP):
        Aty[:, p] = Ny[(apu, apv)][iu, iv]
        for q, (aqu, aqv) in enumerate(_COL_EXP):
            AtA[:, p, q] = M[(apu + aqu, apv + aqv)][iu, iv]
    coeffs = np.einsum("mpq,mq->mp", np.linalg.pinv(AtA, rcond=1e-10), Aty)

    u, v = Zs[:, iu], Zs[:, iv]
    pred = (
        coeffs[:, 0]
        + coeffs[:, 1] * u
        + coeffs[:, 2] * v
        + coeffs[:, 3] * u * u
        + coeffs[:, 4] * v * v
        + coeffs[:, 5] * u * v
    )
    crit = np.sqrt(((pred - ys[:, None]) ** 2).mean(axis=0))

    order = np.lexsort((np.arange(m), crit))  # criterion, then pair index
    neurons = [
        GmdhNeuron(int(iu[i]), int(iv[i]), coeffs[i], float(crit[i])) for i in order
    ]
    return neurons, crit[order]


def _admit(
    neurons: list[GmdhNeuron], crits: np.ndarray, n_keep: int, pressure: float
) -> list[GmdhNeuron]:
    best, worst = float(crits[0]), float(crits[-1])
    threshold = best + pressure * (worst - best)
    kept = [nrn for nrn, c in zip(neurons, crits) if c <= threshold]
    return kept[:n_keep]


def _prune(layers: list[list[GmdhNeuron]]) -> list[list[GmdhNeuron]]:
    """Keep only the ancestry of the final best neuron; reindex references."""
    needed: list[set[int]] = [set() for _ in layers]
    needed[-1] = {0}  # layers are criterion-ranked, so index 0 is the layer best
    for li in range(len(layers) - 1, 0, -1):
        for idx in needed[li]:
            nrn = layers[li][idx]
            needed[li - 1].update((nrn.in1, nrn.in2))
    pruned: list[list[GmdhNeuron]] = []
    remap: dict[int, int] = {}
    for li, layer in enumerate(layers):
        keep = sorted(needed[li])
        new_layer = []
        for new_idx, old_idx in enumerate(keep):
            nrn = layer[old_idx]
            if li == 0:
                new_layer.append(GmdhNeuron(nrn.in1, nrn.in2, nrn.coeffs.copy(), nrn.criterion))
            else:
                new_layer.append(
                    GmdhNeuron(remap[nrn.in1], remap[nrn.in2], nrn.coeffs.copy(), nrn.criterion)
                )
        remap = {old: new for new, old in enumerate(keep)}
        pruned.append(new_layer)
    return pruned
