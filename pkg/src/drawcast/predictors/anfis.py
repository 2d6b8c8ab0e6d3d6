"""Sugeno fuzzy inference trained by the hybrid least-squares/gradient loop.

A rule base holds ``R`` rules over ``d`` inputs.  Rule ``r`` carries one
Gaussian-bell membership function per input,

    mu(x) = exp( -( ((x - c) / a)^2 )^b )

with width ``a``, shape ``b`` and centre ``c``, plus an affine consequent
``f_r(x) = q_r . x + q0_r``.  Evaluation multiplies the per-input
memberships into a firing strength per rule, normalises the strengths to
sum 1, and outputs the strength-weighted sum of the consequents.  The
normalisation is computed in the log domain throughout, so products of
many small memberships cannot underflow the weights.

Training alternates two sub-steps per epoch: the consequents are refit
globally by least squares (the output is linear in them once the premises
are fixed), then the premise parameters take one gradient step on the
training MSE, with the step retried once at half the learning rate if it
makes things worse.

Rule bases are initialised from cluster centres; both subtractive
(potential-field) clustering and fuzzy c-means are provided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

B_MIN, B_MAX = 0.5, 5.0
A_FLOOR = 1e-6
LS_RCOND = 1e-10


class AnfisError(ValueError):
    """Invalid rule base or training inputs."""


@dataclass
class FuzzyRuleBase:
    """Premise parameters and affine consequents for R rules over d inputs.

    ``a``, ``b``, ``c`` have shape (R, d); ``coeffs`` has shape (R, d + 1)
    with the bias last.  Every (rule, input) pair owns an independent
    (a, b, c) triple.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.c = np.asarray(self.c, dtype=np.float64)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.a.ndim != 2:
            raise AnfisError("premise arrays must be 2-d (rules x inputs)")
        if not (self.a.shape == self.b.shape == self.c.shape):
            raise AnfisError("a, b, c must share one shape")
        r, d = self.a.shape
        if r < 1 or d < 1:
            raise AnfisError("need at least one rule and one input")
        if self.coeffs.shape != (r, d + 1):
            raise AnfisError("coeffs must have shape (rules, inputs + 1)")
        if np.any(self.a <= 0):
            raise AnfisError("membership widths must be positive")
        if np.any(self.b <= 0):
            raise AnfisError("membership shapes must be positive")

    @property
    def n_rules(self) -> int:
        return int(self.a.shape[0])

    @property
    def n_inputs(self) -> int:
        return int(self.a.shape[1])

    def copy(self) -> "FuzzyRuleBase":
        return FuzzyRuleBase(self.a.copy(), self.b.copy(), self.c.copy(), self.coeffs.copy())


@dataclass
class EvalTrace:
    """Layer-by-layer record of one evaluation."""

    memberships: np.ndarray   # (R, d), each in (0, 1]
    firing: np.ndarray        # (R,), raw products (may underflow to 0)
    normalized: np.ndarray    # (R,), sums to 1
    rule_outputs: np.ndarray  # (R,), affine consequents at x
    output: float


# ---------------------------------------------------------------------------
# clustering initialisers
# ---------------------------------------------------------------------------


def subtractive_clusters(
    X: np.ndarray,
    radius: float = 0.5,
    accept: float = 0.5,
    reject: float = 0.15,
    squash: float = 1.25,
) -> np.ndarray:
    """Potential-field cluster centres in original units.

    Data is min-max normalised to the unit hypercube; each point gets a
    potential from its neighbours within ``radius``, the highest-potential
    point becomes a centre, and its neighbourhood's potential is subtracted.
    Selection stops when the best remaining potential falls below
    ``reject`` of the first; candidates between the accept and reject
    ratios are kept only if far enough from existing centres.
    """
    X = _check_data(X)
    if radius <= 0:
        raise AnfisError("radius must be positive")
    if not 0.0 < reject < accept <= 1.0:
        raise AnfisError("need 0 < reject < accept <= 1")
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    Z = (X - lo) / span
    n = Z.shape[0]
    alpha = 4.0 / radius**2
    beta = 4.0 / (squash * radius) ** 2
    sq = np.einsum("ij,ij->i", Z, Z)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T)
    np.maximum(d2, 0.0, out=d2)
    potential = np.exp(-alpha * d2).sum(axis=1)

    centers: list[np.ndarray] = []
    center_idx: list[int] = []
    first_peak: float | None = None
    for _ in range(n):
        k = int(np.argmax(potential))
        peak = float(potential[k])
        if first_peak is None:
            first_peak = peak
            accepted = True
        else:
            ratio = peak / first_peak
            if ratio >= accept:
                accepted = True
            elif ratio < reject:
                break
            else:
                dmin = min(float(np.linalg.norm(Z[k] - Z[j])) for j in center_idx)
                accepted = dmin / radius + ratio >= 1.0
        if accepted:
            centers.append(X[k].copy())
            center_idx.append(k)
            potential = potential - peak * np.exp(-beta * d2[k])
        else:
            potential[k] = 0.0
    return np.array(centers)


def fcm_clusters(
    X: np.ndarray,
    c: int = 2,
    exponent: float = 2.0,
    tol: float = 1e-6,
    max_iter: int = 300,
    seed: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Fuzzy c-means: returns ``(centers (c, d), memberships (n, c))``.

    Memberships are initialised from the seeded generator and each row sums
    to 1 throughout.  Iteration stops when no centre moves more than
    ``tol``.  ``c = 1`` degenerates to the data mean with full membership.
    """
    X = _check_data(X)
    n = X.shape[0]
    if not 1 <= c <= n:
        raise AnfisError(f"cluster count must lie in [1, {n}]")
    if exponent <= 1.0:
        raise AnfisError("fuzziness exponent must exceed 1")
    rng = np.random.default_rng(seed)
    U = rng.random((n, c))
    U /= U.sum(axis=1, keepdims=True)
    centers = np.zeros((c, X.shape[1]))
    for _ in range(max_iter):
        W = U**exponent
        new_centers = (W.T @ X) / W.sum(axis=0)[:, None]
        d2 = np.maximum(
            np.einsum("ij,ij->i", X, X)[:, None]
            + np.einsum("kj,kj->k", new_centers, new_centers)[None, :]
            - 2.0 * X @ new_centers.T,
            0.0,
        )
        exact = d2 <= 0.0
        inv = np.where(exact, 1.0, d2) ** (-1.0 / (exponent - 1.0))
        U = inv / inv.sum(axis=1, keepdims=True)
        # a point sitting on a centre belongs there outright
        hit = exact.any(axis=1)
        if np.any(hit):
            U[hit] = exact[hit] / exact[hit].sum(axis=1, keepdims=True)
        moved = float(np.abs(new_centers - centers).max())
        centers = new_centers
        if moved < tol:
            break
    return centers, U


def _check_data(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise AnfisError("data must be a non-empty 2-d array")
    if not np.all(np.isfinite(X)):
        raise AnfisError("data must be finite")
    return X


def anfis_init(centers: np.ndarray, X: np.ndarray, b_init: float = 1.0) -> FuzzyRuleBase:
    """One rule per cluster centre, widths from per-column data spread.

    Every rule starts with ``a`` equal to the per-input standard deviation
    (floored to keep widths positive), shape ``b_init`` everywhere, centres
    at the cluster centres and zero consequents.
    """
    centers = np.asarray(centers, dtype=np.float64)
    X = _check_data(X)
    if centers.ndim != 2 or centers.shape[1] != X.shape[1]:
        raise AnfisError("centers must be (rules, inputs) matching the data")
    if centers.shape[0] < 1:
        raise AnfisError("need at least one centre")
    sd = X.std(axis=0)
    a = np.tile(np.maximum(sd, A_FLOOR), (centers.shape[0], 1))
    b = np.full_like(a, float(b_init))
    coeffs = np.zeros((centers.shape[0], X.shape[1] + 1))
    return FuzzyRuleBase(a, b, centers.copy(), coeffs)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _log_memberships(fis: FuzzyRuleBase, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(t, log_mu)`` with shapes (n, R, d); ``t = ((x-c)/a)^2``."""
    t = ((X[:, None, :] - fis.c[None]) / fis.a[None]) ** 2
    log_mu = -(t**fis.b[None])
    return t, log_mu


def _forward(
    fis: FuzzyRuleBase, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batch forward pass: ``(t, log_mu, log_w, wbar, rule_out)``."""
    if not np.all(np.isfinite(X)):
        raise AnfisError("no rule fires: non-finite input")
    t, log_mu = _log_memberships(fis, X)
    log_w = log_mu.sum(axis=2)                  # (n, R)
    shift = log_w.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(shift)):
        raise AnfisError("no rule fires: all memberships vanished")
    w = np.exp(log_w - shift)
    wbar = w / w.sum(axis=1, keepdims=True)
    rule_out = X @ fis.coeffs[:, :-1].T + fis.coeffs[:, -1][None, :]
    return t, log_mu, log_w, wbar, rule_out


def anfis_eval_batch(fis: FuzzyRuleBase, X: np.ndarray) -> np.ndarray:
    """Model output for every row of ``X``."""
    X = _check_eval_input(fis, X)
    _, _, _, wbar, rule_out = _forward(fis, X)
    return np.einsum("nr,nr->n", wbar, rule_out)


def anfis_eval(fis: FuzzyRuleBase, x: np.ndarray) -> tuple[float, EvalTrace]:
    """Evaluate one input vector, returning the output and the layer trace."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (fis.n_inputs,):
        raise AnfisError(f"input must have shape ({fis.n_inputs},)")
    X = x[None, :]
    _check_eval_input(fis, X)
    _, log_mu, log_w, wbar, rule_out = _forward(fis, X)
    trace = EvalTrace(
        memberships=np.exp(log_mu[0]),
        firing=np.exp(log_w[0]),
        normalized=wbar[0],
        rule_outputs=rule_out[0],
        output=float(wbar[0] @ rule_out[0]),
    )
    return trace.output, trace


def _check_eval_input(fis: FuzzyRuleBase, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != fis.n_inputs:
        raise AnfisError(f"X must be 2-d with {fis.n_inputs} columns")
    return X


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def anfis_ls_consequents(
    fis: FuzzyRuleBase, X: np.ndarray, y: np.ndarray
) -> tuple[FuzzyRuleBase, bool]:
    """Globally optimal consequents for fixed premises, by least squares.

    Row ``j`` of the design matrix concatenates, rule by rule,
    ``wbar_r(x_j) * [x_j, 1]``.  Singular values below ``1e-10`` of the
    largest are treated as zero, giving the minimum-norm solution on
    rank-deficient systems; the returned flag is True when that happened.
    """
    X, y = _check_training(fis, X, y)
    _, _, _, wbar, _ = _forward(fis, X)
    n, d = X.shape
    r = fis.n_rules
    ext = np.concatenate([X, np.ones((n, 1))], axis=1)          # (n, d+1)
    design = (wbar[:, :, None] * ext[:, None, :]).reshape(n, r * (d + 1))
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=LS_RCOND)
    deficient = rank < r * (d + 1)
    out = fis.copy()
    out.coeffs = beta.reshape(r, d + 1)
    return out, bool(deficient)


def anfis_premise_gradient(
    fis: FuzzyRuleBase, X: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient of the training MSE w.r.t. ``(a, b, c)``, each (R, d).

    With ``s_r = log w_r`` and output ``o = sum_r wbar_r f_r``, the chain is
    ``do/ds_r = wbar_r (f_r - o)`` and, per input, with ``t = ((x-c)/a)^2``:

        d log mu / da =  2 b t^b / a
        d log mu / db = -t^b log t            (0 at t = 0)
        d log mu / dc =  2 b sign(x - c) t^(b - 1/2) / a
    """
    X, y = _check_training(fis, X, y)
    t, _, _, wbar, rule_out = _forward(fis, X)
    n = X.shape[0]
    out = np.einsum("nr,nr->n", wbar, rule_out)
    # (n, R): dMSE/ds_r per sample, including the 2/n error factor
    dl_ds = (2.0 / n) * (out - y)[:, None] * wbar * (rule_out - out[:, None])

    a, b, c = fis.a[None], fis.b[None], fis.c[None]
    tb = t**b
    diff = X[:, None, :] - c
    d_da = 2.0 * b * tb / a
    with np.errstate(divide="ignore", invalid="ignore"):
        d_db = np.where(t > 0.0, -tb * np.log(np.where(t > 0.0, t, 1.0)), 0.0)
    d_dc = 2.0 * b * np.sign(diff) * t ** (b - 0.5) / a

    g_a = np.einsum("nr,nrd->rd", dl_ds, d_da)
    g_b = np.einsum("nr,nrd->rd", dl_ds, d_db)
    g_c = np.einsum("nr,nrd->rd", dl_ds, d_dc)
    return g_a, g_b, g_c


def anfis_train_hybrid(
    fis: FuzzyRuleBase,
    X: np.ndarray,
    y: np.ndarray,
    epochs: int = 10,
    learning_rate: float = 0.01,
) -> tuple[FuzzyRuleBase, list[float]]:
    """Alternate LS consequent refits with single premise gradient steps.

    Each epoch first refits the consequents (which can only lower the
    training MSE), then takes one gradient step on the premises.  A step
    that raises the MSE is retried once at half the learning rate from the
    pre-step premises; if still worse the premises revert and the halved
    rate sticks.  Returns the trained rule base and the per-epoch MSE after
    each epoch's LS refit.
    """
    X, y = _check_training(fis, X, y)
    if epochs < 1:
        raise AnfisError("epochs must be at least 1")
    if learning_rate <= 0:
        raise AnfisError("learning rate must be positive")
    lr = float(learning_rate)
    current = fis.copy()
    history: list[float] = []
    for _ in range(epochs):
        current, _ = anfis_ls_consequents(current, X, y)
        mse_ls = _mse(current, X, y)
        history.append(mse_ls)
        grads = anfis_premise_gradient(current, X, y)
        stepped = _premise_step(current, grads, lr)
        if _mse(stepped, X, y) <= mse_ls:
            current = stepped
            continue
        lr *= 0.5
        stepped = _premise_step(current, grads, lr)
        if _mse(stepped, X, y) <= mse_ls:
            current = stepped
        # else keep the pre-step premises and the reduced rate
    current, _ = anfis_ls_consequents(current, X, y)
    history.append(_mse(current, X, y))
    return current, history


def _premise_step(
    fis: FuzzyRuleBase, grads: tuple[np.ndarray, np.ndarray, np.ndarray], lr: float
) -> FuzzyRuleBase:
    g_a, g_b, g_c = grads
    out = fis.copy()
    out.a = np.maximum(fis.a - lr * g_a, A_FLOOR)
    out.b = np.clip(fis.b - lr * g_b, B_MIN, B_MAX)
    out.c = fis.c - lr * g_c
    return out


def _mse(fis: FuzzyRuleBase, X: np.ndarray, y: np.ndarray) -> float:
    err = anfis_eval_batch(fis, X) - y
    return float(err @ err / err.size)


def _check_training(
    fis: FuzzyRuleBase, X: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    X = _check_eval_input(fis, X)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise AnfisError("y length must match X rows")
    if X.shape[0] < 1:
        raise AnfisError("need at least one training row")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise AnfisError("training data must be finite")
    return X, y
