"""Command-line pipeline driver.

Each subcommand reads a flat ``key = value`` config file, writes its
artifacts under an output directory, and records the effective
configuration in ``manifest.json`` next to them.  Stages communicate
only through those artifact files, so any stage can be rerun alone as
long as the stages it depends on have already written their outputs.
Missing upstream artifacts name the subcommand to run first.

The same seed and config always reproduce byte-identical numeric
artifacts; charts are presentation extras and carry no timestamps.

Subcommands, in pipeline order::

    synth        change_log.csv from the synthetic line model
    ingest       aligned.csv from a change log
    features     features.csv with screening scores and the kept sets
    train        model.txt for the configured predictor kind
    evaluate     metrics.csv with train and test MSE / RMSE / R
    flag         reject_mask.csv of out-of-limit predictions
    sample-plan  sampling_report.txt with catch probabilities
    pipeline     all of the above in order
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import fields as dc_fields
from pathlib import Path

import numpy as np

from drawcast.changelog import (
    AlignedFrame,
    ChangeLogError,
    ShiftWindow,
    align_series,
    build_samples,
    clean_counter,
    concat_samples,
    detect_shifts,
    parse_change_log,
    split_samples,
)
from drawcast.features import score_features, select_features
from drawcast.metaheuristics import GaParams, PsoParams, anfis_metaheuristic_train
from drawcast.predictors.anfis import (
    FuzzyRuleBase,
    anfis_eval,
    anfis_eval_batch,
    anfis_init,
    anfis_train_hybrid,
    fcm_clusters,
    subtractive_clusters,
)
from drawcast.predictors.gmdh import GmdhNetwork, gmdh_predict, gmdh_train
from drawcast.predictors.metrics import SpecLimits, evaluate_predictions, flag_substandard
from drawcast.predictors.mlffnn import MlffnnModel, mlffnn_predict, mlffnn_train
from drawcast.predictors.serialize import load_model, save_model
from drawcast.sampling import (
    SamplingError,
    SubstandardDistribution,
    build_report,
    fit_normal,
    period_histogram,
    shift_period_ids,
)
from drawcast.synth import SynthConfig, generate


class ConfigError(ValueError):
    """Malformed config file, unknown key, or invalid flag value."""


class StageError(RuntimeError):
    """A stage cannot run, usually because an upstream artifact is missing."""


MODEL_KINDS = ("mlffnn", "anfis-sc", "anfis-fcm", "anfis-ga", "anfis-pso", "gmdh")
M2_MODES = ("window", "whole-cluster")

# SynthConfig scalars exposed as synth.* keys; tuple-valued fields (planted
# terms, group sizes, shift starts) keep their library defaults under the CLI.
_SYNTH_SCALARS = tuple(
    f.name
    for f in dc_fields(SynthConfig)
    if f.name != "seed" and isinstance(f.default, (bool, int, float, str))
)


def _parse_bool(text: str) -> bool:
    if text in ("true", "false"):
        return text == "true"
    raise ValueError("expected true or false")


def _parse_choice(*allowed: str):
    def parse(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}")
        return text

    return parse


def _known_keys() -> dict[str, tuple]:
    """Key registry: name -> (parser, default).  None marks an unset key."""

    keys: dict[str, tuple] = {
        "seed": (int, 7),
        "threads": (int, 1),
        "grid.step_ms": (int, 2000),
        "input.change_log": (str, None),
        "synth.enable": (_parse_bool, False),
        "columns.counter": (str, "CNT"),
        "columns.hours": (str, "HRS"),
        "columns.target": (str, "PD"),
        "shifts.counter_jump": (float, 2000.0),
        "split.train_fraction": (float, 0.85),
        "split.shuffle": (_parse_bool, False),
        "features.f_lin": (float, 0.30),
        "features.f_nonlin": (float, 0.24),
        "model.kind": (_parse_choice(*MODEL_KINDS), "anfis-fcm"),
        "model.clusters": (int, 4),
        "model.sc_radius": (float, 0.5),
        "model.epochs": (int, 6),
        "model.learning_rate": (float, 0.01),
        "model.hidden": (int, 40),
        "model.train_method": (_parse_choice("lm", "gd"), "lm"),
        "model.max_epochs": (int, 200),
        "model.population": (int, 20),
        "model.iterations": (int, 40),
        "model.perturb_scale": (float, 0.05),
        "model.n_keep": (int, 50),
        "model.max_layers": (int, 7),
        "model.pressure": (float, 0.6),
        "model.shuffle_split": (_parse_bool, False),
        "limits.mu1": (float, 1050.0),
        "limits.sigma1": (float, 4.8),
        "limits.n": (float, 3.2),
        "sampling.j1": (int, 100),
        "sampling.y_s": (int, 43200),
        "sampling.z1": (int, 200),
        "sampling.z2": (int, 200),
        "sampling.n": (float, 2.576),
        "sampling.m2_mode": (_parse_choice(*M2_MODES), "window"),
        "sampling.m1": (int, None),
        "sampling.sigma": (float, None),
        "sampling.mu": (float, None),
    }
    defaults = SynthConfig()
    for name in _SYNTH_SCALARS:
        default = getattr(defaults, name)
        parser = _parse_bool if isinstance(default, bool) else type(default)
        keys[f"synth.{name}"] = (parser, default)
    return keys


def parse_config(path: str | Path) -> dict:
    """Read a flat dotted-key config file into a fully defaulted dict."""

    registry = _known_keys()
    values = {key: default for key, (_, default) in registry.items()}
    seen: set[str] = set()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in registry:
            raise ConfigError(f"{path}:{lineno}: unknown config key '{key}'")
        if key in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate config key '{key}'")
        seen.add(key)
        parser, _ = registry[key]
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {exc}") from exc

    has_input = "input.change_log" in seen
    wants_synth = values["synth.enable"]
    if has_input and wants_synth:
        raise ConfigError("config must set input.change_log or synth.enable, not both")
    if not has_input and not wants_synth:
        raise ConfigError("config must set exactly one of input.change_log or synth.enable")

    for key in ("features.f_lin", "features.f_nonlin", "split.train_fraction"):
        if not 0.0 < values[key] < 1.0:
            raise ConfigError(f"'{key}' must lie in (0, 1), got {values[key]}")
    if values["threads"] < 1:
        raise ConfigError("'threads' must be at least 1")
    return values


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_hash(values: dict) -> str:
    """Hash of the canonical sorted key = value rendering of the config."""

    lines = [f"{key} = {_format_value(values[key])}" for key in sorted(values)]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Artifact files
# ---------------------------------------------------------------------------


def _write_change_log(path: Path, records) -> None:
    with open(path, "w") as fh:
        fh.write("ts_ms,indicator,value\n")
        for ts, name, value in records:
            fh.write(f"{ts},{name},{value!r}\n")


def _read_change_log(path: Path) -> list[tuple[int, str, float]]:
    records = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != "ts_ms,indicator,value":
            raise StageError(f"{path} is not a change log artifact")
        for line in fh:
            ts, name, value = line.rstrip("\n").split(",")
            records.append((int(ts), name, float(value)))
    return records


def _write_aligned(path: Path, frame: AlignedFrame) -> None:
    names = list(frame.columns)
    ts = frame.grid_start_ms + frame.step_ms * np.arange(frame.length, dtype=np.int64)
    cols = [frame.columns[name] for name in names]
    with open(path, "w") as fh:
        fh.write("ts_ms," + ",".join(names) + "\n")
        for i in range(frame.length):
            row = ",".join(repr(float(col[i])) for col in cols)
            fh.write(f"{ts[i]},{row}\n")


def _read_aligned(path: Path) -> AlignedFrame:
    if not path.exists():
        raise StageError("missing aligned.csv; run `ingest` first")
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header[:1] != ["ts_ms"]:
            raise StageError(f"{path} is not an aligned frame artifact")
        names = header[1:]
        ts: list[int] = []
        data: list[list[float]] = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            ts.append(int(parts[0]))
            data.append([float(v) for v in parts[1:]])
    if len(ts) < 2:
        raise StageError(f"{path} holds fewer than two grid rows")
    steps = np.diff(np.asarray(ts, dtype=np.int64))
    if not np.all(steps == steps[0]):
        raise StageError(f"{path} grid is not uniformly spaced")
    matrix = np.asarray(data, dtype=np.float64)
    columns = {name: matrix[:, j].copy() for j, name in enumerate(names)}
    return AlignedFrame(int(ts[0]), int(steps[0]), columns, len(ts))


def _write_features(path: Path, selection) -> None:
    scores = selection.scores
    category = {name: "direct" for name in selection.direct}
    category.update({name: "potential" for name in selection.potential})
    by_name = {
        name: (scores.spearman_abs[i], scores.rf_importance[i])
        for i, name in enumerate(scores.names)
    }
    ordered = selection.combined + [n for n in scores.names if n not in category]
    with open(path, "w") as fh:
        fh.write("indicator,spearman_abs,rf_importance,category\n")
        for name in ordered:
            rho, imp = by_name[name]
            fh.write(f"{name},{rho!r},{imp!r},{category.get(name, '-')}\n")


def _read_selected_features(path: Path) -> list[str]:
    if not path.exists():
        raise StageError("missing features.csv; run `features` first")
    combined = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != "indicator,spearman_abs,rf_importance,category":
            raise StageError(f"{path} is not a feature screening artifact")
        for line in fh:
            name, _, _, category = line.rstrip("\n").split(",")
            if category in ("direct", "potential"):
                combined.append(name)
    if not combined:
        raise StageError(f"{path} kept no indicators")
    return combined


def _write_reject_mask(path: Path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("row,shift,period,prediction,flagged\n")
        for row, shift, period, pred, flagged in rows:
            fh.write(f"{row},{shift},{period},{pred!r},{int(flagged)}\n")


def _read_reject_mask(path: Path) -> tuple[np.ndarray, np.ndarray]:
    if not path.exists():
        raise StageError("missing reject_mask.csv; run `flag` first")
    periods: list[int] = []
    flags: list[int] = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != "row,shift,period,prediction,flagged":
            raise StageError(f"{path} is not a reject mask artifact")
        for line in fh:
            _, _, period, _, flagged = line.rstrip("\n").split(",")
            periods.append(int(period))
            flags.append(int(flagged))
    return np.asarray(flags, dtype=bool), np.asarray(periods, dtype=np.int64)


def _load_manifest(out: Path, digest: str) -> dict:
    path = out / "manifest.json"
    if path.exists():
        stored = json.loads(path.read_text())
        if stored.get("config_hash") == digest:
            return stored
    return {"config_hash": digest, "artifacts": {}}


def _write_manifest(out: Path, manifest: dict) -> None:
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Charts (presentation only, never parsed)
# ---------------------------------------------------------------------------


def _save_chart(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def _chart_setup():
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    plt.rcParams["svg.hashsalt"] = "drawcast"
    return plt


def _chart_convergence(history, kind: str, path: Path) -> None:
    plt = _chart_setup()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(history) + 1), history)
    ax.set_xlabel("iteration")
    ax.set_ylabel("training RMSE")
    ax.set_title(f"{kind} convergence")
    fig.tight_layout()
    _save_chart(fig, path)
    plt.close(fig)


def _chart_predictions(per_shift, path: Path) -> None:
    plt = _chart_setup()
    fig, axes = plt.subplots(len(per_shift), 1, figsize=(8, 3 * len(per_shift)), squeeze=False)
    for ax, (label, actual, predicted) in zip(axes[:, 0], per_shift):
        ax.plot(actual, label="actual", linewidth=0.8)
        ax.plot(predicted, label="predicted", linewidth=0.8)
        ax.set_title(f"shift {label}")
        ax.legend(loc="upper right")
    fig.tight_layout()
    _save_chart(fig, path)
    plt.close(fig)


def _chart_reject_hist(counts: np.ndarray, dist, path: Path) -> None:
    plt = _chart_setup()
    fig, ax = plt.subplots(figsize=(6, 4))
    periods = np.arange(1, len(counts) + 1)
    ax.bar(periods, counts, width=1.0, label="flagged per period")
    if dist is not None and dist.sigma > 0:
        grid = np.linspace(1, len(counts), 400)
        curve = dist.m1 * np.exp(-0.5 * ((grid - dist.mu) / dist.sigma) ** 2)
        curve /= dist.sigma * np.sqrt(2.0 * np.pi)
        ax.plot(grid, curve, color="C1", label="fitted normal")
    ax.set_xlabel("period")
    ax.set_ylabel("flagged count")
    ax.legend(loc="upper right")
    fig.tight_layout()
    _save_chart(fig, path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Shared stage plumbing
# ---------------------------------------------------------------------------


def _frame_and_shifts(cfg: dict, out: Path) -> tuple[AlignedFrame, list[ShiftWindow]]:
    frame = _read_aligned(out / "aligned.csv")
    counter_name = cfg["columns.counter"]
    if counter_name not in frame.columns:
        raise StageError(f"aligned frame has no counter column '{counter_name}'")
    counter = clean_counter(frame.columns[counter_name], max_step=cfg["shifts.counter_jump"])
    shifts = detect_shifts(counter, frame.grid_start_ms, frame.step_ms)
    if not shifts:
        raise StageError("no production shifts detected in the aligned frame")
    return frame, shifts


def _candidate_names(cfg: dict, frame: AlignedFrame) -> list[str]:
    reserved = {cfg["columns.counter"], cfg["columns.hours"], cfg["columns.target"]}
    names = [name for name in frame.columns if name not in reserved]
    if cfg["columns.target"] not in frame.columns:
        raise StageError(f"aligned frame has no target column '{cfg['columns.target']}'")
    if not names:
        raise StageError("aligned frame has no candidate indicator columns")
    return names


def _samples_per_shift(cfg, frame, shifts, names):
    parts = [build_samples(frame, shift, names, cfg["columns.target"]) for shift in shifts]
    return parts, concat_samples(parts)


def _split(cfg: dict, samples):
    return split_samples(
        samples,
        cfg["split.train_fraction"],
        seed=cfg["seed"],
        shuffle=cfg["split.shuffle"],
    )


def _model_params(cfg: dict) -> list[tuple[str, object]]:
    kind = cfg["model.kind"]
    if kind == "mlffnn":
        keys = ["model.hidden", "model.train_method", "model.max_epochs", "model.learning_rate"]
    elif kind == "anfis-sc":
        keys = ["model.sc_radius", "model.epochs", "model.learning_rate"]
    elif kind == "anfis-fcm":
        keys = ["model.clusters", "model.epochs", "model.learning_rate"]
    elif kind in ("anfis-ga", "anfis-pso"):
        keys = [
            "model.clusters",
            "model.epochs",
            "model.learning_rate",
            "model.population",
            "model.iterations",
            "model.perturb_scale",
        ]
    else:
        keys = ["model.n_keep", "model.max_layers", "model.pressure", "model.shuffle_split"]
    return [(key.split(".", 1)[1], cfg[key]) for key in keys]


def _train_model(cfg: dict, Xtr: np.ndarray, ytr: np.ndarray, names: list[str]):
    """Train the configured kind; returns (model, convergence history)."""

    kind = cfg["model.kind"]
    seed = cfg["seed"]
    if kind == "mlffnn":
        model, history = mlffnn_train(
            Xtr,
            ytr,
            hidden=cfg["model.hidden"],
            method=cfg["model.train_method"],
            max_epochs=cfg["model.max_epochs"],
            learning_rate=cfg["model.learning_rate"],
            seed=seed,
        )
        return model, list(history)
    if kind == "gmdh":
        net = gmdh_train(
            Xtr,
            ytr,
            n_keep=cfg["model.n_keep"],
            max_layers=cfg["model.max_layers"],
            pressure=cfg["model.pressure"],
            seed=seed,
            shuffle_split=cfg["model.shuffle_split"],
            input_names=names,
        )
        return net, list(net.criterion_history)
    if kind == "anfis-sc":
        centers = subtractive_clusters(Xtr, radius=cfg["model.sc_radius"])
    else:
        centers, _ = fcm_clusters(Xtr, cfg["model.clusters"], seed=seed)
    fis = anfis_init(centers, Xtr)
    fis, history = anfis_train_hybrid(
        fis, Xtr, ytr, epochs=cfg["model.epochs"], learning_rate=cfg["model.learning_rate"]
    )
    if kind in ("anfis-ga", "anfis-pso"):
        method = kind.split("-", 1)[1]
        population = cfg["model.population"]
        iterations = cfg["model.iterations"]
        fis, history = anfis_metaheuristic_train(
            fis,
            Xtr,
            ytr,
            method=method,
            ga_params=GaParams(population=population, max_iters=iterations),
            pso_params=PsoParams(population=population, max_iters=iterations),
            seed=seed,
            perturb_scale=cfg["model.perturb_scale"],
        )
        history = list(history)
    return fis, history


def _predict(model, X: np.ndarray) -> np.ndarray:
    if isinstance(model, FuzzyRuleBase):
        return anfis_eval_batch(model, X)
    if isinstance(model, MlffnnModel):
        return mlffnn_predict(model, X)
    if isinstance(model, GmdhNetwork):
        return gmdh_predict(model, X)
    raise StageError(f"model.txt holds an unsupported model type {type(model).__name__}")


def _load_model(out: Path):
    path = out / "model.txt"
    if not path.exists():
        raise StageError("missing model.txt; run `train` first")
    return load_model(path)


def _check_weight_sums(model, X: np.ndarray, checks: list) -> None:
    """Spot check: normalized rule weights of a rule base sum to one."""

    if not isinstance(model, FuzzyRuleBase):
        return
    rows = X[:: max(1, X.shape[0] // 5)][:5]
    worst = 0.0
    for row in rows:
        _, trace = anfis_eval(model, row)
        worst = max(worst, abs(float(np.sum(trace.normalized)) - 1.0))
    checks.append(("rule weight sums", worst < 1e-9))


def _check_rmse(metrics, checks: list) -> None:
    checks.append(("rmse equals sqrt(mse)", abs(metrics.rmse - np.sqrt(metrics.mse)) < 1e-12))


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def _synth_config(cfg: dict) -> SynthConfig:
    overrides = {name: cfg[f"synth.{name}"] for name in _SYNTH_SCALARS}
    return SynthConfig(seed=cfg["seed"], **overrides)


def _ground_truth_summary(gt) -> dict:
    return {
        "target": gt.target_name,
        "counter": gt.counter_name,
        "hours": gt.hours_name,
        "planted_direct": [[name, coef] for name, coef in gt.planted_direct],
        "planted_potential": [[name, kind] for name, kind in gt.planted_potential],
        "planted_cross": [list(pair) for pair in gt.planted_cross],
        "shift_bounds_ms": [list(bounds) for bounds in gt.shift_bounds_ms],
        "reject_row_indices": [int(i) for i in np.flatnonzero(gt.reject_mask)],
        "counter_fault_indices": [int(i) for i in gt.counter_fault_indices],
        "hours_reset_indices": [int(i) for i in gt.hours_reset_indices],
        "limits": {"mu1": gt.limit_mu1, "sigma1": gt.limit_sigma1, "n": gt.limit_n},
    }


def stage_synth(cfg: dict, out: Path, manifest: dict) -> None:
    if not cfg["synth.enable"]:
        raise StageError("synth stage needs synth.enable = true in the config")
    records, gt = generate(_synth_config(cfg))
    path = out / "change_log.csv"
    _write_change_log(path, records)
    manifest["ground_truth"] = _ground_truth_summary(gt)
    manifest["artifacts"]["synth"] = ["change_log.csv"]
    print(f"wrote {path}")


def stage_ingest(cfg: dict, out: Path, manifest: dict) -> None:
    if cfg["synth.enable"]:
        source = out / "change_log.csv"
        if not source.exists():
            raise StageError("missing change_log.csv; run `synth` first")
    else:
        source = Path(cfg["input.change_log"])
        if not source.exists():
            raise StageError(f"input change log {source} does not exist")
    records = _read_change_log(source)
    series = parse_change_log(records)
    frame = align_series(series, step_ms=cfg["grid.step_ms"], threads=cfg["threads"])
    path = out / "aligned.csv"
    _write_aligned(path, frame)
    manifest["artifacts"]["ingest"] = ["aligned.csv"]
    print(f"wrote {path}")


def stage_features(cfg: dict, out: Path, manifest: dict) -> None:
    frame, shifts = _frame_and_shifts(cfg, out)
    names = _candidate_names(cfg, frame)
    _, samples = _samples_per_shift(cfg, frame, shifts, names)
    scores = score_features(samples, seed=cfg["seed"])
    selection = select_features(
        scores,
        direct_fraction=cfg["features.f_lin"],
        potential_fraction=cfg["features.f_nonlin"],
    )
    path = out / "features.csv"
    _write_features(path, selection)
    manifest["artifacts"]["features"] = ["features.csv"]
    print(f"wrote {path}")


def stage_train(cfg: dict, out: Path, manifest: dict, checks: list) -> None:
    frame, shifts = _frame_and_shifts(cfg, out)
    selected = _read_selected_features(out / "features.csv")
    missing = [name for name in selected if name not in frame.columns]
    if missing:
        raise StageError(f"aligned frame lacks selected indicators: {', '.join(missing)}")
    _, samples = _samples_per_shift(cfg, frame, shifts, selected)
    split = _split(cfg, samples)
    Xtr, ytr = split.train_arrays()
    model, history = _train_model(cfg, Xtr, ytr, selected)
    path = out / "model.txt"
    save_model(model, path)
    _check_weight_sums(model, Xtr, checks)
    files = ["model.txt"]
    if history:
        _chart_convergence(history, cfg["model.kind"], out / "convergence.svg")
        files.append("convergence.svg")
    manifest["artifacts"]["train"] = files
    print(f"wrote {path}")


def stage_evaluate(cfg: dict, out: Path, manifest: dict, checks: list) -> None:
    frame, shifts = _frame_and_shifts(cfg, out)
    selected = _read_selected_features(out / "features.csv")
    parts, samples = _samples_per_shift(cfg, frame, shifts, selected)
    split = _split(cfg, samples)
    model = _load_model(out)
    Xtr, ytr = split.train_arrays()
    Xte, yte = split.test_arrays()
    train_metrics = evaluate_predictions(_predict(model, Xtr), ytr)
    test_metrics = evaluate_predictions(_predict(model, Xte), yte)
    _check_rmse(train_metrics, checks)
    _check_rmse(test_metrics, checks)
    params = ";".join(f"{key}={_format_value(value)}" for key, value in _model_params(cfg))
    path = out / "metrics.csv"
    with open(path, "w") as fh:
        fh.write("method,params,mse_train,mse_test,rmse_train,rmse_test,r_train,r_test\n")
        fh.write(
            f"{cfg['model.kind']},{params},"
            f"{train_metrics.mse!r},{test_metrics.mse!r},"
            f"{train_metrics.rmse!r},{test_metrics.rmse!r},"
            f"{train_metrics.r!r},{test_metrics.r!r}\n"
        )
    per_shift = []
    offset = 0
    for shift, part in zip(shifts, parts):
        n = part.y.size
        predicted = _predict(model, samples.X[offset : offset + n])
        per_shift.append((shift.label, part.y, predicted))
        offset += n
    _chart_predictions(per_shift, out / "predictions.svg")
    manifest["artifacts"]["evaluate"] = ["metrics.csv", "predictions.svg"]
    print(f"wrote {path}")


def stage_flag(cfg: dict, out: Path, manifest: dict, checks: list) -> None:
    frame, shifts = _frame_and_shifts(cfg, out)
    selected = _read_selected_features(out / "features.csv")
    parts, samples = _samples_per_shift(cfg, frame, shifts, selected)
    model = _load_model(out)
    predictions = _predict(model, samples.X)
    _check_weight_sums(model, samples.X, checks)
    limits = SpecLimits(cfg["limits.mu1"], cfg["limits.sigma1"], cfg["limits.n"])
    mask = flag_substandard(predictions, limits)
    rows = []
    offset = 0
    for shift, part in zip(shifts, parts):
        n = part.y.size
        periods = shift_period_ids(n, cfg["sampling.j1"])
        for i in range(n):
            rows.append(
                (offset + i, shift.label, int(periods[i]), float(predictions[offset + i]), mask[offset + i])
            )
        offset += n
    path = out / "reject_mask.csv"
    _write_reject_mask(path, rows)
    files = ["reject_mask.csv"]
    flags, periods = mask, np.asarray([row[2] for row in rows])
    counts = np.bincount(periods[flags], minlength=cfg["sampling.j1"] + 1)[1:].astype(np.float64)
    dist = None
    if counts.sum() > 0:
        try:
            dist = fit_normal(counts, cfg["sampling.j1"], cfg["sampling.y_s"])
        except SamplingError:
            dist = None
    _chart_reject_hist(counts, dist, out / "reject_histogram.svg")
    files.append("reject_histogram.svg")
    manifest["artifacts"]["flag"] = files
    print(f"wrote {path}")


def _fixed_distribution(cfg: dict) -> SubstandardDistribution:
    j1 = cfg["sampling.j1"]
    m1 = cfg["sampling.m1"]
    sigma = cfg["sampling.sigma"]
    mu = cfg["sampling.mu"] if cfg["sampling.mu"] is not None else (j1 + 1) / 2.0
    counts = np.zeros(j1, dtype=np.float64)
    counts[min(j1 - 1, max(0, round(mu) - 1))] = m1
    return SubstandardDistribution(
        counts=counts, m1=m1, mu=mu, sigma=sigma, j1=j1, y_s=cfg["sampling.y_s"]
    )


def stage_sample_plan(cfg: dict, out: Path, manifest: dict) -> None:
    fixed = cfg["sampling.m1"] is not None and cfg["sampling.sigma"] is not None
    if fixed:
        dist = _fixed_distribution(cfg)
    else:
        mask, periods = _read_reject_mask(out / "reject_mask.csv")
        dist = period_histogram(mask, cfg["sampling.j1"], cfg["sampling.y_s"], period_ids=periods)
    report = build_report(
        dist,
        z1=cfg["sampling.z1"],
        z2=cfg["sampling.z2"],
        n=cfg["sampling.n"],
        m2_mode=cfg["sampling.m2_mode"],
    )
    path = out / "sampling_report.txt"
    lines = [
        "sampling plan report",
        f"periods per shift (j1) = {report.j1}",
        f"sticks per period (y_s) = {report.y_s}",
        f"marked sticks (m1) = {report.m1}",
        f"cluster center period (mu) = {report.mu:.6f}",
        f"cluster spread in periods (sigma) = {report.sigma:.6f}",
        f"window half width multiplier (n) = {report.n:.6f}",
        f"window coverage = {report.coverage:.6f}",
        f"window width in periods (j2) = {report.j2}",
        f"marked sticks inside window (m2, {report.m2_mode}) = {report.m2:.6f}",
        f"sample size, blanket plan (z1) = {report.z1}",
        f"sample size, windowed plan (z2) = {report.z2}",
        f"p_old = {report.p_old:.6f}",
        f"p_new = {report.p_new:.6f}",
        f"delta_p = {report.delta_p:.6f}",
    ]
    path.write_text("\n".join(lines) + "\n")
    manifest["artifacts"]["sample-plan"] = ["sampling_report.txt"]
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _run(command: str, cfg: dict, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)
    manifest = _load_manifest(out, digest)
    manifest["seed"] = cfg["seed"]
    manifest["config"] = {key: _format_value(value) for key, value in sorted(cfg.items())}
    checks: list[tuple[str, bool]] = []

    if command == "pipeline":
        stages = ["ingest", "features", "train", "evaluate", "flag", "sample-plan"]
        if cfg["synth.enable"]:
            stages.insert(0, "synth")
    else:
        stages = [command]

    for stage in stages:
        if stage == "synth":
            stage_synth(cfg, out, manifest)
        elif stage == "ingest":
            stage_ingest(cfg, out, manifest)
        elif stage == "features":
            stage_features(cfg, out, manifest)
        elif stage == "train":
            stage_train(cfg, out, manifest, checks)
        elif stage == "evaluate":
            stage_evaluate(cfg, out, manifest, checks)
        elif stage == "flag":
            stage_flag(cfg, out, manifest, checks)
        else:
            stage_sample_plan(cfg, out, manifest)

    _write_manifest(out, manifest)
    print(f"wrote {out / 'manifest.json'}")
    failed = [name for name, ok in checks if not ok]
    for name, ok in checks:
        print(f"self-check {name}: {'ok' if ok else 'FAILED'}")
    return 1 if failed else 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="drawcast",
        description="Predict draw resistance from production change logs and plan sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("synth", "ingest", "features", "train", "evaluate", "flag", "sample-plan", "pipeline"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="flat key = value config file")
        cmd.add_argument("--out", required=True, help="artifact output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--threads", type=int, default=None, help="worker cap for alignment")
        cmd.add_argument(
            "--mode", choices=M2_MODES, default=None, help="override sampling.m2_mode"
        )
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("'--threads' must be at least 1")
            cfg["threads"] = args.threads
        if args.mode is not None:
            cfg["sampling.m2_mode"] = args.mode
        return _run(args.command, cfg, Path(args.out))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StageError, ChangeLogError, SamplingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
