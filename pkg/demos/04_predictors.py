#!/usr/bin/env python3
"""Fit the three regressor families on one line and compare them honestly.

The same screened feature set feeds a fuzzy rule system trained by the
hybrid loop, a self-organising polynomial network and a small sigmoid
network.  Evaluation uses held-out rows only.  The split is shuffled
(seeded) because the line's latents wander slowly; a chronological
split would grade extrapolation into unvisited operating points, which
is a different and much harder question.
"""

import time

import numpy as np

from drawcast import (
    SynthConfig,
    build_samples,
    clean_counter,
    concat_samples,
    detect_shifts,
    generate_frame,
    score_features,
    select_features,
    split_samples,
)
from drawcast.predictors import (
    anfis_eval_batch,
    anfis_init,
    anfis_train_hybrid,
    evaluate_predictions,
    fcm_clusters,
    gmdh_predict,
    gmdh_train,
    load_model,
    mlffnn_predict,
    mlffnn_train,
    save_model,
)

SEED = 11


def build_split():
    cfg = SynthConfig(seed=SEED, shift_seconds=1200, ar_phi=0.6, reject_m1=0)
    frame, gt = generate_frame(cfg)
    counter = clean_counter(frame.columns[gt.counter_name])
    shifts = detect_shifts(counter, gt.grid_start_ms, gt.step_ms)
    samples = concat_samples(
        [build_samples(frame, w, gt.feature_names, gt.target_name) for w in shifts]
    )
    sel = select_features(score_features(samples, seed=SEED))
    idx = [samples.feature_names.index(n) for n in sel.combined]
    split = split_samples(samples, 0.85, seed=SEED, shuffle=True)
    Xtr, ytr = split.train_arrays()
    Xte, yte = split.test_arrays()
    return Xtr[:, idx], ytr, Xte[:, idx], yte, sel.combined


def main() -> None:
    Xtr, ytr, Xte, yte, names = build_split()
    print(f"{Xtr.shape[0]} train rows, {Xte.shape[0]} test rows, "
          f"{len(names)} screened features")
    print()
    print(f"{'model':22s} {'fit s':>6s} {'train rmse':>11s} {'test rmse':>10s} {'test r':>7s}")

    fitted = {}
    for label, fit, predict in (
        (
            "fuzzy rules (hybrid)",
            lambda: anfis_train_hybrid(
                anfis_init(fcm_clusters(Xtr, 4, seed=SEED)[0], Xtr),
                Xtr, ytr, epochs=6, learning_rate=0.01,
            )[0],
            anfis_eval_batch,
        ),
        (
            "polynomial network",
            lambda: gmdh_train(Xtr, ytr, n_keep=60, max_layers=3, pressure=1.0,
                               seed=SEED, shuffle_split=True, input_names=names),
            gmdh_predict,
        ),
        (
            "sigmoid network (lm)",
            lambda: mlffnn_train(Xtr, ytr, hidden=20, method="lm",
                                 max_epochs=60, seed=SEED)[0],
            mlffnn_predict,
        ),
    ):
        t0 = time.perf_counter()
        model = fit()
        dt = time.perf_counter() - t0
        tr = evaluate_predictions(predict(model, Xtr), ytr)
        te = evaluate_predictions(predict(model, Xte), yte)
        print(f"{label:22s} {dt:6.1f} {tr.rmse:11.3f} {te.rmse:10.3f} {te.r:7.3f}")
        fitted[label] = (model, predict)

    print()
    print("a train rmse far below the test rmse is the network memorising;")
    print("the rule system and the polynomial network self-limit their size")
    print()
    print("serialisation round trip (polynomial network)")
    model, predict = fitted["polynomial network"]
    path = "/tmp/drawcast_demo_model.txt"
    save_model(model, path)
    reloaded = load_model(path)
    same = np.array_equal(predict(model, Xte), predict(reloaded, Xte))
    with open(path) as fh:
        n_lines = sum(1 for _ in fh)
    print(f"  wrote {path} ({n_lines} lines of plain text)")
    print(f"  reloaded model reproduces the predictions exactly: {same}")


if __name__ == "__main__":
    main()
