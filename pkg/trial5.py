"""Scratch: criterion-5 experiment with planted feature sets."""

import sys
import time

import numpy as np

from drawcast import metaheuristics as M
from drawcast import predictors as P
from drawcast.changelog import build_samples, clean_counter, concat_samples, detect_shifts, split_samples
from drawcast.synth import SynthConfig, generate_frame


def run_seed(seed, fcm_c=2, epochs=6, ga_pop=20, ga_iters=40):
    t0 = time.time()
    cfg = SynthConfig(seed=seed)
    frame, gt = generate_frame(cfg)
    shifts = detect_shifts(clean_counter(frame.columns[gt.counter_name]),
                           gt.grid_start_ms, gt.step_ms)
    samples = concat_samples(
        [build_samples(frame, w, gt.feature_names, gt.target_name) for w in shifts])
    split = split_samples(samples, 0.85)
    Xtr, ytr = split.train_arrays()
    Xte, yte = split.test_arrays()

    out = {}
    sets = {
        "combined": gt.direct_names + gt.potential_names,
        "linear": gt.direct_names,
        "nonlinear": gt.potential_names,
    }
    for tag, names in sets.items():
        idx = [samples.feature_names.index(n) for n in names]
        Xc, Xt = Xtr[:, idx], Xte[:, idx]
        centers, _ = P.fcm_clusters(Xc, fcm_c, seed=seed)
        fis0 = P.anfis_init(centers, Xc)
        fis, _h = P.anfis_train_hybrid(fis0, Xc, ytr, epochs=epochs, learning_rate=0.01)
        out[f"anfis_{tag}"] = P.evaluate_predictions(yte, P.anfis_eval_batch(fis, Xt)).r
        net = P.gmdh_train(Xc, ytr, pressure=1.0, seed=seed)
        out[f"gmdh_{tag}"] = P.evaluate_predictions(yte, P.gmdh_predict(net, Xt)).r
        if tag == "combined":
            fis_keep, Xc_keep, Xt_keep = fis, Xc, Xt

    fis_ga, _ = M.anfis_metaheuristic_train(
        fis_keep, Xc_keep, ytr, method="ga",
        ga_params=M.GaParams(population=ga_pop, max_iters=ga_iters), seed=seed)
    out["anfis_ga"] = P.evaluate_predictions(yte, P.anfis_eval_batch(fis_ga, Xt_keep)).r
    out["t"] = round(time.time() - t0, 2)
    return out


n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 5
fcm_c = int(sys.argv[2]) if len(sys.argv) > 2 else 2
rows = []
for s in range(n_seeds):
    r = run_seed(s, fcm_c=fcm_c)
    rows.append(r)
    print(s, {k: (round(v, 4) if isinstance(v, float) else v) for k, v in r.items()})

print("--- means (c=%d) ---" % fcm_c)
for key in ["anfis_combined", "anfis_linear", "anfis_nonlinear",
            "gmdh_combined", "gmdh_linear", "gmdh_nonlinear", "anfis_ga"]:
    vals = [r[key] for r in rows]
    print(f"{key:16s} mean {np.mean(vals):.4f} min {np.min(vals):.4f} max {np.max(vals):.4f}")
