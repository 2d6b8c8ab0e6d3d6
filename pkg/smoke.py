"""Throwaway smoke check of every module written so far."""

import os
import tempfile
import time

import numpy as np

t0 = time.time()
from drawcast import features as F
from drawcast import metaheuristics as M
from drawcast import predictors as P
from drawcast import sampling as S
from drawcast.changelog import (
    SampleSet,
    build_samples,
    clean_counter,
    concat_samples,
    detect_shifts,
    forward_fill,
    parse_change_log,
    split_samples,
)
from drawcast.synth import SynthConfig, generate, generate_frame

print("imports ok", round(time.time() - t0, 2))

# --- synth dense + round trip -------------------------------------------
cfg = SynthConfig(seed=11, shift_seconds=600, reject_m1=20, periods_per_shift=10,
                  reject_mu=5.0, reject_sigma=1.0)
t0 = time.time()
frame, gt = generate_frame(cfg)
print("generate_frame", round(time.time() - t0, 2), "s; length", gt.length)

t0 = time.time()
records, gt2 = generate(cfg)
print("generate", round(time.time() - t0, 2), "s; records", len(records))
assert np.array_equal(gt.reject_mask, gt2.reject_mask)

series_map = parse_change_log(records)
grid_end = gt.grid_start_ms + (gt.length - 1) * gt.step_ms
assert len(series_map) == len(gt.feature_names) + 3
for name, series in series_map.items():
    refit = forward_fill(series, gt.grid_start_ms, grid_end, gt.step_ms)
    assert np.array_equal(refit, frame.columns[name]), name
print("round trip exact for", len(series_map), "columns")

# --- shift detection on the synthetic counter ----------------------------
cnt = frame.columns[gt.counter_name]
cleaned = clean_counter(cnt)
assert int(np.sum(cleaned != cnt)) == cfg.counter_faults
shifts = detect_shifts(cleaned, gt.grid_start_ms, gt.step_ms)
got = [(w.start_ms, w.end_ms) for w in shifts]
assert got == gt.shift_bounds_ms, (got, gt.shift_bounds_ms)
print("shifts", [(w.label, w.truncated) for w in shifts])

# --- samples + split + features -----------------------------------------
samples = concat_samples(
    [build_samples(frame, w, gt.feature_names, gt.target_name) for w in shifts]
)
print("samples", samples.X.shape)
split = split_samples(samples, 0.85)
Xtr, ytr = split.train_arrays()
Xte, yte = split.test_arrays()
scores = F.score_features(SampleSet(samples.feature_names, Xtr, ytr), seed=3)
sel = F.select_features(scores)
print("direct", len(sel.direct), "potential", len(sel.potential))
print("recovered direct", sorted(set(gt.direct_names) & set(sel.direct)))
print("recovered potential", sorted(set(gt.potential_names) & set(sel.potential + sel.direct)))

# --- ANFIS on the combined set ------------------------------------------
t0 = time.time()
keep = sel.combined
idx = [samples.feature_names.index(n) for n in keep]
Xc, Xt = Xtr[:, idx], Xte[:, idx]
centers, _u = P.fcm_clusters(Xc, 2, seed=5)
fis0 = P.anfis_init(centers, Xc)
fis, hist = P.anfis_train_hybrid(fis0, Xc, ytr, epochs=6, learning_rate=0.01)
pred_te = P.anfis_eval_batch(fis, Xt)
m_tr = P.evaluate_predictions(ytr, P.anfis_eval_batch(fis, Xc))
m_te = P.evaluate_predictions(yte, pred_te)
print("anfis fcm", round(time.time() - t0, 2), "s; r", round(m_tr.r, 4), round(m_te.r, 4))
assert hist[0] >= hist[-1]

# --- subtractive clustering route ---------------------------------------
centers_sc = P.subtractive_clusters(Xc, radius=1.2)
print("subtractive centers", centers_sc.shape)

# --- GMDH ----------------------------------------------------------------
t0 = time.time()
net = P.gmdh_train(Xc, ytr, input_names=list(keep), seed=2)
g_te = P.evaluate_predictions(yte, P.gmdh_predict(net, Xt))
print("gmdh", round(time.time() - t0, 2), "s; depth", net.depth, "r", round(g_te.r, 4))

# --- MLFFNN --------------------------------------------------------------
t0 = time.time()
net2, h2 = P.mlffnn_train(Xc[:, :6], ytr, hidden=8, method="lm", max_epochs=60, seed=4)
m2 = P.evaluate_predictions(yte, P.mlffnn_predict(net2, Xt[:, :6]))
print("mlffnn lm", round(time.time() - t0, 2), "s; r", round(m2.r, 4))

# --- metaheuristics ------------------------------------------------------
t0 = time.time()
fis_ga, hist_ga = M.anfis_metaheuristic_train(
    fis, Xc, ytr, method="ga",
    ga_params=M.GaParams(population=12, max_iters=15), seed=6)
print("anfis-ga", round(time.time() - t0, 2), "s; rmse",
      round(float(hist_ga[0]), 4), "->", round(float(hist_ga[-1]), 4))
assert hist_ga[-1] <= hist_ga[0] + 1e-12

sphere = lambda x: float(np.sum(x * x))
res = M.ga_minimize(sphere, np.full(5, -5.0), np.full(5, 5.0),
                    M.GaParams(population=40, max_iters=300), seed=1)
print("ga sphere", res.best_value)
res2 = M.pso_minimize(sphere, np.full(5, -5.0), np.full(5, 5.0),
                      M.PsoParams(population=40, max_iters=300), seed=1)
print("pso sphere", res2.best_value)

# --- serialization -------------------------------------------------------
tmp = tempfile.mkdtemp()
for model, tag in ((fis, "anfis"), (net, "gmdh"), (net2, "mlffnn")):
    path = os.path.join(tmp, tag + ".txt")
    P.save_model(model, path)
    back = P.load_model(path)
    if tag == "anfis":
        assert np.array_equal(back.a, model.a) and np.array_equal(back.coeffs, model.coeffs)
        assert np.array_equal(P.anfis_eval_batch(back, Xt), pred_te)
    elif tag == "mlffnn":
        assert np.array_equal(P.mlffnn_predict(back, Xt[:, :6]),
                              P.mlffnn_predict(model, Xt[:, :6]))
    else:
        assert np.array_equal(P.gmdh_predict(back, Xt), P.gmdh_predict(model, Xt))
print("serialize round trips ok")

# --- sampling report on the synthetic cluster ----------------------------
w = shifts[gt.reject_shift]
i0 = frame.index_of(w.start_ms)
i1 = frame.index_of(w.end_ms)
mask = gt.reject_mask[i0:i1]
y_s = (i1 - i0) // cfg.periods_per_shift
dist = S.period_histogram(mask, cfg.periods_per_shift, y_s)
print("m1", dist.m1, "mu", round(dist.mu, 3), "sigma", round(dist.sigma, 3))
rep = S.build_report(dist, z1=40, z2=40, n=2.0)
print("p_old", round(rep.p_old, 4), "p_new", round(rep.p_new, 4),
      "delta", round(rep.delta_p, 4))

# --- flagging ------------------------------------------------------------
limits = P.SpecLimits(gt.limit_mu1, gt.limit_sigma1, gt.limit_n)
shift_samples = build_samples(frame, w, gt.feature_names, gt.target_name)
flags_true = P.flag_substandard(shift_samples.y, limits)
assert np.array_equal(flags_true, mask)
pred_all = P.anfis_eval_batch(fis, shift_samples.X[:, idx])
flags_pred = P.flag_substandard(pred_all, limits)
tp = int(np.sum(flags_pred & mask))
print("predicted flags", int(flags_pred.sum()), "true", int(mask.sum()), "overlap", tp)

print("ALL SMOKE OK")
