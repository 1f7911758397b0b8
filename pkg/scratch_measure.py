"""Scratch: pin margins for the remaining unit-test assertions."""
import time
import warnings

import numpy as np

from noisefp import simulate
from noisefp.challenge import (
    AdversaryModel, ADVERSARY_ADAPTIVE, ADVERSARY_NONE, ADVERSARY_REPLAY,
    ChallengerProfile, design_challenger, draw_schedule, enroll_joint,
    run_protocol, verify, CHALLENGED_LABEL, NORMAL_LABEL,
)
from noisefp.detect import (
    authenticate_chunks, fit_noise_floor, spoof_classifier_train,
)
from noisefp.evaluation import cross_validate, sweep
from noisefp.features import extract_matrix, transform
from noisefp.timeseries import extract_noise, chunk, segment, SegmentationScheme
from noisefp.svm import LabeledDataset, train, train_binary, predict_many, rbf_kernel

SEED = 20260816
L = 120
DUR = 10800
SCHEME = SegmentationScheme.from_string("1/3")

t0 = time.time()
profiles = simulate.sample_fleet(20, master_seed=SEED)
pmap = {p.sensor_id: p for p in profiles}
sids = sorted(pmap)
clean = {sid: simulate.generate(pmap[sid], DUR) for sid in sids}

def chunks_of(series, ref):
    return chunk(extract_noise(series, reference=ref), L)

train_chunks, test_chunks = {}, {}
Xtr, ytr = [], []
for sid in sids:
    tr, te = segment(chunks_of(clean[sid], pmap[sid].baseline), SCHEME)
    train_chunks[sid], test_chunks[sid] = tr, te
    Xtr.append(extract_matrix(tr)); ytr += [sid] * len(tr)
data = LabeledDataset(vectors=np.vstack(Xtr), labels=tuple(ytr))

# A: per-sensor flagged rate at package defaults, energy floor composed
model_def = train(data)  # C=1 gamma=0.125
rates = {}
for sid in sids:
    floor = fit_noise_floor(sid, train_chunks[sid])
    decs = authenticate_chunks(model_def, test_chunks[sid], sid, floor=floor)
    rates[sid] = sum(not d.authentic for d in decs) / len(decs)
bad = {s: "%.3f" % r for s, r in rates.items() if r > 0.05}
print("A per-sensor flagged@defaults+floor: max=%.4f offenders=%s" % (max(rates.values()), bad))
rates2 = {}
for sid in sids:
    decs = authenticate_chunks(model_def, test_chunks[sid], sid)
    rates2[sid] = sum(not d.authentic for d in decs) / len(decs)
print("A per-sensor flagged@defaults no-floor: max=%.4f" % max(rates2.values()))

# B/C: 8-sensor fleet CV and sweep ordering at defaults
t = time.time()
f8 = simulate.sample_fleet(8, master_seed=simulate.derive_seed(SEED, 41))
series8 = {p.sensor_id: simulate.generate(p, 7200) for p in f8}
X8, y8 = [], []
for p in f8:
    cs = chunks_of(series8[p.sensor_id], p.baseline)
    X8.append(extract_matrix(cs)); y8 += [p.sensor_id] * len(cs)
d8 = LabeledDataset(vectors=np.vstack(X8), labels=tuple(y8))
rep = cross_validate(d8, 5)
print("B 8-sensor 5-fold CV@defaults: acc_plain=%.4f (%.1fs)" % (rep.acc_plain, time.time() - t))
t = time.time()
cells = sweep(series8, [120], [SegmentationScheme.from_string("1/2"),
                              SegmentationScheme.from_string("1/10")])
accs = {str(c.scheme): c.acc_plain for c in cells}
print("C sweep@defaults: 1/2=%.4f 1/10=%.4f ordering_ok=%s (%.1fs)"
      % (accs["1/2"], accs["1/10"], accs["1/10"] <= accs["1/2"], time.time() - t))

# D: projected-gradient QP oracle vs SMO dual objective
def dual_objective_from_model(binary):
    a = binary.alphas_signed
    k = np.exp(-binary.kernel_gamma *
               ((binary.support_vectors[:, None, :] - binary.support_vectors[None, :, :]) ** 2).sum(axis=2))
    return float(np.abs(a).sum() - 0.5 * a @ k @ a)

def project(v, y, c):
    lo, hi = -(c + np.abs(v).max() + 1.0), (c + np.abs(v).max() + 1.0)
    for _ in range(200):
        nu = 0.5 * (lo + hi)
        beta = np.clip(v - nu * y, 0.0, c)
        h = float(y @ beta)
        if h > 0:
            lo = nu
        else:
            hi = nu
    return np.clip(v - 0.5 * (lo + hi) * y, 0.0, c)

def pg_oracle(kmat, y, c, iters=300000, tol_pg=1e-12):
    q = kmat * np.outer(y, y)
    step = 1.0 / (np.linalg.eigvalsh(q).max() + 1e-9)
    alpha = project(np.zeros(y.size), y, c)
    obj_prev = -np.inf
    for it in range(iters):
        grad = 1.0 - q @ alpha
        alpha = project(alpha + step * grad, y, c)
        if it % 200 == 0:
            obj = alpha.sum() - 0.5 * alpha @ q @ alpha
            if obj - obj_prev < tol_pg:
                break
            obj_prev = obj
    return float(alpha.sum() - 0.5 * alpha @ q @ alpha), it

t = time.time()
rng = np.random.default_rng(simulate.derive_seed(SEED, 42))
worst = 0.0
for trial in range(50):
    n = int(rng.integers(2, 9))
    dim = int(rng.integers(2, 9))
    x = rng.normal(0.0, 1.0, (n, dim))
    lab = rng.integers(0, 2, n)
    if lab.min() == lab.max():
        lab[0] = 1 - lab[0]
    labels = tuple("a" if v == 0 else "b" for v in lab)
    c = float(rng.choice([0.5, 1.0, 10.0]))
    gamma = float(rng.choice([0.1, 0.5, 1.0]))
    binary = train_binary(LabeledDataset(vectors=x, labels=labels),
                          c=c, gamma=gamma, tol=1e-8, max_passes=10000)
    w_smo = dual_objective_from_model(binary)
    y = np.where(np.asarray(labels) == "a", 1.0, -1.0)
    kmat = np.exp(-gamma * ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
    w_pg, iters = pg_oracle(kmat, y, c)
    worst = max(worst, abs(w_smo - w_pg))
print("D QP oracle: worst |dW|=%.2e over 50 sets (%.1fs)" % (worst, time.time() - t))

# E: analytic 2-point example
b2 = train_binary(LabeledDataset(vectors=np.array([[0.0], [1.0]]), labels=("a", "b")),
                  c=1000.0, gamma=0.5)
alpha_expect = 1.0 / (1.0 - np.exp(-0.5))
print("E analytic: alphas=%s expect=%.6f bias=%.2e dec(0.5)=%.2e dec(0.2)=%+.4f"
      % (np.abs(b2.alphas_signed), alpha_expect, b2.bias, b2.decision([0.5]), b2.decision([0.2])))

# F: degenerate enrollment (vanishing amplitude)
sensor_f = simulate.SensorProfile(sensor_id="unit", baseline=20.0, offset=0.05,
                                  noise_std=0.1, tones=((0.21, 0.4, 0.3),), seed=97531)
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    enr = enroll_joint(sensor_f, ChallengerProfile(tones=((0.37, 1e-9, 0.0),)),
                       duration=5760, chunk_size=L, streams=6)
print("F degenerate enroll: acc=%.3f low_quality=%s warned=%d"
      % (enr.reclassification_accuracy, enr.low_quality, len(caught)))

# G: spoof degenerate labeling -> exactly 0.5
nch = train_chunks[sids[0]][:20]
sp = spoof_classifier_train(nch, nch)
vecs = np.vstack([extract_matrix(nch), extract_matrix(nch)])
labs = ["normal"] * 20 + ["attack"] * 20
pred = predict_many(sp, vecs)
acc = np.mean([p == a for p, a in zip(pred, labs)])
print("G spoof degenerate reclass: %.3f" % acc)

# H: amplitude bound via delay-clipped adaptive twin
chal = design_challenger(sensor_f)
sched = draw_schedule(1440, seed=simulate.derive_seed(SEED, 43), chunk_size=L, delta=240)
rep_none = run_protocol(sensor_f, chal, sched, AdversaryModel(kind=ADVERSARY_NONE), 1440)
rep_live = run_protocol(sensor_f, chal, sched,
                        AdversaryModel(kind=ADVERSARY_ADAPTIVE, learning_delay=1440), 1440)
diff = np.abs(rep_none.values - rep_live.values)
out = np.ones(1440, bool); out[sched.t:sched.end] = False
print("H bound: max|diff| in-window=%.4f cap=%.4f outside-max=%.2e"
      % (diff[~out].max(), 0.05 * 20.0, diff[out].max()))

# I: adaptive failure signature
enr_i = enroll_joint(sensor_f, chal, duration=5760, chunk_size=L, streams=6)
rep_ad = run_protocol(sensor_f, chal, sched,
                      AdversaryModel(kind=ADVERSARY_ADAPTIVE, learning_delay=L), 1440)
res = verify(enr_i.model, rep_ad, sched)
first_in = sched.t // L
post = sched.end // L
off = {v.chunk_index: (v.expected, v.predicted) for v in res.offending}
print("I adaptive: passed=%s offending=%s first_in=%d post=%d"
      % (res.passed, off, first_in, post))

# J: exit-4 recipe (budget exceeded)
try:
    train(d8, tol=1e-15, max_passes=1)
    print("J budget: CONVERGED (bad recipe)")
except Exception as exc:
    print("J budget: %s" % type(exc).__name__)

# L: pure-tone spectrum peak
p_tone = simulate.SensorProfile(sensor_id="tone", baseline=0.0, offset=0.0,
                                noise_std=1e-12, tones=((0.25, 1.0, 0.0),), seed=1)
s_tone = simulate.generate(p_tone, 128)
spec = transform(chunk(extract_noise(s_tone, reference=0.0), 128)[0])
print("L tone peak: argmax bin=%d (expect 32) freq=%.4f"
      % (int(np.argmax(spec.magnitudes)), spec.bin_freqs[int(np.argmax(spec.magnitudes))]))

# N: CV at exactly folds samples per class
tiny = LabeledDataset(vectors=np.array([[0.0] * 8, [0.1] * 8, [5.0] * 8, [5.1] * 8]),
                      labels=("a", "a", "b", "b"))
try:
    cross_validate(tiny, 2)
    print("N tiny CV: ok")
except Exception as exc:
    print("N tiny CV: %s: %s" % (type(exc).__name__, exc))

print("total %.1fs" % (time.time() - t0))
