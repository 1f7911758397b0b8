"""Scratch: full acceptance-shaped measurement battery with final constants."""
import time

import numpy as np

from noisefp import simulate
from noisefp.challenge import (
    AdversaryModel, ADVERSARY_ADAPTIVE, ADVERSARY_NONE,
    ADVERSARY_REPLAY, design_challenger, draw_schedule, enroll_joint,
    run_protocol, verify,
)
from noisefp.detect import (
    authenticate_chunks, fit_noise_floor, energy_test,
    spoof_classifier_train, spoof_classifier_test,
    VERDICT_MISMATCH, VERDICT_SATURATED,
)
from noisefp.features import extract_matrix
from noisefp.timeseries import extract_noise, chunk, segment, SegmentationScheme
from noisefp.svm import train, LabeledDataset, predict_many, fit_scaling

SEED = 20260816
L = 120
DUR = 10800
SCHEME = SegmentationScheme.from_string("1/3")
WIN = (6000, 8400)
NWIN = (WIN[1] - WIN[0]) // L

t_start = time.time()
profiles = simulate.sample_fleet(20, master_seed=SEED)
pmap = {p.sensor_id: p for p in profiles}
sids = sorted(pmap)
clean = {sid: simulate.generate(pmap[sid], DUR) for sid in sids}

def chunks_of(series, ref):
    return chunk(extract_noise(series, reference=ref), L)

train_chunks, test_chunks = {}, {}
Xtr, ytr, Xte, yte = [], [], [], []
for sid in sids:
    tr, te = segment(chunks_of(clean[sid], pmap[sid].baseline), SCHEME)
    train_chunks[sid], test_chunks[sid] = tr, te
    Xtr.append(extract_matrix(tr)); ytr += [sid] * len(tr)
    Xte.append(extract_matrix(te)); yte += [sid] * len(te)
Xtr, Xte = np.vstack(Xtr), np.vstack(Xte)
yte = np.array(yte)
data = LabeledDataset(vectors=Xtr, labels=tuple(ytr))

# NC smoke (within-class pooled std)
ytr_arr = np.array(ytr)
per = np.vstack([Xtr[ytr_arr == s].std(axis=0) for s in sids])
scale = np.sqrt((per ** 2).mean(axis=0))
scale = np.where(scale == 0, 1.0, scale)
cents = np.vstack([(Xtr / scale)[ytr_arr == s].mean(axis=0) for s in sids])
d = (((Xte / scale)[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
nc = float((np.array(sids)[np.argmin(d, axis=1)] == yte).mean())
print("NC smoke: %.4f" % nc)

for C, gamma in ((1.0, 0.125), (10.0, 0.25), (10.0, 0.5)):
    model = train(data, c=C, gamma=gamma)
    pred = np.array(predict_many(model, Xte))
    acc = float((pred == yte).mean())
    tprs, fprs, auth_rates = [], [], []
    for sid in sids:
        tp = int(((pred == sid) & (yte == sid)).sum())
        fn = int(((pred != sid) & (yte == sid)).sum())
        fp = int(((pred == sid) & (yte != sid)).sum())
        tn = int(((pred != sid) & (yte != sid)).sum())
        tprs.append(tp / (tp + fn)); fprs.append(fp / (fp + tn))
        auth_rates.append(tp / (tp + fn))
    print("C=%g g=%g: acc=%.4f medTPR=%.4f medFPR=%.5f per-sensor auth min=%.3f"
          % (C, gamma, acc, np.median(tprs), np.median(fprs), min(auth_rates)))

C, GAMMA = 10.0, 0.25
model = train(data, c=C, gamma=GAMMA)

# sub-fleet sweep (criterion: every size >= 0.95, spread <= 0.04)
sub_accs = []
rng = np.random.default_rng(simulate.derive_seed(SEED, 5))
for size in (5, 10, 15, 20):
    pick = sorted(rng.choice(sids, size=size, replace=False))
    Xtr_s = np.vstack([extract_matrix(train_chunks[s]) for s in pick])
    ytr_s = [s for s in pick for _ in train_chunks[s]]
    Xte_s = np.vstack([extract_matrix(test_chunks[s]) for s in pick])
    yte_s = np.array([s for s in pick for _ in test_chunks[s]])
    m = train(LabeledDataset(vectors=Xtr_s, labels=tuple(ytr_s)), c=C, gamma=GAMMA)
    sub_accs.append(float((np.array(predict_many(m, Xte_s)) == yte_s).mean()))
print("sub-fleets 5/10/15/20: %s spread=%.4f"
      % (["%.4f" % a for a in sub_accs], max(sub_accs) - min(sub_accs)))

def window_decs(attacked, vid, floor=None):
    decs = authenticate_chunks(model, chunks_of(attacked, pmap[vid].baseline), vid,
                               floor=floor)
    return [dd for dd in decs if WIN[0] // L <= dd.chunk_index < WIN[1] // L]

# S3: all sensors
s3 = []
for vid in sids:
    spec = simulate.AttackSpec(scenario=simulate.S3_SATURATION, start=WIN[0], end=WIN[1],
                               held_value=pmap[vid].baseline)
    wc = window_decs(simulate.apply_attack(clean[vid], spec), vid)
    s3.append(sum(dd.verdict == VERDICT_SATURATED for dd in wc) / len(wc))
print("S3 saturated: min=%.3f agg=%.4f" % (min(s3), np.mean(s3)))

# S2/S5: ring pairing, every sensor once as victim
for scen in (simulate.S2_SWAP, simulate.S5_DIGITAL_SWAP):
    hits = total = 0
    worst = 1.0
    for i, vid in enumerate(sids):
        pid = sids[(i + 7) % len(sids)]
        if pid == vid:
            continue
        spec = simulate.AttackSpec(scenario=scen, start=WIN[0], end=WIN[1], partner_id=pid)
        a_vic, _ = simulate.apply_attack(clean[vid], spec, partner=clean[pid])
        wc = window_decs(a_vic, vid)
        h = sum(dd.verdict == VERDICT_MISMATCH for dd in wc)
        hits += h; total += len(wc)
        worst = min(worst, h / len(wc))
    print("%s mismatch: min=%.3f agg=%.4f" % (scen, worst, hits / total))

# S4 classifier (fleet-global pooled) + energy, attacker amp from the measured floor
t4 = time.time()
norm_tr, att_tr, held = [], [], []
flag_hit = flag_tot = fa_hit = fa_tot = 0
min_shift = np.inf
for vid in sids:
    floor = fit_noise_floor(vid, train_chunks[vid], k=3.0)
    amp_att = float(np.sqrt(2.0 * 10.0 * floor.energy_std / L))
    min_shift = min(min_shift, L * amp_att ** 2 / 2.0 / floor.energy_std)
    tones = ((0.23, amp_att, 0.7),)
    full = simulate.AttackSpec(scenario=simulate.S4_ANALOG_SPOOF, start=0, end=DUR, tones=tones)
    ach = chunks_of(simulate.apply_attack(clean[vid], full), pmap[vid].baseline)
    nch = chunks_of(clean[vid], pmap[vid].baseline)
    norm_tr += nch[0::2]; att_tr += ach[0::2]
    held += [(cc, False) for cc in nch[1::2]] + [(cc, True) for cc in ach[1::2]]

    windowed = simulate.AttackSpec(scenario=simulate.S4_ANALOG_SPOOF, start=WIN[0], end=WIN[1], tones=tones)
    awc = [cc for cc in chunks_of(simulate.apply_attack(clean[vid], windowed), pmap[vid].baseline)
           if WIN[0] // L <= cc.chunk_index < WIN[1] // L]
    flag_hit += sum(energy_test(floor, cc) for cc in awc); flag_tot += len(awc)
    fa_hit += sum(energy_test(floor, cc) for cc in test_chunks[vid]); fa_tot += len(test_chunks[vid])
sp = spoof_classifier_train(norm_tr, att_tr, C=10.0, gamma=0.25)
wrong = sum((spoof_classifier_test(sp, cc) != is_att) for cc, is_att in held)
print("S4 fleet-global classifier: held-out=%.4f (n=%d, %.1fs) | energy flags=%.4f false alarms=%.4f (min shift %.1f floor-std)"
      % (1.0 - wrong / len(held), len(held), time.time() - t4,
         flag_hit / flag_tot, fa_hit / fa_tot, min_shift))

# S6 all sensors at bias exactly 3 noise_std, energy floor composed
hits = total = 0; worst = 1.0
for vid in sids:
    floor = fit_noise_floor(vid, train_chunks[vid], k=3.0)
    spec = simulate.AttackSpec(scenario=simulate.S6_INJECTION, start=WIN[0], end=WIN[1],
                               bias=3.0 * pmap[vid].noise_std)
    wc = window_decs(simulate.apply_attack(clean[vid], spec), vid, floor=floor)
    h = sum(not dd.authentic for dd in wc)
    hits += h; total += len(wc); worst = min(worst, h / len(wc))
print("S6 non-authentic: min=%.3f agg=%.4f" % (worst, hits / total))

# S7 all sensors, energy floor composed
hits = total = 0
rates = []
for vid in sids:
    floor = fit_noise_floor(vid, train_chunks[vid], k=3.0)
    scen = simulate.PlantScenario(
        profiles=tuple(profiles), duration=DUR,
        attacks=((vid, simulate.AttackSpec(scenario=simulate.S7_STEALTHY, start=WIN[0], end=WIN[1])),),
        master_seed=SEED,
    )
    wc = window_decs(scen.realize_attacked()[vid], vid, floor=floor)
    h = sum(not dd.authentic for dd in wc)
    hits += h; total += len(wc); rates.append(h / len(wc))
print("S7 non-authentic: agg=%.4f rates<0.9: %s"
      % (hits / total, {sids[i]: "%.2f" % r for i, r in enumerate(rates) if r < 0.9}))

# S8: authenticate must stay quiet
auth = tot = 0
for vid in sids:
    spec = simulate.AttackSpec(scenario=simulate.S8_REPLAY, start=WIN[0], end=WIN[1], replay_src=1200)
    wc = window_decs(simulate.apply_attack(clean[vid], spec), vid)
    auth += sum(dd.authentic for dd in wc); tot += len(wc)
print("S8 authentic rate: %.4f" % (auth / tot))

# Challenge: 100 trials
t0 = time.time()
outcomes = {ADVERSARY_NONE: 0, ADVERSARY_REPLAY: 0, ADVERSARY_ADAPTIVE: 0}
low_q = 0
for trial in range(100):
    p = profiles[trial % len(profiles)]
    challenger = design_challenger(p)
    enr = enroll_joint(p, challenger, duration=5760, chunk_size=L, streams=6,
                       C=10.0, gamma=0.25)
    low_q += enr.low_quality
    schedule = draw_schedule(1440, seed=simulate.derive_seed(SEED, 8, trial), chunk_size=L, delta=240)
    for kind in outcomes:
        adv = AdversaryModel(kind=kind, learning_delay=L)
        reported = run_protocol(p, challenger, schedule, adv, duration=1440)
        result = verify(enr.model, reported, schedule)
        if kind == ADVERSARY_NONE:
            outcomes[kind] += result.passed
        else:
            outcomes[kind] += (not result.passed)
print("challenge 100 trials: honest pass=%.2f replay fail=%.2f adaptive fail=%.2f low_quality=%d (%.1fs)"
      % (outcomes[ADVERSARY_NONE] / 100, outcomes[ADVERSARY_REPLAY] / 100,
         outcomes[ADVERSARY_ADAPTIVE] / 100, low_q, time.time() - t0))
print("battery total %.1fs" % (time.time() - t_start))
