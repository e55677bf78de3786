"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary. Criterion 11 needs a real dataset:
set ``STROKEKIT_DATASET`` (and optionally ``STROKEKIT_DATASET_ADAPTER``).
"""

import io
import json
import os
import time

import numpy as np
import pytest

from oracles import ADVICE_CELLS, SIX_BY_FOUR, advice_cell, icc_ck_exact, rbf, svc_dual_bruteforce, svr_dual_bruteforce
from strokekit.analytics import evaluate, icc_consistency_k
from strokekit.cli import main
from strokekit.models import TrainConfig, decision_values, predict_svr_raw, train_svc, train_svr
from strokekit.pipeline import build_table, fire_rules, fit_impact, normalize_ratings
from strokekit.report import parse_json
from strokekit.segmentation import segment_session_detailed
from strokekit.signal import (
    Signal1D,
    fft_magnitude,
    lowpass_butterworth,
    resample_cubic_spline,
    spectrum_energy,
    stft,
)
from strokekit.streaming import (
    Frame,
    SessionStore,
    StreamKind,
    decode_frame,
    encode_frame,
    estimate_offset,
    read_frame,
    replay,
    serve,
)
from strokekit.streaming.store import pcm16
from strokekit.synth import SynthConfig, StrokeSpec, gen_stroke, make_corpus, random_session
from strokekit.types import NS_PER_S, ImpactPoint, StrokeType

TOLERANCE_S = 0.2


# -- 1. DSP core -----------------------------------------------------------------

def test_criterion_01_dsp_core(criterion):
    with criterion(1, "DSP core (Butterworth gain, Parseval, spline, STFT shape)") as c:
        fs, fc = 100.0, 20.0
        t = np.arange(4000) / fs
        y = lowpass_butterworth(Signal1D(np.sin(2 * np.pi * fc * t), fs), fc).samples
        gain = np.sqrt(2 * np.mean(y[2000:] ** 2))
        c.note(f"gain {gain:.5f}")
        assert abs(gain * np.sqrt(2) - 1) <= 0.01

        rng = np.random.default_rng(1)
        worst = 0.0
        for n in (2, 3, 17, 256, 1000, 4096):
            x = rng.normal(size=n)
            worst = max(worst, abs(spectrum_energy(fft_magnitude(Signal1D(x, fs))) - x @ x) / (x @ x))
        c.note(f"Parseval {worst:.1e}")
        assert worst < 1e-9

        tk = np.arange(200) / fs
        p = lambda s: 0.7 * s**3 - 1.3 * s**2 + 0.2 * s - 4.0  # noqa: E731
        out = resample_cubic_spline(Signal1D(p(tk), fs), 500.0)
        to = np.arange(len(out)) / 500.0
        interior = (to > 0.3) & (to < tk[-1] - 0.3)
        err = np.max(np.abs(out.samples[interior] - p(to[interior])))
        c.note(f"spline {err:.1e}")
        assert err < 1e-9

        shape = stft(Signal1D(rng.normal(size=100), fs)).shape
        c.note(f"STFT {shape}")
        assert shape == (9, 26)


# -- 2. segmentation ---------------------------------------------------------------

def _match(detected_s, truth_s, tol):
    """Greedy one-to-one matching; returns the number of matched truth events."""
    used = set()
    hits = 0
    for t in truth_s:
        best = None
        for j, d in enumerate(detected_s):
            if j not in used and abs(d - t) <= tol and (best is None or abs(d - t) < abs(detected_s[best] - t)):
                best = j
        if best is not None:
            used.add(best)
            hits += 1
    return hits


def test_criterion_02_segmentation(criterion):
    with criterion(2, "segmentation recall / false positives on 50 synthetic sessions") as c:
        start = time.monotonic()
        strokes = hits = detections = 0
        for seed in range(50):
            session, truth = random_session(10, 3, 60.0, seed=1000 + seed)
            got = [s.impact_time_ns / NS_PER_S for s in segment_session_detailed(session).segments]
            real = [e["onset"] for e in truth if not e["air_swing"]]
            strokes += len(real)
            detections += len(got)
            hits += _match(got, real, TOLERANCE_S)
        recall = hits / strokes
        fp_rate = (detections - hits) / max(detections, 1)
        elapsed = time.monotonic() - start
        c.note(f"recall {recall:.4f}, FP rate {fp_rate:.4f}, {elapsed:.1f} s")
        assert recall >= 0.99 and fp_rate <= 0.01 and elapsed < 60


# -- 3. SMO against brute force ---------------------------------------------------

def test_criterion_03_smo_oracle(criterion):
    with criterion(3, "SMO matches brute-force dual QP on tiny problems") as c:
        start = time.monotonic()
        worst_svc = worst_svr = 0.0
        problems = 0
        for seed in range(12):
            rng = np.random.default_rng(500 + seed)
            n = int(rng.integers(4, 9))
            X = rng.normal(size=(n, 2))
            y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
            y[:2] = [1.0, -1.0]
            C, gamma = float(rng.choice([0.5, 2.0, 10.0])), 0.5
            model = train_svc(X, np.where(y > 0, "a", "b"), TrainConfig(C=C, gamma=gamma, tol=1e-8,
                                                                       track_objective=True))
            Xs = model.scaler.transform(X)
            alpha, b_lo, b_hi = svc_dual_bruteforce(rbf(Xs, Xs, gamma), y, C)
            grid = rng.normal(size=(25, 2))
            ours = decision_values(model, grid)[:, 0]
            bias = model.machines[0].bias
            no_bias = rbf(model.scaler.transform(grid), Xs, gamma) @ (alpha * y)
            # with no free multiplier the bias is any point of [b_lo, b_hi]
            b_ref = min(max(bias, b_lo), b_hi)
            worst_svc = max(worst_svc, np.max(np.abs(ours - (no_bias + b_ref))))
            assert np.all(np.diff(model.diagnostics[0].objective_history) >= -1e-12)
            problems += 1
        for seed in range(10):
            rng = np.random.default_rng(700 + seed)
            n = int(rng.integers(3, 7))
            X = rng.uniform(-1, 1, size=(n, 1))
            t = np.sin(3 * X[:, 0]) + 0.1 * rng.normal(size=n)
            C, eps = float(rng.choice([1.0, 3.0])), 0.1
            model = train_svr(X, t, TrainConfig(C=C, gamma=1.0, epsilon=eps, tol=1e-8, standardize_target=False,
                                                track_objective=True))
            Xs = model.scaler.transform(X)
            beta, b_lo, b_hi = svr_dual_bruteforce(rbf(Xs, Xs, 1.0), t, C, eps)
            grid = np.linspace(-1, 1, 25)[:, None]
            bias = model.machine.bias
            b_ref = min(max(bias, b_lo), b_hi)
            ref = rbf(model.scaler.transform(grid), Xs, 1.0) @ beta + b_ref
            worst_svr = max(worst_svr, np.max(np.abs(predict_svr_raw(model, grid) - ref)))
            assert np.all(np.diff(model.diagnostics.objective_history) >= -1e-12)
            problems += 1
        elapsed = time.monotonic() - start
        c.note(f"{problems} problems, max |diff| SVC {worst_svc:.1e} SVR {worst_svr:.1e}, {elapsed:.1f} s")
        assert problems >= 20 and worst_svc <= 1e-3 and worst_svr <= 1e-3 and elapsed < 60


# -- 4. classification analog ------------------------------------------------------

@pytest.mark.slow
def test_criterion_04_classification(criterion):
    with criterion(4, "4-class synthetic classification (kfold5 / leave3users)") as c:
        start = time.monotonic()
        corpus = make_corpus(200, n_users=12, seed=2024)
        kfold = evaluate(corpus, "classify", "kfold5", seed=0, augment=True).mean["accuracy"]
        l3u = evaluate(corpus, "classify", "leave3users", seed=0, augment=True).mean["accuracy"]
        elapsed = time.monotonic() - start
        c.note(f"kfold5 {kfold:.4f}, leave3users {l3u:.4f}, {elapsed:.0f} s")
        assert kfold >= 0.95 and l3u >= 0.90 and elapsed < 300


# -- 5. rating analog ---------------------------------------------------------------

def test_criterion_05_rating(criterion):
    with criterion(5, "per-type rating MAE on held-out strokes; assessor offset removed") as c:
        corpus = make_corpus(100, n_users=12, seed=2025)
        table = evaluate(corpus, "rate", "kfold5", seed=0, augment=True)
        per_type = {k: v for k, v in table.mean.items() if k.startswith("mae_")}
        c.note(", ".join(f"{k[4:]} {v:.3f}" for k, v in per_type.items()))
        # user-independent figure, reported but not part of the criterion
        l3u = evaluate(corpus, "rate", "leave3users", seed=0, augment=True).mean
        c.note(f"leave3users worst {max(v for k, v in l3u.items() if k.startswith('mae_')):.3f}")
        assert len(per_type) == 4 and max(per_type.values()) <= 0.5

        rng = np.random.default_rng(3)
        a = rng.integers(1, 5, size=40).astype(float)
        r = normalize_ratings(np.column_stack([a, a + 1]))
        diff = np.max(np.abs(r.assessor_scores[:, 0] - r.assessor_scores[:, 1]))
        raw = rng.integers(1, 4, size=(30, 4)).astype(float)
        shifted = raw.copy()
        shifted[:, 1] += 2.0
        cons = np.max(np.abs(normalize_ratings(raw).consensus - normalize_ratings(shifted).consensus))
        c.note(f"offset residual {max(diff, cons):.1e}")
        assert diff <= 1e-12 and cons <= 1e-12


# -- 6. impact analog ---------------------------------------------------------------

def test_criterion_06_impact(criterion):
    with criterion(6, "impact grid MAE per axis, predictions inside the face") as c:
        train = make_corpus(100, n_users=12, seed=31)
        table = build_table(train, "impact", True, 0)
        mx, my = fit_impact(table, np.arange(table.X.shape[0]))
        rng = np.random.default_rng(5)
        cfg = SynthConfig(seed=31)
        grid = [gen_stroke(StrokeSpec(st, float(rng.uniform(1, 5)), ImpactPoint(x, y), user_id=int(rng.integers(12))),
                           cfg, rng)
                for st in StrokeType.ordered()
                for x in np.linspace(-0.45, 0.45, 5) for y in np.linspace(0.05, 0.95, 5)]
        test = build_table(grid, "impact", False, 0)
        px = np.clip(predict_svr_raw(mx, test.X), -0.5, 0.5)
        py = np.clip(predict_svr_raw(my, test.X), 0.0, 1.0)
        ex = float(np.mean(np.abs(px - test.impact[:, 0])))
        ey = float(np.mean(np.abs(py - test.impact[:, 1])))
        c.note(f"{len(grid)} strokes, MAE x {ex:.3f} y {ey:.3f}")
        assert ex <= 0.15 and ey <= 0.15
        assert np.all((px >= -0.5) & (px <= 0.5) & (py >= 0) & (py <= 1))


# -- 7. streaming -------------------------------------------------------------------

def test_criterion_07_streaming(criterion, tmp_path):
    with criterion(7, "frame codec, lossless loopback replay, heartbeat offset") as c:
        rng = np.random.default_rng(77)
        kinds = list(StreamKind)
        buf = bytearray()
        frames = []
        for _ in range(10_000):
            f = Frame(kinds[int(rng.integers(4))], int(rng.integers(0, 2**63)) * 2 + int(rng.integers(2)),
                      rng.bytes(int(rng.integers(0, 300))))
            frames.append(f)
            buf += encode_frame(f)
        stream = io.BytesIO(bytes(buf))
        decoded = [read_frame(stream) for _ in frames]
        assert read_frame(stream) is None and decoded == frames
        assert decode_frame(encode_frame(frames[0]))[0] == frames[0]
        c.note("10000 frames")

        session, _ = random_session(2, 0, 8.0, seed=8)
        with serve("127.0.0.1:0", SessionStore(tmp_path)) as handle:
            result = replay(session, handle.address_str, speed=10.0, session_id="accept")
        stored = SessionStore(tmp_path).load("accept")
        assert result.ok
        assert np.array_equal(stored.imu, session.imu.astype(np.float32).astype(np.float64))
        assert np.array_equal(pcm16(stored.audio), pcm16(session.audio))
        shift = stored.imu_t_ns - session.imu_t_ns
        assert np.all(shift == shift[0])
        c.note(f"replay {result.frames_acked}/{result.frames_sent} frames")

        ms = 1_000_000
        true_offset = -987_654_321
        hits = 0
        for _ in range(1000):
            t1 = int(rng.integers(10**12, 10**13))
            up, down = (int(v) for v in rng.uniform(0, 20 * ms, 2))
            t2 = t1 + true_offset + up
            t3 = t2 + int(rng.uniform(0, ms))
            t4 = t3 - true_offset + down
            est = estimate_offset(t1, t2, t3, t4)
            hits += abs(est.offset_ns - true_offset) <= est.rtt_ns / 2 + 1
        c.note(f"offset within rtt/2 in {hits / 10:.1f}%")
        assert hits >= 950


# -- 8. advice rules ------------------------------------------------------------------

def test_criterion_08_advice(criterion):
    with criterion(8, "exhaustive advice rule table") as c:
        for stroke, h, v, q in ADVICE_CELLS:
            impact, expected = advice_cell(stroke, h, v, q)
            assert fire_rules(StrokeType(stroke), q, impact) == expected, (stroke, h, v, q)
        for y in np.linspace(0.50, 0.75, 11):
            keys = fire_rules(StrokeType.FOS, 4.0, ImpactPoint(0.0, float(y)))
            assert not any(k.startswith("location") for k in keys)
        c.note(f"{len(ADVICE_CELLS)} cells")


# -- 9. ICC -----------------------------------------------------------------------------

def test_criterion_09_icc(criterion):
    with criterion(9, "ICC(C,k) perfect consistency and textbook example") as c:
        a = np.array([1.0, 3.0, 2.0, 5.0, 4.0])
        perfect = icc_consistency_k(np.column_stack([a, a + 1.5]))
        exact = float(icc_ck_exact(SIX_BY_FOUR)[2])
        got = icc_consistency_k(SIX_BY_FOUR)
        c.note(f"perfect {perfect!r}, textbook {got:.10f}")
        assert perfect == 1.0
        assert abs(got - exact) <= 1e-10


# -- 10. end to end -------------------------------------------------------------------

def _cli(*argv):
    assert main([str(a) for a in argv]) == 0


def test_criterion_10_end_to_end(criterion, tmp_path, capsys):
    with criterion(10, "synth -> replay -> serve -> analyze -> report") as c:
        start = time.monotonic()
        data, models, src = tmp_path / "corpus", tmp_path / "models", tmp_path / "src"
        _cli("synth", "--corpus", "--strokes", 40, "--out", data, "--seed", 1)
        _cli("train", "--data", data, "--task", "all", "--out", models)
        _cli("synth", "--strokes", 10, "--air-swings", 3, "--out", src, "--seed", 42)
        truth = json.loads((src / "truth.json").read_text())
        store = tmp_path / "store"
        with serve("127.0.0.1:0", SessionStore(store)) as handle:
            _cli("replay", "--session", src, "--to", handle.address_str, "--speed", 25, "--session-id", "e2e")
        session_dir = store / "e2e"
        _cli("analyze", "--session", session_dir, "--models", models)
        first_results = (session_dir / "results.json").read_text()
        _cli("analyze", "--session", session_dir, "--models", models)
        assert (session_dir / "results.json").read_text() == first_results
        renders = {}
        for fmt in ("json", "html"):
            for k in range(2):
                out = tmp_path / f"report{k}.{fmt}"
                _cli("report", "--session", session_dir, "--format", fmt, "--out", out)
                renders.setdefault(fmt, []).append(out.read_bytes())
        capsys.readouterr()
        report = parse_json(first_results)
        expected = sum(not e["air_swing"] for e in truth)
        elapsed = time.monotonic() - start
        c.note(f"{report.stroke_count} strokes (truth {expected}), {elapsed:.1f} s")
        assert report.stroke_count == expected
        assert all(r[0] == r[1] for r in renders.values())
        assert elapsed < 120


# -- 11. real dataset (optional) --------------------------------------------------------

# reference results published for the public dataset
REFERENCE = {"classify": 0.9143, "rate": 0.438, "impact": 0.129}


@pytest.mark.skipif(not os.environ.get("STROKEKIT_DATASET"), reason="set STROKEKIT_DATASET to run")
def test_criterion_11_real_dataset(criterion):
    from strokekit.dataset import load_dataset

    with criterion(11, "real-dataset harness") as c:
        data = load_dataset(os.environ["STROKEKIT_DATASET"], os.environ.get("STROKEKIT_DATASET_ADAPTER"))
        acc = evaluate(data, "classify", "leave3users").mean["accuracy"]
        rate = evaluate(data, "rate", "kfold5").mean["mae"]
        imp = evaluate(data, "impact", "kfold5").mean["mae"]
        c.note(f"accuracy {acc:.4f}, rating MAE {rate:.3f}, impact MAE {imp:.3f}")
        assert abs(acc - REFERENCE["classify"]) <= 0.03
        assert abs(rate - REFERENCE["rate"]) <= 0.1
        assert abs(imp - REFERENCE["impact"]) <= 0.1
