import math

import numpy as np
import pytest

from driftpool.adwin import Adwin, epsilon_cut


class TestEpsilonCut:
    def test_closed_form(self):
        # m=100, delta'=0.05 -> sqrt(ln(80)/200)
        assert epsilon_cut(100, 0.05) == pytest.approx(math.sqrt(math.log(80) / 200), abs=1e-12)
        assert epsilon_cut(100, 0.05) == pytest.approx(0.1480, abs=5e-4)


class TestAdwin:
    def test_constant_stream_never_flags(self):
        w = Adwin(delta=0.05)
        for _ in range(10_000):
            assert not w.add(0.5)
        assert w.n == 10_000
        assert w.mean == pytest.approx(0.5)

    def test_step_change_detected_quickly(self):
        detected_delay = []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            w = Adwin(delta=0.05)
            noise = 0.02 * rng.standard_normal(1000)
            fired_at = None
            for t in range(1000):
                level = 0.0 if t < 500 else 1.0
                if w.add(level + noise[t]) and t >= 500:
                    fired_at = t
                    break
            assert fired_at is not None
            detected_delay.append(fired_at - 500)
        assert max(detected_delay) < 100

    def test_rejects_non_finite(self):
        w = Adwin()
        with pytest.raises(ValueError):
            w.add(float("nan"))

    def test_false_positive_rate_bounded(self):
        # i.i.d. Bernoulli(0.5) streams of length 5000: empirical FP rate <= 3 delta
        delta = 0.05
        fp = 0
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            values = rng.integers(0, 2, size=5000).astype(float)
            w = Adwin(delta=delta)
            if any(w.add(v) for v in values):
                fp += 1
        assert fp / 100 <= 3 * delta

    def test_window_mean_exact_after_drops(self):
        rng = np.random.default_rng(7)
        w = Adwin(delta=0.2)
        raw = []
        for t in range(3000):
            v = float(rng.normal(0.0 if t < 1500 else 2.0, 0.1))
            raw.append(v)
            changed, dropped = w.add_and_check(v)
            if dropped:
                raw = raw[dropped:]
            assert len(raw) == w.n
            assert w.mean == pytest.approx(np.mean(raw), abs=1e-9)

    def test_bucket_count_logarithmic(self):
        w = Adwin(delta=1e-9, max_buckets=5)
        for _ in range(5000):
            w.add(0.5)
        assert w.bucket_count() <= 5 * (math.log2(5000) + 2)

    def test_dropped_count_reported(self):
        w = Adwin(delta=0.05)
        total_dropped = 0
        for t in range(1200):
            _, dropped = w.add_and_check(0.0 if t < 600 else 1.0)
            total_dropped += dropped
        assert total_dropped > 0
        assert w.n + total_dropped == 1200

    def test_reset(self):
        w = Adwin()
        for _ in range(100):
            w.add(1.0)
        w.reset()
        assert w.n == 0 and w.total == 0.0 and w.bucket_count() == 0
