import numpy as np
import pytest

from driftpool.errors import CsvFormatError, InvalidSpecError
from driftpool.stream import (Stream, StreamSpec, assemble_stream, build_transition_pattern,
                              inject_class_noise, load_csv_stream, sample_segment_chain,
                              write_csv_stream)


def uniform_pool(concept_id, n, k=2, n_classes=2, seed=0):
    rng = np.random.default_rng(seed + concept_id)
    X = rng.normal(concept_id, 1.0, size=(n, k))
    y = rng.integers(0, n_classes, size=n)
    return X, y


class TestTransitionPattern:
    def test_three_concepts_forward_decay(self):
        pattern = build_transition_pattern([0, 1, 2], p=0.7, F=2, tn=0.0, seed=3)
        # every row carries 0.7/1.19 and 0.49/1.19 on its two forward neighbours
        for row in pattern.matrix:
            nonzero = sorted(row[row > 0], reverse=True)
            assert len(nonzero) == 2
            assert nonzero[0] == pytest.approx(0.7 / 1.19, abs=1e-12)
            assert nonzero[1] == pytest.approx(0.49 / 1.19, abs=1e-12)

    def test_two_concepts_alternate(self):
        pattern = build_transition_pattern([0, 1], p=0.5, F=1, tn=0.0, seed=0)
        assert np.allclose(pattern.matrix, np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_full_transition_noise_is_uniform(self):
        pattern = build_transition_pattern([0, 1, 2], p=0.7, F=2, tn=1.0, seed=5)
        assert np.allclose(pattern.matrix, np.full((3, 3), 1.0 / 3.0))

    @pytest.mark.parametrize("n,F,tn", [(2, 1, 0.0), (4, 2, 0.1), (6, 3, 0.0), (5, 4, 0.3)])
    def test_rows_stochastic_and_reachable(self, n, F, tn):
        pattern = build_transition_pattern(range(n), p=0.7, F=F, tn=tn, seed=11)
        assert np.allclose(pattern.matrix.sum(axis=1), 1.0, atol=1e-9)
        # strong connectivity via repeated squaring of the boolean adjacency
        reach = pattern.matrix > 0
        for _ in range(n):
            reach = reach | (reach @ reach)
        assert reach.all()

    def test_rejects_single_concept(self):
        with pytest.raises(InvalidSpecError):
            build_transition_pattern([0], p=0.7, F=1, tn=0.0, seed=0)

    def test_forward_connections_clamped_to_ring(self):
        pattern = build_transition_pattern([0, 1], p=0.7, F=3, tn=0.0, seed=0)
        assert pattern.forward_connections == 1


class TestAssembleStream:
    def spec(self, **kw):
        base = dict(generator="test", n_concepts=2, repetitions=1, segment_length=10,
                    seed=7, drift_width=0)
        base.update(kw)
        return StreamSpec(**base)

    def test_tiny_stream_has_one_drift(self):
        spec = self.spec()
        pattern = build_transition_pattern([0, 1], p=0.7, F=1, tn=0.0, seed=spec.seed)
        pools = {c: uniform_pool(c, 30) for c in (0, 1)}
        stream, segments = assemble_stream(spec, pattern, pools)
        assert len(stream) == 20
        assert len(segments) == 2
        changes = (np.diff(stream.concept) != 0).sum()
        assert changes == 1

    def test_abrupt_concepts_piecewise_constant(self):
        spec = self.spec(n_concepts=3, repetitions=3, segment_length=20)
        pattern = build_transition_pattern([0, 1, 2], p=0.7, F=2, tn=0.0, seed=spec.seed)
        pools = {c: uniform_pool(c, 250) for c in range(3)}
        stream, segments = assemble_stream(spec, pattern, pools)
        assert len(segments) == 9
        changes = (np.diff(stream.concept) != 0).sum()
        assert changes == len(segments) - 1

    def test_stagger_table_shape(self):
        # 18 segments of 5000 reproduce the benchmark's 90000-observation length
        spec = self.spec(n_concepts=3, segments=18, segment_length=5000)
        assert spec.total_length() == 90000
        assert spec.segment_count() == 18

    def test_default_segment_rule_caps_at_six(self):
        assert StreamSpec(generator="x", n_concepts=10).segment_count() == 18
        assert StreamSpec(generator="x", n_concepts=2).segment_count() == 6

    def test_deterministic(self):
        spec = self.spec(n_concepts=2, repetitions=2, segment_length=15, drift_width=5)
        pattern = build_transition_pattern([0, 1], p=0.7, F=1, tn=0.0, seed=spec.seed)
        pools = {c: uniform_pool(c, 100) for c in (0, 1)}
        s1, _ = assemble_stream(spec, pattern, pools)
        s2, _ = assemble_stream(spec, pattern, pools)
        assert np.array_equal(s1.X, s2.X)
        assert np.array_equal(s1.y, s2.y)
        assert np.array_equal(s1.concept, s2.concept)

    def test_gradual_drift_interleaves(self):
        spec = self.spec(n_concepts=2, repetitions=3, segment_length=200, drift_width=100)
        pattern = build_transition_pattern([0, 1], p=0.7, F=1, tn=0.0, seed=spec.seed)
        pools = {c: uniform_pool(c, 1500) for c in (0, 1)}
        stream, segments = assemble_stream(spec, pattern, pools)
        chain = sample_segment_chain(spec, pattern)
        # inside a drift window both concepts appear; outside it only the scheduled one
        second_start = 200
        window = stream.concept[second_start:second_start + 100]
        assert set(np.unique(window)) == {chain[0], chain[1]}
        tail = stream.concept[second_start + 100:second_start + 200]
        assert set(np.unique(tail)) == {chain[1]}

    def test_pool_exhaustion_raises(self):
        spec = self.spec(n_concepts=2, repetitions=2, segment_length=10)
        pattern = build_transition_pattern([0, 1], p=0.7, F=1, tn=0.0, seed=spec.seed)
        pools = {c: uniform_pool(c, 11) for c in (0, 1)}
        with pytest.raises(InvalidSpecError):
            assemble_stream(spec, pattern, pools)


class TestClassNoise:
    def make_stream(self, n=1000):
        rng = np.random.default_rng(0)
        return Stream(rng.normal(size=(n, 3)), rng.integers(0, 2, size=n),
                      np.zeros(n, dtype=np.int64), n_classes=2)

    def test_zero_fraction_identity(self):
        stream = self.make_stream()
        noisy = inject_class_noise(stream, 0.0, seed=1)
        assert np.array_equal(noisy.y, stream.y)
        assert np.array_equal(noisy.X, stream.X)

    def test_redraw_count_matches_floor(self):
        stream = self.make_stream(n=90000)
        noisy = inject_class_noise(stream, 0.25, seed=1)
        # exactly floor(0.25 * 90000) = 22500 labels are redrawn; with 2
        # classes a redraw keeps the old label half the time
        changed = (noisy.y != stream.y).sum()
        assert changed <= 22500
        assert 10800 <= changed <= 11700
        again = inject_class_noise(stream, 0.25, seed=1)
        assert np.array_equal(noisy.y, again.y)

    def test_full_fraction_flips_about_half(self):
        stream = self.make_stream(n=20000)
        noisy = inject_class_noise(stream, 1.0, seed=3)
        flipped = (noisy.y != stream.y).mean()
        assert 0.45 < flipped < 0.55

    def test_features_and_concepts_untouched(self):
        stream = self.make_stream()
        noisy = inject_class_noise(stream, 0.5, seed=2)
        assert np.array_equal(noisy.X, stream.X)
        assert np.array_equal(noisy.concept, stream.concept)


class TestCsvRoundTrip:
    def make_stream(self, n=50):
        rng = np.random.default_rng(4)
        concept = np.zeros(n, dtype=np.int64)
        concept[n // 2:] = 1
        return Stream(rng.normal(size=(n, 4)) * 1e3, rng.integers(0, 3, size=n),
                      concept, n_classes=3)

    def test_round_trip_exact(self, tmp_path):
        stream = self.make_stream()
        path = tmp_path / "s.csv"
        write_csv_stream(stream, path)
        loaded = load_csv_stream(path)
        assert np.max(np.abs(loaded.X - stream.X)) < 1e-12
        assert np.array_equal(loaded.y, stream.y)
        assert np.array_equal(loaded.concept, stream.concept)

    def test_write_load_write_byte_identical(self, tmp_path):
        stream = self.make_stream()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv_stream(stream, p1)
        write_csv_stream(load_csv_stream(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_data_section(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("f0,f1,y,concept\n")
        loaded = load_csv_stream(path)
        assert len(loaded) == 0
        assert loaded.n_features == 2

    def test_arity_mismatch_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,f1,f2,f3,y,concept\n"
                        "0.0,1.0,2.0,3.0,1,0\n"
                        "0.0,1.0,2.0,1,0\n")
        with pytest.raises(CsvFormatError) as err:
            load_csv_stream(path)
        assert err.value.line == 3

    def test_missing_concept_column_allowed(self, tmp_path):
        path = tmp_path / "nc.csv"
        path.write_text("f0,y\n0.5,1\n")
        loaded = load_csv_stream(path)
        assert len(loaded) == 1
        assert not loaded.has_concepts

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b,y,concept\n")
        with pytest.raises(CsvFormatError) as err:
            load_csv_stream(path)
        assert err.value.line == 1
