"""Noise extraction, chunking, segmentation, and the readings format."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisefp.errors import InsufficientDataError, RejectedInputError
from noisefp.timeseries import (
    ALLOWED_TRAIN_FRACTIONS,
    DEFAULT_CHUNK_SIZE,
    MIN_CHUNK_SIZE,
    READINGS_HEADER,
    SegmentationScheme,
    TimeSeries,
    chunk,
    extract_noise,
    read_readings,
    segment,
    write_readings,
)


def series(values, sensor_id="a", **kw):
    return TimeSeries(sensor_id=sensor_id, values=np.asarray(values, dtype=float), **kw)


def test_pinned_constants():
    assert MIN_CHUNK_SIZE == 8
    assert DEFAULT_CHUNK_SIZE == 120
    assert READINGS_HEADER == "timestamp,sensor_id,value"


class TestExtractNoise:
    def test_constant_series_yields_zero_noise(self):
        noise = extract_noise(series([5.0, 5.0, 5.0]))
        assert noise.values.tolist() == [0.0, 0.0, 0.0]
        assert noise.reference == 5.0

    def test_default_reference_is_the_series_mean(self):
        noise = extract_noise(series([1.0, 2.0, 3.0]))
        assert noise.reference == 2.0
        assert noise.values.tolist() == [-1.0, 0.0, 1.0]

    def test_explicit_reference_subtracted(self):
        noise = extract_noise(series([10.2, 9.8, 10.0, 10.4]), reference=10.0)
        assert noise.reference == 10.0
        np.testing.assert_allclose(
            noise.values, [0.2, -0.2, 0.0, 0.4], rtol=0.0, atol=1e-12
        )

    def test_metadata_preserved(self):
        src = series([1.0, 2.0], sensor_id="pump7", sampling_interval=1.0, start_time=50)
        noise = extract_noise(src, reference=1.5)
        assert noise.sensor_id == "pump7"
        assert noise.sampling_interval == src.sampling_interval
        assert noise.start_time == src.start_time

    def test_non_finite_reference_rejected(self):
        with pytest.raises(RejectedInputError):
            extract_noise(series([1.0, 2.0]), reference=float("nan"))


class TestChunking:
    def test_exact_multiple(self):
        chunks = chunk(series(np.arange(360.0)), 120)
        assert len(chunks) == 3
        assert [c.chunk_index for c in chunks] == [0, 1, 2]
        np.testing.assert_array_equal(chunks[1].values, np.arange(120.0, 240.0))

    def test_single_full_chunk(self):
        assert len(chunk(series(np.arange(300.0)), 300)) == 1

    def test_tail_shorter_than_chunk_dropped(self):
        chunks = chunk(series(np.arange(299.0)), 120)
        assert len(chunks) == 2

    def test_chunk_size_below_minimum_rejected(self):
        # the floor guards the downstream feature estimators
        with pytest.raises(InsufficientDataError):
            chunk(series(np.arange(10.0)), 3)

    def test_series_shorter_than_one_chunk_rejected(self):
        with pytest.raises(InsufficientDataError):
            chunk(series(np.arange(50.0)), 120)

    def test_noise_reference_propagates_to_chunks(self):
        noise = extract_noise(series(np.arange(16.0)), reference=4.0)
        chunks = chunk(noise, 8)
        assert all(c.reference == 4.0 for c in chunks)
        assert all(c.sensor_id == "a" for c in chunks)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(8, 400), st.integers(0, 1 << 31), st.data())
    def test_partition_property(self, n, seed, data):
        chunk_size = data.draw(st.integers(8, n))
        values = np.random.default_rng(seed).normal(0.0, 1.0, n)
        chunks = chunk(series(values), chunk_size)
        assert len(chunks) == n // chunk_size
        flat = np.concatenate([c.values for c in chunks])
        np.testing.assert_array_equal(flat, values[: len(flat)])


class TestSegmentation:
    def test_third_of_six(self):
        train, test = segment(chunk(series(np.arange(48.0)), 8),
                              SegmentationScheme.from_string("1/3"))
        assert ([c.chunk_index for c in train], [c.chunk_index for c in test]) == (
            [0, 1], [2, 3, 4, 5])

    def test_half_of_ten(self):
        train, test = segment(chunk(series(np.arange(80.0)), 8),
                              SegmentationScheme.from_string("1/2"))
        assert len(train) == 5 and len(test) == 5

    def test_uneven_count_rounds_train_up(self):
        train, test = segment(chunk(series(np.arange(56.0)), 8),
                              SegmentationScheme.from_string("1/3"))
        assert len(train) == 3 and len(test) == 4

    def test_needs_at_least_two_chunks(self):
        with pytest.raises(InsufficientDataError):
            segment(chunk(series(np.arange(8.0)), 8),
                    SegmentationScheme.from_string("1/2"))

    def test_allowed_fractions_pinned(self):
        texts = {str(s) for s in ALLOWED_TRAIN_FRACTIONS}
        assert texts == {"1/2", "1/3", "1/4", "1/5", "1/10"}

    @pytest.mark.parametrize("bad", ["2/3", "1/7", "0/2", "x", "1"])
    def test_unlisted_fraction_rejected(self, bad):
        with pytest.raises(RejectedInputError):
            SegmentationScheme.from_string(bad)

    def test_prefix_is_train_regardless_of_input_order(self):
        chunks = chunk(series(np.arange(48.0)), 8)
        shuffled = [chunks[i] for i in (3, 0, 5, 1, 4, 2)]
        train, test = segment(shuffled, SegmentationScheme.from_string("1/3"))
        assert [c.chunk_index for c in train] == [0, 1]


class TestReadingsFormat:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "readings.csv"
        rng = np.random.default_rng(3)
        original = [
            series(rng.normal(10.0, 0.5, 40), sensor_id="b", start_time=100),
            series(rng.normal(-2.0, 0.1, 25), sensor_id="a"),
        ]
        write_readings(path, original)
        loaded = read_readings(path)
        # first-appearance order, not sorted order
        assert [s.sensor_id for s in loaded] == ["b", "a"]
        for src, dst in zip(original, loaded):
            np.testing.assert_array_equal(src.values, dst.values)
            assert dst.start_time == src.start_time
            assert dst.sampling_interval == 1.0

    def test_header_written(self, tmp_path):
        path = tmp_path / "r.csv"
        write_readings(path, [series([1.0, 2.0])])
        assert path.read_text().splitlines()[0] == READINGS_HEADER

    def test_wrong_header_rejected_with_location(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("time,id,val\n0,a,1.0\n")
        with pytest.raises(RejectedInputError, match=r":1:"):
            read_readings(path)

    def test_bad_value_rejected_with_location(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(READINGS_HEADER + "\n0,a,1.0\n1,a,oops\n")
        with pytest.raises(RejectedInputError, match=r":3:"):
            read_readings(path)

    def test_interleaved_sensors_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(READINGS_HEADER + "\n0,a,1.0\n0,b,1.0\n1,a,1.0\n")
        with pytest.raises(RejectedInputError, match=r":4:"):
            read_readings(path)

    def test_nonuniform_spacing_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(READINGS_HEADER + "\n0,a,1.0\n1,a,1.0\n3,a,1.0\n")
        with pytest.raises(RejectedInputError, match=r":4:"):
            read_readings(path)

    def test_descending_timestamps_rejected(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(READINGS_HEADER + "\n5,a,1.0\n4,a,1.0\n")
        with pytest.raises(RejectedInputError):
            read_readings(path)

    def test_values_survive_exactly(self, tmp_path):
        # repr serialization must round-trip float64 bit for bit
        path = tmp_path / "r.csv"
        values = np.array([0.1, 1.0 / 3.0, 1e-17, 12345.6789012345678])
        write_readings(path, [series(values)])
        np.testing.assert_array_equal(read_readings(path)[0].values, values)

    def test_fractional_interval_not_writable(self, tmp_path):
        src = series([1.0, 2.0], sampling_interval=0.5)
        with pytest.raises(RejectedInputError):
            write_readings(tmp_path / "r.csv", [src])


class TestSeriesValidation:
    def test_empty_rejected(self):
        with pytest.raises(RejectedInputError):
            series([])

    def test_non_finite_rejected(self):
        with pytest.raises(RejectedInputError):
            series([1.0, float("inf")])

    def test_values_read_only(self):
        s = series([1.0, 2.0])
        with pytest.raises(ValueError):
            s.values[0] = 9.0
