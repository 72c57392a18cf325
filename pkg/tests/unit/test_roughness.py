# coding=utf-8
"""
Unit tests for haptic_ring.roughness module.
"""
import numpy as np
import pytest

HALF_PERIOD_300 = 1.0 / 600.0


def _naive_prominence(values, i):
    left = i
    while left > 0 and values[left - 1] <= values[i]:
        left -= 1
    right = i
    while right < len(values) - 1 and values[right + 1] <= values[i]:
        right += 1
    return values[i] - max(values[left:i + 1].min(), values[i:right + 1].min())


def _naive_select(values, min_sep, min_prom):
    candidates = [i for i in range(1, len(values) - 1) if values[i - 1] < values[i] > values[i + 1]]
    scored = [(i, _naive_prominence(values, i)) for i in candidates]
    scored = [(i, p) for i, p in scored if p >= min_prom]
    kept = []
    for i, p in sorted(scored, key=lambda e: (-e[1], e[0])):
        if all(abs(i - j) >= min_sep for j, _ in kept):
            kept.append((i, p))
    return sorted(kept)


def _naive_peaks(values, min_sep, min_prom):
    """All-extrema scan reference for detect_peaks."""
    events = sorted([(i, True, p) for i, p in _naive_select(values, min_sep, min_prom)]
                    + [(i, False, p) for i, p in _naive_select(-values, min_sep, min_prom)])
    stack = []
    for event in events:
        if stack and stack[-1][1] == event[1]:
            if event[2] > stack[-1][2]:
                stack[-1] = event
        else:
            stack.append(event)
    return [e[0] for e in stack if e[1]], [e[0] for e in stack if not e[1]]


def _grating_image(period_px=40, width=400, height=16, mm_per_pixel=0.05):
    from haptic_ring.texdata import SurfaceImage

    x = np.arange(width)[np.newaxis, :]
    pixels = np.repeat(127.5 + 100.0 * np.sin(2 * np.pi * x / period_px), height, axis=0)
    return SurfaceImage(pixels, mm_per_pixel)


class TestMeanFilter:
    """Tests for the box mean filter."""

    def test_impulse(self):
        """A single bright pixel spreads into a 3x3 plateau."""
        from haptic_ring.roughness import mean_filter
        from haptic_ring.texdata import SurfaceImage

        pixels = np.zeros((7, 7))
        pixels[3, 3] = 255.0
        result = mean_filter(SurfaceImage(pixels, 0.05), 3).pixels
        np.testing.assert_allclose(result[2:5, 2:5], 255.0 / 9.0)
        assert result.sum() == pytest.approx(255.0)

    def test_identity_and_constant(self):
        """Kernel 1 and constant images pass unchanged."""
        from haptic_ring.roughness import mean_filter
        from haptic_ring.texdata import SurfaceImage

        img = SurfaceImage(np.random.default_rng(0).uniform(0, 255, (9, 9)), 0.05)
        assert mean_filter(img, 1) is img
        flat = mean_filter(SurfaceImage(np.full((9, 9), 42.0), 0.05), 5)
        np.testing.assert_allclose(flat.pixels, 42.0)

    def test_range_preserved(self):
        """Filtered intensities stay within the input range."""
        from haptic_ring.roughness import mean_filter
        from haptic_ring.texdata import SurfaceImage

        pixels = np.random.default_rng(4).uniform(10, 200, (32, 32))
        result = mean_filter(SurfaceImage(pixels, 0.05), 5).pixels
        assert result.min() >= pixels.min()
        assert result.max() <= pixels.max()

    def test_bad_kernels(self):
        """Even and oversized kernels are rejected."""
        from haptic_ring.errors import InvalidRangeError
        from haptic_ring.roughness import mean_filter
        from haptic_ring.texdata import SurfaceImage

        img = SurfaceImage(np.zeros((5, 9)), 0.05)
        with pytest.raises(InvalidRangeError):
            mean_filter(img, 4)
        with pytest.raises(InvalidRangeError):
            mean_filter(img, 7)


class TestExtractScanline:
    """Tests for mid-height scanline extraction."""

    @pytest.mark.parametrize("height", [5, 4])
    def test_mid_row(self, height):
        """The row index is floor(height / 2)."""
        from haptic_ring.roughness import extract_scanline
        from haptic_ring.texdata import SurfaceImage

        pixels = np.repeat(np.arange(height, dtype=np.float64)[:, np.newaxis], 6, axis=1)
        scan = extract_scanline(SurfaceImage(pixels, 0.05))
        assert scan.row == 2
        np.testing.assert_allclose(scan.intensities, 2.0)
        assert len(scan) == 6

    def test_grating_periodic(self):
        """A vertical-stripe grating gives a periodic scanline."""
        from haptic_ring.roughness import extract_scanline

        scan = extract_scanline(_grating_image(period_px=8, width=64))
        np.testing.assert_allclose(scan.intensities[8:], scan.intensities[:-8], atol=1e-9)


class TestDetectPeaks:
    """Tests for prominence-based peak detection."""

    def test_constant_signal(self):
        """A flat surface has no peaks."""
        from haptic_ring.roughness import detect_peaks

        assert len(detect_peaks(np.full(50, 3.0), 2, 0.0)) == 0

    def test_triangle_pulse(self):
        """A single pulse yields one maximum at its apex."""
        from haptic_ring.roughness import detect_peaks

        signal = np.concatenate([np.zeros(10), np.arange(1.0, 6.0), np.arange(4.0, 0.0, -1.0), np.zeros(10)])
        peaks = detect_peaks(signal, 1, 1.0)
        assert list(peaks.maxima) == [14]
        assert len(peaks.minima) == 0

    def test_sinusoid_spacing(self):
        """Maxima of a 20 px sinusoid are exactly 20 px apart."""
        from haptic_ring.roughness import detect_peaks

        signal = np.sin(2 * np.pi * np.arange(200) / 20.0)
        peaks = detect_peaks(signal, 5, 0.1)
        assert np.all(np.diff(peaks.maxima) == 20)
        assert abs(len(peaks.maxima) - 200 // 20) <= 1

    def test_matches_brute_force(self):
        """Random signals agree with an all-extrema scan."""
        from haptic_ring.roughness import detect_peaks

        rng = np.random.default_rng(1234)
        for _ in range(1000):
            values = rng.normal(0.0, 1.0, int(rng.integers(3, 60)))
            min_sep = int(rng.integers(1, 5))
            min_prom = float(rng.uniform(0.0, 1.5))
            peaks = detect_peaks(values, min_sep, min_prom)
            expected_max, expected_min = _naive_peaks(values, min_sep, min_prom)
            assert list(peaks.maxima) == expected_max
            assert list(peaks.minima) == expected_min

            merged = peaks.merged()
            assert all(a[1] != b[1] for a, b in zip(merged, merged[1:]))

    def test_bad_arguments(self):
        """Separation below 1 and negative prominence are rejected."""
        from haptic_ring.errors import InvalidRangeError
        from haptic_ring.roughness import detect_peaks

        with pytest.raises(InvalidRangeError):
            detect_peaks(np.zeros(10), 0, 1.0)
        with pytest.raises(InvalidRangeError):
            detect_peaks(np.zeros(10), 1, -1.0)

    def test_min_separation(self):
        """Half a 300 Hz period at 50 mm/s over 0.05 mm pixels is 2 px."""
        from haptic_ring.roughness import min_separation_px

        assert min_separation_px(50.0, 300.0, 0.05) == 2
        assert min_separation_px(50.0, 300.0, 1.0) == 1


class TestBuildWave:
    """Tests for peak to square-wave conversion."""

    def test_empty_peaks(self):
        """No peaks means a constant OFF valve."""
        from haptic_ring.const import ValveState
        from haptic_ring.roughness import PeakSet, build_wave

        wave = build_wave(PeakSet.empty(400), 0.05)
        assert len(wave) == 0
        assert wave.initial_state is ValveState.OFF
        assert wave.duration == pytest.approx(0.4)

    def test_single_minimum(self):
        """A minimum at pixel 100 opens the valve at 0.1 s."""
        from haptic_ring.const import ValveState
        from haptic_ring.roughness import PeakSet, build_wave

        peaks = PeakSet(np.zeros(0, dtype=np.int64), np.array([100]), np.zeros(0), np.array([5.0]), 400)
        wave = build_wave(peaks, 0.05)
        assert wave.times[0] == pytest.approx(0.1)
        assert wave.states == (ValveState.ON,)
        assert wave.state_at(0.05) is ValveState.OFF
        assert wave.state_at(0.2) is ValveState.ON

    def test_grating_frequency(self):
        """A 2 mm grating slid at 50 mm/s toggles at 25 Hz."""
        from haptic_ring.roughness import build_wave, detect_peaks, extract_scanline, mean_filter

        scan = extract_scanline(mean_filter(_grating_image(), 5))
        wave = build_wave(detect_peaks(scan, 2, 5.0), scan.mm_per_pixel)
        assert wave.toggle_frequency() == pytest.approx(25.0)
        assert wave.min_gap == pytest.approx(0.02)

    def test_spatial_and_speed_scaling(self):
        """Before capping, transition times scale with pixel pitch and inversely with speed."""
        from haptic_ring.roughness import build_wave, detect_peaks

        peaks = detect_peaks(np.random.default_rng(21).normal(128.0, 30.0, 400), 1, 5.0)
        base = build_wave(peaks, 0.05, 50.0, apply_cap=False)
        coarse = build_wave(peaks, 0.10, 50.0, apply_cap=False)
        fast = build_wave(peaks, 0.05, 100.0, apply_cap=False)
        assert len(base) > 10
        np.testing.assert_allclose(coarse.times, 2.0 * base.times, rtol=1e-12)
        np.testing.assert_allclose(fast.times, 0.5 * base.times, rtol=1e-12)
        assert coarse.states == base.states == fast.states
        assert coarse.duration == pytest.approx(2.0 * base.duration)
        assert fast.duration == pytest.approx(0.5 * base.duration)

    def test_coarser_grating_fewer_transitions(self):
        """Widening the grating period never adds transitions."""
        from haptic_ring.roughness import (
            RoughnessConfig, build_wave, detect_peaks, extract_scanline, mean_filter, min_separation_px,
            prominence_threshold,
        )

        config = RoughnessConfig()
        counts = []
        for period in (10, 16, 20, 25, 40, 50, 80, 100, 200):
            scan = extract_scanline(mean_filter(_grating_image(period_px=period), 5))
            separation = min_separation_px(50.0, 300.0, scan.mm_per_pixel)
            peaks = detect_peaks(scan, separation, prominence_threshold(scan, config))
            counts.append(len(build_wave(peaks, scan.mm_per_pixel)))
        assert all(a >= b for a, b in zip(counts, counts[1:])), counts
        assert counts[0] > counts[-1]


class TestCapFrequency:
    """Tests for the valve frequency cap."""

    def test_600hz_input(self):
        """600 Hz toggling over one second becomes exactly 300 Hz."""
        from haptic_ring.const import ValveState
        from haptic_ring.roughness import RoughnessWave, cap_frequency

        states = tuple(ValveState.ON if k % 2 == 0 else ValveState.OFF for k in range(1200))
        wave = RoughnessWave(np.arange(1200) / 1200.0, states, 1.0)
        capped = cap_frequency(wave, 300.0)
        assert len(capped) == 600
        assert capped.min_gap >= HALF_PERIOD_300 * (1 - 1e-9)
        assert capped.times[0] == 0.0
        assert capped.states[-1] is wave.states[-1]

    def test_unchanged_when_slow(self):
        """A wave already within the bound is returned as is."""
        from haptic_ring.roughness import cap_frequency, uniform_square_wave

        wave = uniform_square_wave(100.0, 1.0)
        assert cap_frequency(wave, 300.0) is wave

    def test_empty_wave(self):
        """An empty wave stays empty."""
        from haptic_ring.roughness import RoughnessWave, cap_frequency

        wave = RoughnessWave(np.zeros(0), (), 1.0)
        assert len(cap_frequency(wave, 300.0)) == 0

    def test_dense_run_inside_slow_wave(self):
        """Only the dense run is replaced; the state after it is kept."""
        from haptic_ring.const import ValveState
        from haptic_ring.roughness import RoughnessWave, cap_frequency

        times = [0.0, 0.1, 0.1005, 0.101, 0.1015, 0.2]
        states = (ValveState.ON, ValveState.OFF, ValveState.ON, ValveState.OFF, ValveState.ON, ValveState.OFF)
        capped = cap_frequency(RoughnessWave(np.array(times), states, 0.5), 300.0)
        assert capped.times[0] == 0.0
        assert capped.times[-1] == pytest.approx(0.2)
        assert capped.min_gap >= HALF_PERIOD_300 * (1 - 1e-9)
        assert all(a is not b for a, b in zip(capped.states, capped.states[1:]))
        assert capped.state_at(0.15) is ValveState.ON

    def test_random_waves_keep_minimum_gap(self):
        """Random transition sequences come out alternating with no gap under 1/600 s."""
        from haptic_ring.const import ValveState
        from haptic_ring.roughness import RoughnessWave, cap_frequency

        rng = np.random.default_rng(600)
        for _ in range(200):
            n = int(rng.integers(2, 300))
            short = rng.uniform(1e-5, HALF_PERIOD_300, n)
            long = rng.uniform(HALF_PERIOD_300, 0.02, n)
            times = np.cumsum(np.where(rng.random(n) < 0.5, short, long))
            first = ValveState.ON if rng.random() < 0.5 else ValveState.OFF
            states = tuple(first if k % 2 == 0 else first.toggled() for k in range(n))
            capped = cap_frequency(RoughnessWave(times, states, float(times[-1]) + 0.01), 300.0)
            if len(capped) > 1:
                assert capped.min_gap >= HALF_PERIOD_300 * (1 - 1e-9)
            assert all(a is not b for a, b in zip(capped.states, capped.states[1:]))


class TestRoughnessWave:
    """Tests for RoughnessWave invariants and helpers."""

    def test_alternation_enforced(self):
        """Repeated states are rejected."""
        from haptic_ring.const import ValveState
        from haptic_ring.errors import InvalidTraceError
        from haptic_ring.roughness import RoughnessWave

        with pytest.raises(InvalidTraceError):
            RoughnessWave(np.array([0.0, 0.1]), (ValveState.ON, ValveState.ON), 1.0)
        with pytest.raises(InvalidTraceError):
            RoughnessWave(np.array([0.1, 0.1]), (ValveState.ON, ValveState.OFF), 1.0)

    def test_state_array(self):
        """Grid sampling matches point sampling."""
        from haptic_ring.roughness import uniform_square_wave

        wave = uniform_square_wave(25.0, 1.0, start=0.01)
        grid = np.linspace(0.0, 1.0, 333)
        assert list(wave.state_array(grid)) == [wave.state_at(t).value for t in grid]

    def test_uniform_square_wave(self):
        """300 Hz over 10 s is 6000 transitions."""
        from haptic_ring.roughness import uniform_square_wave

        wave = uniform_square_wave(300.0, 10.0)
        assert len(wave) == 6000
        assert wave.toggle_frequency() == pytest.approx(300.0)

    def test_tile_wave(self):
        """Tiling fills the duration and keeps alternation at the seams."""
        from haptic_ring.roughness import build_wave, detect_peaks, extract_scanline, tile_wave

        scan = extract_scanline(_grating_image())
        tiled = tile_wave(build_wave(detect_peaks(scan, 2, 5.0), scan.mm_per_pixel), 10.0)
        assert tiled.duration == 10.0
        assert tiled.times[-1] < 10.0
        assert all(a is not b for a, b in zip(tiled.states, tiled.states[1:]))
        assert tiled.toggle_frequency() == pytest.approx(25.0)

    def test_config_validation(self):
        """Overrides above the valve limit are rejected."""
        from haptic_ring.errors import ConfigError
        from haptic_ring.roughness import RoughnessConfig

        with pytest.raises(ConfigError):
            RoughnessConfig(overrides={'fabric': 400.0})
        with pytest.raises(ConfigError):
            RoughnessConfig(kernel_px=4)


class TestRenderRoughness:
    """Tests for rendering the archetype recordings."""

    def test_archetypes_respect_valve_limit(self, archetype_recordings):
        """Every rendered wave fills 10 s and never toggles faster than 300 Hz."""
        from haptic_ring.roughness import render_roughness

        for name, rec in archetype_recordings.items():
            wave = render_roughness(rec)
            assert wave.duration >= 10.0, name
            if len(wave) > 1:
                assert wave.min_gap >= HALF_PERIOD_300 * (1 - 1e-9), name
            assert all(a is not b for a, b in zip(wave.states, wave.states[1:])), name

    def test_fine_textures_use_overrides(self, archetype_recordings):
        """Fabric and cardboard render as 300 Hz square waves."""
        from haptic_ring.roughness import render_roughness

        for name in ('fabric', 'cardboard'):
            wave = render_roughness(archetype_recordings[name])
            assert len(wave) == 6000
            assert wave.toggle_frequency() == pytest.approx(300.0)

    def test_override_disabled(self, archetype_recordings):
        """Without overrides the fine textures go through peak detection and stay capped."""
        from haptic_ring.roughness import RoughnessConfig, render_roughness

        wave = render_roughness(archetype_recordings['cardboard'], RoughnessConfig(overrides={}))
        assert wave.duration >= 10.0
        assert wave.min_gap >= HALF_PERIOD_300 * (1 - 1e-9)

    def test_rough_metal_grating(self, archetype_recordings):
        """The 2 mm grating archetype toggles near 25 Hz."""
        from haptic_ring.roughness import render_roughness

        wave = render_roughness(archetype_recordings['rough_metal'])
        assert 24.0 <= wave.toggle_frequency() <= 26.0
