# coding=utf-8
"""
Unit tests for haptic_ring.texdata module.
"""
import logging
import os
import shutil

import numpy as np
import pandas as pd
import pytest


def _copy_fixtures(fixture_set, tmp_path):
    directory, _ = fixture_set
    target = tmp_path / "fx"
    shutil.copytree(directory, target)
    return target


class TestTimeSeries:
    """Tests for TimeSeries validation."""

    def test_basic_properties(self, make_series):
        """Step, rate and duration are derived from the timestamps."""
        series = make_series(np.arange(11.0), rate=10.0)
        assert series.dt == pytest.approx(0.1)
        assert series.sample_rate == pytest.approx(10.0)
        assert series.duration == pytest.approx(1.0)
        assert len(series) == 11

    def test_duplicate_timestamp_rejected(self):
        """A repeated timestamp is a monotonicity violation."""
        from haptic_ring.const import Unit
        from haptic_ring.errors import NonMonotonicTimestampsError
        from haptic_ring.texdata import TimeSeries

        with pytest.raises(NonMonotonicTimestampsError):
            TimeSeries([0.0, 0.1, 0.1, 0.3], [1.0, 2.0, 3.0, 4.0], Unit.NEWTON)

    def test_non_uniform_rejected(self):
        """Irregular sampling is rejected."""
        from haptic_ring.const import Unit
        from haptic_ring.errors import NonUniformSamplingError
        from haptic_ring.texdata import TimeSeries

        with pytest.raises(NonUniformSamplingError):
            TimeSeries([0.0, 0.1, 0.2, 0.35], [1.0, 2.0, 3.0, 4.0], Unit.NEWTON)

    def test_too_short_rejected(self):
        """At least two samples are required."""
        from haptic_ring.const import Unit
        from haptic_ring.errors import InvalidTraceError
        from haptic_ring.texdata import TimeSeries

        with pytest.raises(InvalidTraceError):
            TimeSeries([0.0], [1.0], Unit.NEWTON)

    def test_values_are_read_only(self, make_series):
        """Arrays are frozen after construction."""
        series = make_series([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            series.values[0] = 5.0

    def test_trimmed_keeps_tail(self, make_series):
        """trimmed keeps samples at or after the cut."""
        series = make_series(np.arange(10.0), rate=10.0)
        tail = series.trimmed(0.5)
        assert tail.start == pytest.approx(0.5)
        assert list(tail.values) == [5.0, 6.0, 7.0, 8.0, 9.0]


class TestContactOnset:
    """Tests for detect_contact_onset."""

    def test_step_onset(self, make_series):
        """A clean step is detected at the step."""
        from haptic_ring.const import Unit
        from haptic_ring.texdata import detect_contact_onset

        values = np.where(np.arange(500) / 100.0 < 2.0, 0.0, 800.0)
        onset = detect_contact_onset(make_series(values, unit=Unit.WATT_PER_M2))
        assert onset == pytest.approx(2.0, abs=0.01)

    def test_no_contact(self, make_series):
        """A flat zero trace has no onset."""
        from haptic_ring.const import Unit
        from haptic_ring.errors import NoContactOnsetError
        from haptic_ring.texdata import detect_contact_onset

        with pytest.raises(NoContactOnsetError):
            detect_contact_onset(make_series(np.zeros(300), unit=Unit.WATT_PER_M2))

    def test_too_few_samples(self, make_series):
        """Fewer than 10 samples is an invalid trace."""
        from haptic_ring.const import Unit
        from haptic_ring.errors import InvalidTraceError
        from haptic_ring.texdata import detect_contact_onset

        with pytest.raises(InvalidTraceError):
            detect_contact_onset(make_series(np.full(9, 900.0), unit=Unit.WATT_PER_M2))

    def test_noisy_ramp_matches_scan(self, make_series):
        """The detected onset equals a brute-force scan and lies near the crossing."""
        from haptic_ring.const import Unit
        from haptic_ring.texdata import detect_contact_onset

        rng = np.random.default_rng(7)
        t = np.arange(400) / 100.0
        flux = np.clip(50.0 + 500.0 * (t - 1.4), 0.0, None) + rng.normal(0.0, 5.0, len(t))
        series = make_series(flux, unit=Unit.WATT_PER_M2)
        onset = detect_contact_onset(series, threshold=50.0, hold=0.2)

        expected = None
        for i in range(len(t)):
            window = np.flatnonzero((t >= t[i]) & (t <= t[i] + 0.2 + 1e-9))
            if t[window[-1]] - t[i] < 0.2 - 1e-9:
                break
            if np.all(np.abs(flux[window]) > 50.0):
                expected = t[i]
                break
        assert onset == expected
        assert 1.4 - 0.2 <= onset <= 1.4 + 0.2 + 2 * 0.01

    def test_translation_equivariance(self, make_series):
        """Shifting the trace shifts the onset by the same amount."""
        from haptic_ring.const import Unit
        from haptic_ring.texdata import detect_contact_onset

        rng = np.random.default_rng(3)
        flux = np.where(np.arange(600) / 100.0 < 2.5, 0.0, 600.0) + rng.normal(0.0, 5.0, 600)
        base = make_series(flux, unit=Unit.WATT_PER_M2)
        shifted = base.shifted(3.7)
        assert detect_contact_onset(shifted) == pytest.approx(detect_contact_onset(base) + 3.7, abs=1e-9)


class TestFixtures:
    """Tests for synthetic archetype fixtures."""

    def test_deterministic_bytes(self, tmp_path):
        """Same archetype and seed give byte-identical files."""
        from haptic_ring.texdata import generate_fixture, save_recording

        first = save_recording(generate_fixture("rough_foam", 42), tmp_path / "a")
        second = save_recording(generate_fixture("rough_foam", 42), tmp_path / "b")
        names = sorted(os.listdir(os.path.dirname(first)))
        assert names == sorted(os.listdir(os.path.dirname(second)))
        for name in names:
            with open(os.path.join(tmp_path / "a", name), "rb") as fa, open(os.path.join(tmp_path / "b", name), "rb") as fb:
                assert fa.read() == fb.read(), name

    def test_press_reaches_stop_force(self, archetype_recordings):
        """Every press trace peaks at exactly 3 N."""
        for rec in archetype_recordings.values():
            assert rec.press_force.values.max() == 3.0

    def test_stiff_presses_faster_than_soft(self, archetype_recordings):
        """smooth_metal has a steeper press slope than rough_foam."""
        from haptic_ring.softness import SoftnessConfig, analyze_press

        config = SoftnessConfig()
        _, metal = analyze_press(archetype_recordings["smooth_metal"], config)
        _, foam = analyze_press(archetype_recordings["rough_foam"], config)
        assert metal.press_slope > foam.press_slope

    def test_rough_metal_toggles_more(self, archetype_recordings):
        """The grating fixture produces more valve transitions than the polished one."""
        from haptic_ring.roughness import render_roughness

        rough = render_roughness(archetype_recordings["rough_metal"])
        smooth = render_roughness(archetype_recordings["smooth_metal"])
        assert len(rough) > len(smooth)

    def test_unknown_kind(self):
        """Unknown archetypes raise a named error."""
        from haptic_ring.errors import UnknownArchetypeError
        from haptic_ring.texdata import generate_fixture

        with pytest.raises(UnknownArchetypeError):
            generate_fixture("velvet", 1)

    def test_skin_temperature_in_bounds(self, archetype_recordings):
        """Fixture skin temperatures stay physiological."""
        for rec in archetype_recordings.values():
            assert 15.0 <= rec.skin_temp.values.min() and rec.skin_temp.values.max() <= 45.0


class TestLoadRecording:
    """Tests for manifest ingestion."""

    def test_fixture_loads(self, fixture_set, archetype_recordings):
        """A written fixture loads back with identical samples."""
        from haptic_ring.texdata import load_recording

        _, manifests = fixture_set
        rec = load_recording(manifests["rough_foam"])
        original = archetype_recordings["rough_foam"]
        assert rec.name == "rough_foam"
        np.testing.assert_array_equal(rec.press_force.values, original.press_force.values)
        np.testing.assert_array_equal(rec.heat_flux.timestamps, original.heat_flux.timestamps)
        np.testing.assert_array_equal(rec.image.pixels, original.image.pixels)
        assert rec.thermal_conductivity_hint == pytest.approx(0.04)

    def test_round_trip_bit_identical(self, fixture_set, tmp_path):
        """Loading and saving again reproduces every file byte for byte."""
        from haptic_ring.texdata import load_recording, recording_file_names, save_recording

        directory, manifests = fixture_set
        save_recording(load_recording(manifests["cardboard"]), tmp_path)
        for name in recording_file_names("cardboard").values():
            with open(os.path.join(directory, name), "rb") as fa, open(tmp_path / name, "rb") as fb:
                assert fa.read() == fb.read(), name

    def test_duplicated_timestamp(self, fixture_set, tmp_path):
        """A duplicated force timestamp surfaces as a monotonicity error."""
        from haptic_ring.errors import NonMonotonicTimestampsError
        from haptic_ring.texdata import load_recording

        target = _copy_fixtures(fixture_set, tmp_path)
        path = target / "rough_foam_force.csv"
        frame = pd.read_csv(path, float_precision="round_trip")
        frame.loc[5, "time_s"] = frame.loc[4, "time_s"]
        frame.to_csv(path, index=False)
        with pytest.raises(NonMonotonicTimestampsError):
            load_recording(target / "rough_foam.ini")

    def test_sixteen_bit_image(self, fixture_set, tmp_path):
        """A 16-bit image raises the bit-depth error."""
        from PIL import Image

        from haptic_ring.errors import BitDepthError
        from haptic_ring.texdata import load_recording

        target = _copy_fixtures(fixture_set, tmp_path)
        Image.fromarray(np.full((16, 16), 4000, dtype=np.uint16)).save(target / "deep.png")
        manifest = (target / "rough_foam.ini").read_text().replace("rough_foam_image.pgm", "deep.png")
        (target / "rough_foam.ini").write_text(manifest)
        with pytest.raises(BitDepthError) as excinfo:
            load_recording(target / "rough_foam.ini")
        assert excinfo.value.exit_code == 3

    def test_color_image_reduced_to_luminance(self, fixture_set, tmp_path, caplog):
        """RGB images are converted with a logged warning."""
        from PIL import Image

        from haptic_ring.texdata import load_recording

        target = _copy_fixtures(fixture_set, tmp_path)
        rgb = np.zeros((8, 8, 3), dtype=np.uint8)
        rgb[..., 1] = 200
        Image.fromarray(rgb).save(target / "color.png")
        manifest = (target / "fabric.ini").read_text().replace("fabric_image.pgm", "color.png")
        (target / "fabric.ini").write_text(manifest)
        with caplog.at_level(logging.WARNING):
            rec = load_recording(target / "fabric.ini")
        assert "luminance" in caplog.text
        assert rec.image.pixels[0, 0] == pytest.approx(round(0.587 * 200), abs=1)

    def test_unit_mismatch(self, fixture_set, tmp_path):
        """A temperature CSV in the force slot is a unit mismatch."""
        from haptic_ring.errors import UnitMismatchError
        from haptic_ring.texdata import load_recording

        target = _copy_fixtures(fixture_set, tmp_path)
        manifest = (target / "fabric.ini").read_text().replace("fabric_force.csv", "fabric_temperature.csv")
        (target / "fabric.ini").write_text(manifest)
        with pytest.raises(UnitMismatchError):
            load_recording(target / "fabric.ini")

    def test_missing_file(self, fixture_set, tmp_path):
        """A manifest pointing at a deleted trace names the missing file."""
        from haptic_ring.errors import MissingFileError
        from haptic_ring.texdata import load_recording

        target = _copy_fixtures(fixture_set, tmp_path)
        os.remove(target / "fabric_flux.csv")
        with pytest.raises(MissingFileError, match="fabric_flux.csv"):
            load_recording(target / "fabric.ini")

    def test_missing_manifest_key(self, tmp_path):
        """Manifests must name every trace."""
        from haptic_ring.errors import ManifestError
        from haptic_ring.texdata import load_recording

        path = tmp_path / "broken.ini"
        path.write_text("[texture]\nname = broken\nforce = f.csv\n")
        with pytest.raises(ManifestError, match="temperature"):
            load_recording(path)
