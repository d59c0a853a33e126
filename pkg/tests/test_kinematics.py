import json

import numpy as np
import numpy.testing as npt
import pytest

from skilleval.exc import (
    DatasetEntryError,
    DuplicateTrial,
    EmptyFile,
    EmptyInput,
    InvalidConfig,
    InvalidLayout,
    InvalidTrial,
    IoError,
    MalformedRow,
    ManifestError,
)
from skilleval.kinematics.layout import (
    N_CHANNELS,
    ChannelGroup,
    ChannelLayout,
    default_channel_layout,
    layout_from_blocks,
)
from skilleval.kinematics.manifest import (
    DatasetManifest,
    ManifestEntry,
    load_dataset,
    make_trial_id,
    read_manifest,
)
from skilleval.kinematics.parsing import parse_kinematics, write_kinematics
from skilleval.kinematics.skill import OsatsScores, SkillLevel, SurgicalTask
from skilleval.kinematics.standardization import (
    EPS_STD,
    StandardizationStats,
    apply_standardization,
    fit_standardization,
    invert_standardization,
)
from skilleval.kinematics.synth import (
    SynthConfig,
    synth_dataset,
    trials_by_skill,
    write_synthetic_dataset,
)
from skilleval.kinematics.trial import KinematicTrial

from tests.conftest import make_trial


def _write_rows(path, rows):
    path.write_text("\n".join(" ".join(str(v) for v in row) for row in rows) + "\n")


class TestParsing:
    def test_zero_rows(self, tmp_path):
        path = tmp_path / "zeros.txt"
        _write_rows(path, [[0] * N_CHANNELS] * 2)

        samples = parse_kinematics(path)
        assert samples.shape == (2, N_CHANNELS)
        assert not samples.any()

    def test_row_order(self, tmp_path):
        path = tmp_path / "ramp.txt"
        _write_rows(path, [[i * N_CHANNELS + j for j in range(N_CHANNELS)] for i in range(100)])

        samples = parse_kinematics(path)
        expected = np.arange(100 * N_CHANNELS, dtype=np.float64).reshape(100, N_CHANNELS)
        npt.assert_array_equal(samples, expected)

    def test_blank_lines_are_skipped(self, tmp_path):
        path = tmp_path / "blank.txt"
        row = " ".join(["1.5"] * N_CHANNELS)
        path.write_text(f"{row}\n\n   \n{row}\n")

        assert parse_kinematics(path).shape == (2, N_CHANNELS)

    def test_short_row(self, tmp_path):
        path = tmp_path / "short.txt"
        rows = [[0] * N_CHANNELS] * 4 + [[0] * (N_CHANNELS - 1)]
        _write_rows(path, rows)

        with pytest.raises(MalformedRow) as info:
            parse_kinematics(path)

        assert info.value.line == 5

    def test_unparsable_value(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text(" ".join(["0"] * (N_CHANNELS - 1) + ["abc"]) + "\n")

        with pytest.raises(MalformedRow) as info:
            parse_kinematics(path)

        assert info.value.line == 1

    def test_non_finite_value(self, tmp_path):
        path = tmp_path / "nan.txt"
        path.write_text(" ".join(["0"] * (N_CHANNELS - 1) + ["nan"]) + "\n")

        with pytest.raises(MalformedRow):
            parse_kinematics(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("\n\n")

        with pytest.raises(EmptyFile):
            parse_kinematics(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            parse_kinematics(tmp_path / "nope.txt")

    def test_write_is_exact(self, tmp_path, rng):
        samples = rng.standard_normal((7, N_CHANNELS)) * 1e3
        path = tmp_path / "exact.txt"
        write_kinematics(path, samples)

        npt.assert_array_equal(parse_kinematics(path), samples)


class TestLayout:
    @pytest.mark.parametrize(
        "channel, group, subcluster",
        [(0, "ML", 0), (18, "ML", 4), (19, "MR", 0), (40, "SL", 0), (41, "SL", 1), (75, "SR", 4)],
    )
    def test_locate(self, channel, group, subcluster):
        assert tuple(default_channel_layout().locate(channel)) == (group, subcluster)

    def test_partition(self):
        layout = default_channel_layout()
        channels = [c for sub in layout.subclusters for c in sub]
        assert len(layout.subclusters) == 20
        assert sorted(channels) == list(range(N_CHANNELS))

    def test_cartesian_channels(self):
        cartesian = default_channel_layout().cartesian_channels()
        assert cartesian == {
            "ML": (0, 1, 2),
            "MR": (19, 20, 21),
            "SL": (38, 39, 40),
            "SR": (57, 58, 59),
        }

    def test_overlap_is_rejected(self):
        with pytest.raises(InvalidLayout):
            layout_from_blocks((0, 19, 38, 38))

    def test_wrong_sizes_are_rejected(self):
        groups = list(default_channel_layout().groups)
        subs = groups[0].subclusters
        groups[0] = ChannelGroup("ML", (subs[0] + subs[1][:1], subs[1][1:], *subs[2:]))

        with pytest.raises(InvalidLayout):
            ChannelLayout(tuple(groups))

    def test_dict_round_trip(self):
        layout = layout_from_blocks((57, 38, 19, 0))
        assert ChannelLayout.from_dict(layout.to_dict()) == layout

    @pytest.mark.parametrize("where", ["top", "group"])
    def test_from_dict_rejects_unknown_fields(self, where):
        data = default_channel_layout().to_dict()
        if where == "top":
            data["order"] = "jigsaws"
        else:
            data["groups"][2]["arm"] = "left"

        with pytest.raises(InvalidLayout, match="Unknown layout fields"):
            ChannelLayout.from_dict(data)


class TestTrial:
    def test_rejects_wrong_channels(self):
        with pytest.raises(InvalidTrial):
            KinematicTrial("t", "B", SurgicalTask.SUTURING, 1, np.zeros((5, 75)))

    def test_rejects_short_trials(self):
        with pytest.raises(InvalidTrial):
            KinematicTrial("t", "B", SurgicalTask.SUTURING, 1, np.zeros((2, N_CHANNELS)))

    def test_rejects_non_finite(self):
        samples = np.zeros((5, N_CHANNELS))
        samples[2, 3] = np.inf
        with pytest.raises(InvalidTrial):
            KinematicTrial("t", "B", SurgicalTask.SUTURING, 1, samples)

    def test_samples_are_read_only(self, rng):
        trial = make_trial(rng)
        with pytest.raises(ValueError):
            trial.samples[0, 0] = 1.0

    def test_parse_labels(self):
        trial = KinematicTrial("t", "B", "knot_tying", 2, np.zeros((3, N_CHANNELS)), skill="E")
        assert trial.task is SurgicalTask.KNOT_TYING
        assert trial.skill is SkillLevel.EXPERT

    def test_osats_total(self):
        scores = OsatsScores.from_sequence([1, 2, 3, 4, 5, 6])
        assert scores.total() == 21.0
        with pytest.raises(InvalidTrial):
            OsatsScores.from_sequence([1, 2, 3])


class TestManifest:
    def _entry(self, tmp_path, rng, subject="B", super_trial=1, name="a.txt"):
        path = tmp_path / name
        write_kinematics(path, rng.standard_normal((9, N_CHANNELS)))
        return {
            "task": "Suturing",
            "subject_id": subject,
            "super_trial_index": super_trial,
            "kinematics_path": name,
            "skill": "N",
        }

    def test_empty_manifest(self):
        assert load_dataset(DatasetManifest()) == []

    def test_relative_paths(self, tmp_path, rng):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"trials": [self._entry(tmp_path, rng)]}))

        (trial,) = load_dataset(read_manifest(path))
        assert trial.trial_id == "Suturing_B001"
        assert trial.length == 9
        assert trial.skill is SkillLevel.NOVICE

    def test_duplicate_key(self, tmp_path, rng):
        entries = [
            self._entry(tmp_path, rng, name="a.txt"),
            self._entry(tmp_path, rng, name="b.txt"),
        ]
        manifest = DatasetManifest.from_dict({"trials": entries}, base_dir=tmp_path)

        with pytest.raises(DuplicateTrial):
            load_dataset(manifest)

    def test_entry_error_names_the_entry(self, tmp_path, rng):
        entry = self._entry(tmp_path, rng)
        entry["kinematics_path"] = "missing.txt"
        manifest = DatasetManifest.from_dict({"trials": [entry]}, base_dir=tmp_path)

        with pytest.raises(DatasetEntryError) as info:
            load_dataset(manifest)

        assert "missing.txt" in str(info.value)

    def test_unknown_field(self, tmp_path, rng):
        entry = self._entry(tmp_path, rng)
        entry["surgeon"] = "x"
        with pytest.raises(ManifestError):
            DatasetManifest.from_dict({"trials": [entry]})

    def test_unlabelled_entry(self, tmp_path, rng):
        entry = self._entry(tmp_path, rng)
        del entry["skill"]
        with pytest.raises(ManifestError):
            DatasetManifest.from_dict({"trials": [entry]})

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(IoError):
            read_manifest(tmp_path / "manifest.json")

    def test_trial_id(self):
        assert make_trial_id(SurgicalTask.NEEDLE_PASSING, "C", 4) == "NeedlePassing_C004"


class TestStandardization:
    def test_zero_trial(self):
        trial = KinematicTrial("t", "B", "Suturing", 1, np.zeros((4, N_CHANNELS)))
        stats = fit_standardization([trial])

        npt.assert_array_equal(stats.mean, 0.0)
        npt.assert_array_equal(stats.std, EPS_STD)

    def test_hand_arithmetic(self):
        samples = np.zeros((2, N_CHANNELS))
        samples[:, 0] = [1.0, 3.0]
        trial = KinematicTrial("t", "B", "Suturing", 1, np.vstack([samples, samples]))
        stats = fit_standardization([trial])

        assert stats.mean[0] == 2.0
        assert stats.std[0] == 1.0

    def test_pooled_oracle(self, rng):
        trials = [make_trial(rng, length=int(n)) for n in rng.integers(3, 30, size=5)]
        stats = fit_standardization(trials)

        flat = np.concatenate([t.samples for t in trials])
        mean = flat.sum(axis=0) / len(flat)
        std = np.sqrt(((flat - mean) ** 2).sum(axis=0) / len(flat))
        npt.assert_allclose(stats.mean, mean, atol=1e-12)
        npt.assert_allclose(stats.std, std, atol=1e-12)

    def test_apply_and_invert(self, rng):
        trial = make_trial(rng, length=20)
        stats = fit_standardization([trial])
        standardized = apply_standardization(trial, stats)

        npt.assert_allclose(standardized.samples.mean(axis=0), 0.0, atol=1e-9)
        assert standardized.skill is trial.skill
        restored = invert_standardization(standardized, stats)
        npt.assert_allclose(restored.samples, trial.samples, atol=1e-12)

    def test_identity(self, rng):
        trial = make_trial(rng)
        identity = StandardizationStats.identity()
        npt.assert_array_equal(identity.transform(trial.samples), trial.samples)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            fit_standardization([])


class TestSynth:
    def test_deterministic(self):
        first = synth_dataset(7, SynthConfig(n_per_class=2))
        second = synth_dataset(7, SynthConfig(n_per_class=2))

        for a, b in zip(first, second):
            assert a.trial_id == b.trial_id
            npt.assert_array_equal(a.samples, b.samples)

        assert first.windows == second.windows

    def test_counts(self):
        dataset = synth_dataset(0, SynthConfig(n_per_class=10))
        assert len(dataset) == 30
        assert trials_by_skill(dataset.trials) == {level: 10 for level in SkillLevel}
        assert {t.super_trial_index for t in dataset} == {1, 2, 3, 4, 5}

    @pytest.mark.parametrize("changes", [{"n_per_class": 0}, {"length_range": (10, 40)}])
    def test_invalid_config(self, changes):
        with pytest.raises(InvalidConfig):
            SynthConfig(**changes)

    def test_window_lies_inside_trial(self, small_synth):
        for trial in small_synth:
            window = small_synth.windows[trial.trial_id]
            assert 0 <= window.start < window.stop <= trial.length
            assert window.mask(trial.length).sum() == window.stop - window.start

    def test_osats_follow_skill(self, small_synth):
        totals = {level: [] for level in SkillLevel}
        for trial in small_synth:
            totals[trial.skill].append(trial.osats.total())

        assert max(totals[SkillLevel.NOVICE]) < min(totals[SkillLevel.EXPERT])

    def test_write_and_load(self, tmp_path, small_synth):
        manifest_path = write_synthetic_dataset(small_synth, tmp_path / "synth")
        trials = load_dataset(read_manifest(manifest_path))

        assert [t.trial_id for t in trials] == [t.trial_id for t in small_synth]
        for loaded, original in zip(trials, small_synth):
            npt.assert_array_equal(loaded.samples, original.samples)
            assert loaded.osats == original.osats

        assert (tmp_path / "synth" / "motifs.json").exists()
