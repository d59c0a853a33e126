import numpy as np
import pytest

from skilleval.kinematics.layout import N_CHANNELS
from skilleval.kinematics.skill import OsatsScores, SkillLevel, SurgicalTask
from skilleval.kinematics.synth import SynthConfig, synth_dataset
from skilleval.kinematics.trial import KinematicTrial
from skilleval.nn.model import HeadKind
from skilleval.training.config import TrainConfig
from skilleval.util import make_rng


def make_trial(
    rng: np.random.Generator,
    length: int = 12,
    skill: SkillLevel = SkillLevel.NOVICE,
    subject: str = "B",
    super_trial: int = 1,
    osats: OsatsScores = None,
) -> KinematicTrial:
    return KinematicTrial(
        trial_id=f"Suturing_{subject}{super_trial:03d}",
        subject_id=subject,
        task=SurgicalTask.SUTURING,
        super_trial_index=super_trial,
        samples=rng.standard_normal((length, N_CHANNELS)),
        skill=skill,
        osats=osats,
    )


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture(params=list(HeadKind), ids=lambda h: h.value)
def head_kind(request):
    return request.param


@pytest.fixture(scope="session")
def small_synth():
    # 3 classes x 2 trials, 2 super trials per subject
    config = SynthConfig(n_per_class=2, length_range=(30, 36), super_trials=2)
    return synth_dataset(0, config)


@pytest.fixture
def quick_config():
    return TrainConfig(max_epochs=2, validation_fraction=0.2, seed=3)
