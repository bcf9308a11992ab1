import statistics

import pytest

from vitreosim.config import TaskConfig
from vitreosim.errors import InvalidConfig
from vitreosim.sessionlog import replay
from vitreosim.synth import (
    EXPERT,
    NOVICE,
    SkillProfile,
    generate_session,
    participant_meta,
)
from vitreosim.tasks import TaskKind

IDEAL = SkillProfile(
    name="expert", tremor_sd_mm=0.0, speed_factor=1.0, caution=1.0,
    recklessness=0.0, grasp_strategy="many_small_pulls", aim_sd_mm=0.0,
    center_bias=0.0,
)


def test_generation_deterministic():
    a = generate_session(TaskKind.NAVIGATION, NOVICE, seed=7, run_index=2)
    b = generate_session(TaskKind.NAVIGATION, NOVICE, seed=7, run_index=2)
    assert a.frames == b.frames
    assert a.events == b.events
    assert a.header.to_dict() == b.header.to_dict()
    c = generate_session(TaskKind.NAVIGATION, NOVICE, seed=7, run_index=3)
    assert c.frames != a.frames


def test_sessions_complete_and_replay_identically():
    for kind in TaskKind:
        log = generate_session(kind, EXPERT, seed=13, run_index=1)
        report = replay(log)
        assert report.completed, kind
        assert report.completion_time_s > 0


def test_ideal_profile_spotless_navigation():
    log = generate_session(TaskKind.NAVIGATION, IDEAL, seed=3, run_index=1)
    report = replay(log)
    assert report.completed
    assert report.module_specific["sphere_exits"] == 0
    assert report.retinal_touches == 0


def test_participant_meta_stable_across_runs():
    pid1, age1, sex1 = participant_meta(NOVICE, 4)
    pid2, age2, sex2 = participant_meta(NOVICE, 4)
    assert (pid1, age1, sex1) == (pid2, age2, sex2)
    assert pid1 == "novice-0004"
    assert participant_meta(EXPERT, 4)[0] == "expert-0004"


def test_profile_validation():
    with pytest.raises(InvalidConfig):
        SkillProfile(name="x", tremor_sd_mm=-1, speed_factor=1, caution=0.5,
                     recklessness=0.5, grasp_strategy="few_large_pulls",
                     aim_sd_mm=0.1, center_bias=0.1).validate()
    with pytest.raises(InvalidConfig):
        SkillProfile(name="x", tremor_sd_mm=0.1, speed_factor=1, caution=2.0,
                     recklessness=0.5, grasp_strategy="few_large_pulls",
                     aim_sd_mm=0.1, center_bias=0.1).validate()


def _tremor_mean_dev(profile, seeds):
    devs = []
    for seed in seeds:
        log = generate_session(TaskKind.TREMOR, profile, seed=seed, run_index=1)
        devs.append(replay(log).module_specific["mean_dev_mm"])
    return statistics.mean(devs)


@pytest.mark.slow
def test_tremor_knob_monotone_in_mean_deviation():
    """Regression slope of mean deviation against tremor_sd must be >= 0
    (checked over 50 seeds at three noise levels)."""
    seeds = range(1, 51)
    levels = [0.05, 0.25, 0.5]
    means = []
    for sd in levels:
        prof = SkillProfile(
            name="expert", tremor_sd_mm=sd, speed_factor=1.0, caution=0.85,
            recklessness=0.05, grasp_strategy="many_small_pulls",
            aim_sd_mm=0.12, center_bias=0.02)
        means.append(_tremor_mean_dev(prof, seeds))
    xbar = sum(levels) / len(levels)
    ybar = sum(means) / len(means)
    slope = sum((x - xbar) * (y - ybar) for x, y in zip(levels, means)) / \
        sum((x - xbar) ** 2 for x in levels)
    assert slope >= 0.0, means


@pytest.mark.slow
def test_run_index_learning_curve_non_increasing():
    seeds = range(1, 51)
    means = []
    for run in (1, 2, 3):
        times = [replay(generate_session(TaskKind.TREMOR, NOVICE, seed=s,
                                         run_index=run)).completion_time_s
                 for s in seeds]
        means.append(statistics.mean(times))
    assert means[0] >= means[1] >= means[2], means


def test_custom_config_respected():
    cfg = TaskConfig(nav_sphere_count=3)
    log = generate_session(TaskKind.NAVIGATION, EXPERT, seed=2, run_index=1,
                           config=cfg)
    report = replay(log)
    assert report.completed
    assert log.header.config.nav_sphere_count == 3
