import math

import pytest

from surrogate_tools.decorators import ConfigError
from surrogate_tools.training.curriculum import (
    AUTOREGRESSIVE, TEACHER_FORCING, CurriculumSchedule, k_trans)


def test_schedule_values():
    schedule = CurriculumSchedule(n_epochs=100, n_steps=40, delta=0.2)
    for n in range(101):
        expected = math.floor(20.0 * (1.0 + math.tanh((n / 100.0 - 0.5) / 0.2)))
        assert k_trans(n, schedule) == min(max(expected, 0), 39)
    assert schedule.k_trans(0) == 0
    assert schedule.k_trans(50) == 20
    assert schedule.k_trans(100) == 39


def test_schedule_is_monotone():
    schedule = CurriculumSchedule(n_epochs=37, n_steps=40, delta=0.05)
    values = [schedule.k_trans(n) for n in range(60)]
    assert values == sorted(values)
    assert 0 <= min(values) and max(values) <= 39


def test_fixed_modes():
    for n in (0, 10, 99):
        assert CurriculumSchedule(mode=TEACHER_FORCING).k_trans(n) == 0
        assert CurriculumSchedule(mode=AUTOREGRESSIVE).k_trans(n) == 40


def test_invalid_schedule():
    with pytest.raises(ConfigError):
        CurriculumSchedule(delta=0.0)
    with pytest.raises(ConfigError):
        CurriculumSchedule(n_epochs=0)
    with pytest.raises(ConfigError):
        CurriculumSchedule(mode='scheduled_sampling')
