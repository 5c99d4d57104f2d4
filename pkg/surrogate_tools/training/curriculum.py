import math
from dataclasses import dataclass

from surrogate_tools.decorators import ConfigError

CURRICULUM = 'curriculum'
TEACHER_FORCING = 'teacher_forcing'
AUTOREGRESSIVE = 'autoregressive'
TRAINING_MODES = (CURRICULUM, TEACHER_FORCING, AUTOREGRESSIVE)


@dataclass(frozen=True)
class CurriculumSchedule:
    n_epochs: int = 100
    n_steps: int = 40
    delta: float = 0.2
    mode: str = CURRICULUM

    def __post_init__(self):
        if self.n_epochs < 1 or self.n_steps < 1 or self.delta <= 0:
            raise ConfigError('Schedule needs positive epochs, steps and delta: {}'.format(self))
        if self.mode not in TRAINING_MODES:
            raise ConfigError('Unknown training mode "{}", expected one of {}'.format(self.mode, TRAINING_MODES))

    def k_trans(self, epoch: int) -> int:
        return k_trans(epoch, self)


def k_trans(epoch: int, schedule: CurriculumSchedule) -> int:
    """
    Last rollout position fed with the model's own prediction:
    floor(N_t / 2 * (1 + tanh((n / M - 1/2) / delta))), clamped to [0, N_t - 1].
    Teacher forcing pins it to 0 (the first input is always the true u^0), autoregressive mode to N_t
    """
    if schedule.mode == TEACHER_FORCING:
        return 0
    if schedule.mode == AUTOREGRESSIVE:
        return schedule.n_steps
    value = math.floor(0.5 * schedule.n_steps * (1.0 + math.tanh((epoch / schedule.n_epochs - 0.5) / schedule.delta)))
    return min(max(value, 0), schedule.n_steps - 1)
