import functools
from time import time

from surrogate_tools.errors import (
    ERR_CUSTOM, ERR_CONFIG, ERR_DATA, ERR_NUMERIC, ERR_SHAPE, ERR_UNSUPPORTED, ERR_FORMAT, ERR_DEGENERATE_TARGET,
    ERR_ROLLOUT_DIVERGED, ERR_TRAINING_DIVERGED, get_error_text)
from surrogate_tools.misc import elapsed_str


class timeit(object):
    def __init__(self, stdout=None, prefix=''):
        self.stdout = stdout if stdout else self._print
        self.prefix = prefix

    def __call__(self, func):
        @functools.wraps(func)
        def core(*args, **kwargs):
            start = time()
            result = func(*args, **kwargs)
            self.stdout('{}{}: {}'.format(self.prefix, func.__name__, elapsed_str(start)))
            return result

        return core

    @staticmethod
    def _print(mess):
        print(mess)  # noqa: T001


class SurrogateError(Exception):
    default_code = ERR_CUSTOM

    def __init__(self, message=None, **kwargs):
        self.code = kwargs.pop('code', self.default_code)
        self.message = message or get_error_text(self.code) or 'Details not found'
        self.data = kwargs.pop('data', None)
        super().__init__(self.message)

    def __str__(self):
        return '[{}]: {}'.format(self.code, self.message)


class ConfigError(SurrogateError):
    default_code = ERR_CONFIG


class DataError(SurrogateError):
    default_code = ERR_DATA


class NumericError(SurrogateError):
    default_code = ERR_NUMERIC


class ShapeError(SurrogateError):
    default_code = ERR_SHAPE


class UnsupportedError(SurrogateError):
    default_code = ERR_UNSUPPORTED


class FormatError(DataError):
    default_code = ERR_FORMAT

    def __init__(self, message=None, offset=None, **kwargs):
        self.offset = offset
        if offset is not None:
            message = '{} (byte offset {})'.format(message, offset)
        super().__init__(message, **kwargs)


class DegenerateTargetError(NumericError):
    default_code = ERR_DEGENERATE_TARGET


class RolloutDiverged(NumericError):
    default_code = ERR_ROLLOUT_DIVERGED

    def __init__(self, k, message=None, **kwargs):
        self.k = k
        super().__init__(message or 'Non-finite frame at step {}'.format(k), **kwargs)


class TrainingDiverged(NumericError):
    default_code = ERR_TRAINING_DIVERGED

    def __init__(self, epoch, k, param, **kwargs):
        self.epoch, self.k, self.param = epoch, k, param
        super().__init__(
            'Non-finite loss at epoch {}, step {}, parameter {}'.format(epoch, k, param),
            data={'epoch': epoch, 'k': k, 'param': param}, **kwargs)
