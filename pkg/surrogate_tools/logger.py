"""
Process-wide logger facade.

Console mode prints through proc_print. File mode writes <log_path>/<prefix>.log and, with LOG_ERR_HANDLER,
<prefix>_error.log next to it. On top of either mode a run directory can be attached: its records are
copied to <run_dir>/run.log until the run is detached.

USAGE EXAMPLE:

    logger.setup(console_only=True)
    logger.attach_run('runs/burgers')
    logger.set_label('none_curriculum_a5.7e-05')
    logger.progress('Epoch 3/50: loss 0.12', start, total=50, done=3)
    logger.detach_run()
"""
import json
import logging
from os.path import join
from time import time
from typing import Dict, Optional

import psutil

from surrogate_tools.configuration import cfg_value
from surrogate_tools.misc import check_path, elapsed_str, estimated_str, proc_print

__all__ = (
    'setup', 'debug', 'info', 'warning', 'error', 'fatal', 'to_log', 'total_time', 'destroy', 'progress',
    'attach_run', 'detach_run', 'set_label', 'get_log_filepath', 'memory_str',
    'LOG_DEBUG', 'LOG_INFO', 'LOG_WARNING', 'LOG_ERROR', 'LOG_FATAL', 'LOG_PATH', 'LOG_JSON', 'RUN_LOG',
)

LOG_DEBUG = logging.DEBUG
LOG_INFO = logging.INFO
LOG_WARNING = logging.WARNING
LOG_ERROR = logging.ERROR
LOG_FATAL = logging.FATAL

LOG_LEVEL_PREFIX = {
    LOG_DEBUG: '[DEBUG] ',
    LOG_INFO: '',
    LOG_WARNING: '[WARNING] ',
    LOG_ERROR: '[ERROR] ',
    LOG_FATAL: '[FATAL] '
}

DEFAULT_DATE_FMT = '%Y-%m-%d %H:%M:%S'
RUN_LOG = 'run.log'

LOG_PATH = cfg_value('LOG_PATH', default='')
LOG_LEVEL = cfg_value('LOG_LEVEL', cast=int, default=LOG_INFO)
LOG_CONSOLE_ONLY = cfg_value('LOG_CONSOLE_ONLY', cast=bool, default=False)
LOG_PREFIX = cfg_value('LOG_PREFIX', default='surrogate')
LOG_ERR_HANDLER = cfg_value('LOG_ERR_HANDLER', cast=bool, default=True)
LOG_JSON = cfg_value('LOG_JSON', cast=bool, default=False)
LOG_MEMORY = cfg_value('LOG_MEMORY', cast=bool, default=True)

_settings = {}


class ConsoleHandler(logging.Handler):
    def emit(self, record) -> None:
        proc_print(self.format(record))


class LoggerFilter(logging.Filter):
    def filter(self, record):
        label = _settings.get('label')
        record.label = '[{}] '.format(label) if label else ''
        record.levelprefix = LOG_LEVEL_PREFIX[record.levelno]
        record.levellower = {'critical': 'fatal'}.get(record.levelname.lower(), record.levelname.lower())
        record.jsonmessage = json.dumps(record.msg)[1:-1]
        return True


class _Repeats:
    """ Collapses consecutive identical warnings (errors) into one line plus a counter """

    def __init__(self, kind: str):
        self.kind = kind
        self.last = ''
        self.count = 0

    def seen(self, mess: str) -> bool:
        if mess == self.last:
            self.count += 1
            return True
        if self.count > 2:
            info('Last {} duplicated {} times'.format(self.kind, self.count))
        self.last, self.count = mess, 1
        return False


def _formatter() -> logging.Formatter:
    if _settings.get('log_json', LOG_JSON):
        return logging.Formatter(json.dumps({
            'date': '%(asctime)s.%(msecs)03d',
            'log_level': '%(levellower)s',
            'message': '%(label)s%(jsonmessage)s',
        }), datefmt=DEFAULT_DATE_FMT)
    return logging.Formatter('%(asctime)19s %(label)s%(levelprefix)s%(message)s', datefmt=DEFAULT_DATE_FMT)


def _file_handler(filename: str, level: int = None) -> logging.Handler:
    handler = logging.FileHandler(filename, encoding='UTF-8')
    handler.setFormatter(_formatter())
    if level is not None:
        handler.setLevel(level)
    return handler


def _build_logger(log_path: str) -> logging.Logger:
    prefix = _settings.get('prefix')
    log = logging.getLogger('surrogate_{}'.format(prefix))
    log.setLevel(_settings.get('log_level'))
    log.propagate = False
    log.addFilter(LoggerFilter())

    if log_path and not _settings.get('console_only'):
        check_path(log_path)
        full_path = join(log_path, '{}.log'.format(prefix))
        _settings['current_file'] = full_path
        log.addHandler(_file_handler(full_path))
        if _settings.get('err_handler'):
            log.addHandler(_file_handler(join(log_path, '{}_error.log'.format(prefix)), logging.ERROR))
        log.debug('Logger file: {}'.format(full_path))
    else:
        handler = ConsoleHandler()
        handler.setFormatter(logging.Formatter('%(label)s%(levelprefix)s%(message)s'))
        log.addHandler(handler)
    return log


def setup(
        log_path=LOG_PATH, prefix=LOG_PREFIX, log_level=LOG_LEVEL, err_handler=LOG_ERR_HANDLER, label=None,
        log_json=LOG_JSON, console_only=LOG_CONSOLE_ONLY):
    global _log
    destroy()
    _settings.update(
        log_path=log_path, prefix=prefix, err_handler=err_handler, log_level=log_level, label=label,
        log_json=log_json, console_only=console_only, started=time())
    _log = _build_logger(log_path)
    return _log


def _get_log() -> logging.Logger:
    if not _log:
        setup(console_only=True)
    return _log


def set_label(label: Optional[str]):
    """ Prefix for every following line, e.g. the sweep member being trained """
    _settings['label'] = label


def attach_run(run_dir: str) -> str:
    """ Copies every following record to <run_dir>/run.log """
    detach_run()
    check_path(run_dir)
    path = join(run_dir, RUN_LOG)
    handler = _file_handler(path)
    _get_log().addHandler(handler)
    _settings['run_handler'] = handler
    return path


def detach_run():
    handler = _settings.pop('run_handler', None)
    if handler is not None:
        if _log:
            _log.removeHandler(handler)
        handler.close()


def to_log(*args, level: int = LOG_INFO, console_only=False):
    message = ' '.join([str(x) for x in args])
    if console_only:
        proc_print(message)
        return
    _get_log().log(level, message)


def _enabled(level: int) -> bool:
    return _settings.get('log_level', LOG_LEVEL) <= level


def debug(*args):
    if _enabled(LOG_DEBUG):
        to_log(*args, level=LOG_DEBUG)


def info(*args):
    if _enabled(LOG_INFO):
        to_log(*args, level=LOG_INFO)


def warning(mess):
    if _enabled(LOG_WARNING) and not _repeats[LOG_WARNING].seen(mess):
        to_log(mess, level=LOG_WARNING)


def error(mess):
    if _enabled(LOG_ERROR) and not _repeats[LOG_ERROR].seen(mess):
        to_log(mess, level=LOG_ERROR)


def fatal(mess):
    to_log(mess, level=LOG_FATAL)


def memory_str() -> str:
    if not LOG_MEMORY:
        return ''
    return 'rss {:.1f} MB'.format(psutil.Process().memory_info().rss / 2 ** 20)


def progress(message: str, start: float, total: int, done: int):
    """ Message followed by elapsed time, time left and resident memory """
    info('{}, elapsed {}, eta {} {}'.format(
        message, elapsed_str(start), estimated_str(start, total, done, left=True), memory_str()).rstrip())


def total_time(start_time: float = None):
    if start_time is None:
        start_time = _settings.get('started', time())
    info('Total time: {}'.format(elapsed_str(start_time)))


def destroy():
    global _log, _repeats
    detach_run()
    if not _log:
        return
    for handler in _log.handlers[:]:
        handler.close()
        _log.removeHandler(handler)
    for log_filter in _log.filters[:]:
        _log.removeFilter(log_filter)
    _log = None
    _settings.clear()
    _repeats = _new_repeats()


def get_log_filepath() -> str:
    return _settings.get('current_file', 'N/A')


def _new_repeats() -> Dict[int, _Repeats]:
    return {LOG_WARNING: _Repeats('warning'), LOG_ERROR: _Repeats('error')}


_log = None  # type: Optional[logging.Logger]
_repeats = _new_repeats()
