ERR_OK = 0

# codes 2 - 4 double as process exit codes
ERR_CONFIG = 2
ERR_DATA = 3
ERR_NUMERIC = 4

ERR_SHAPE = 10
ERR_UNSUPPORTED = 11
ERR_FORMAT = 12
ERR_DEGENERATE_TARGET = 13
ERR_ROLLOUT_DIVERGED = 14
ERR_TRAINING_DIVERGED = 15

ERR_CUSTOM = 999

ERRORS = {
    ERR_OK: '',
    ERR_CONFIG: 'Invalid configuration',
    ERR_DATA: 'Data error',
    ERR_NUMERIC: 'Numeric error',
    ERR_SHAPE: 'Shape mismatch',
    ERR_UNSUPPORTED: 'Unsupported operation',
    ERR_FORMAT: 'Malformed file',
    ERR_DEGENERATE_TARGET: 'Target has zero norm',
    ERR_ROLLOUT_DIVERGED: 'Rollout diverged',
    ERR_TRAINING_DIVERGED: 'Training diverged',
}


def get_error_text(err_code) -> str:
    return ERRORS.get(err_code, 'Unknown error code ({})'.format(err_code))


def add_errors(*args):
    for index, src in enumerate(args):
        if ERRORS.keys() & src.keys():
            raise ValueError('Source #{} has duplicate error codes'.format(index))
        ERRORS.update(src)
