from surrogate_tools.decorators import (
    ConfigError, DataError, NumericError, ShapeError, SurrogateError, UnsupportedError)
from surrogate_tools.errors import ERR_CONFIG, ERR_DATA, ERR_NUMERIC, ERR_OK

EXIT_OK = ERR_OK
EXIT_CONFIG = ERR_CONFIG
EXIT_DATA = ERR_DATA
EXIT_NUMERIC = ERR_NUMERIC

# checked in order, subclasses first
EXIT_CODES = (
    (ConfigError, EXIT_CONFIG),
    (ShapeError, EXIT_CONFIG),
    (UnsupportedError, EXIT_CONFIG),
    (DataError, EXIT_DATA),
    (NumericError, EXIT_NUMERIC),
    (OSError, EXIT_DATA),
)


def get_exit_code(error: BaseException) -> int:
    """
    Returns process exit code by given exception

    **Params:**

        :param error: exception raised by a command
        :return: 2 config error, 3 data error, 4 numeric divergence
    """
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    if isinstance(error, SurrogateError):
        return EXIT_CONFIG
    raise error
