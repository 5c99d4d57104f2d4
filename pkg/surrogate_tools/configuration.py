"""
Environment settings (log location, sweep workers, ...), not experiment configs.

Lookup order for a key: environment variable SURROGATE_<KEY>, then the requested section, then the section named by
ENVIRONMENT_SECTION, then [common]. Sections come from etc/surrogate.cfg merged with etc/surrogate-local.cfg.
"""
import os
from os.path import dirname, join, realpath
from typing import Any, Callable, Dict, Optional

from configobj import ConfigObj

DEFAULT_SECTION = 'common'
ROOT_ENV = 'SURROGATE_ROOT'
ENV_PREFIX = 'SURROGATE_'
CFG_FILES = ('surrogate.cfg', 'surrogate-local.cfg')

_BOOLS = {'true': True, 'false': False}


def _to_bool(value) -> bool:
    result = _BOOLS.get(str(value).strip().lower())
    if result is None:
        raise ValueError('"{}" is not "true" or "false"'.format(value))
    return result


CASTS = {bool: _to_bool}  # type: Dict[Any, Callable]


class ConfigEnv:
    def __init__(self, root_path: str = None):
        root_path = root_path or os.environ.get(ROOT_ENV) or dirname(dirname(realpath(__file__)))
        self._files = [join(root_path, 'etc', name) for name in CFG_FILES]
        self._cfg = ConfigObj()
        self._env_section = DEFAULT_SECTION
        self.reload()

    def reload(self):
        merged = ConfigObj()
        for path in self._files:
            merged.merge(ConfigObj(path))
        self._cfg = merged
        self._refresh()

    def _refresh(self):
        common = self._cfg.get(DEFAULT_SECTION) or {}
        self._env_section = common.get('ENVIRONMENT_SECTION') or DEFAULT_SECTION

    def _lookup(self, value_name: str, section_name: str) -> Optional[Any]:
        env_value = os.environ.get(ENV_PREFIX + value_name)
        if env_value is not None:
            return env_value
        for name in (section_name, self._env_section, DEFAULT_SECTION):
            section = self._cfg.get(name)
            if section and section.get(value_name) is not None:
                return section[value_name]
        return None

    def get_value(self, value_name: str, section_name: str = DEFAULT_SECTION, cast=None, default=None):
        value = self._lookup(value_name, section_name)
        if value is None:
            return default
        if cast is None:
            return value
        try:
            return CASTS.get(cast, cast)(value)
        except (TypeError, ValueError) as e:
            raise ValueError('Setting {}: {}'.format(value_name, e))

    def get_section_raw(self, section_name: str) -> Dict:
        section = self._cfg.get(section_name)
        return section.dict() if section else {}

    def patch_cfg(self, patch: Dict):
        for section_name, values in patch.items():
            section = self._cfg.setdefault(section_name, {})
            for key, value in values.items():
                section[key] = value
        self._refresh()


def cfg_value(value_name: str, section_name: str = DEFAULT_SECTION, cast=None, default=None):
    return _cfg_obj.get_value(value_name, section_name, cast, default)


def cfg_reload():
    _cfg_obj.reload()


def cfg_section_raw(section_name: str) -> Dict:
    return _cfg_obj.get_section_raw(section_name)


class PatchCfg:
    """ Temporary in-memory settings, files are reloaded on exit """

    def __init__(self, patch: Dict):
        self._patch = patch

    def __enter__(self):
        _cfg_obj.patch_cfg(self._patch)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _cfg_obj.reload()


_cfg_obj = ConfigEnv()
