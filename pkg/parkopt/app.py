import os
from typing import Any, List, Optional

import yaml

from parkopt.conf import Settings, settings as default_settings
from parkopt.guard import patch
from parkopt.log import configure_logging
from parkopt.utils import load_from_path


class ParkOpt:
    @classmethod
    def load_config(cls, settings: Settings) -> None:
        from . import config

        for c in dir(config):
            if c.isupper() and c not in vars(settings):
                conf = getattr(config, c)
                if c in os.environ:
                    conf = cls._from_environment(os.environ[c], conf)
                setattr(settings, c, conf)

    @staticmethod
    def _from_environment(raw: str, default: Any) -> Any:
        value = yaml.safe_load(raw)
        if isinstance(default, str) and not isinstance(value, str):
            if not isinstance(value, (int, float)):
                return raw
        if isinstance(default, float) and isinstance(value, int):
            return float(value)
        return value

    @classmethod
    def attach_listeners(cls, settings: Settings) -> List[Any]:
        return [
            load_from_path(path)() for path in settings.PARKOPT_SCHEDULER_LISTENERS
        ]

    @classmethod
    def init_app(
        cls,
        settings: Settings = default_settings,
        settings_file: Optional[str] = None,
    ) -> None:
        """
        The initial entrypoint to initialize parkopt.

        #.  Loads a YAML settings file, if given, over the environment.
        #.  Loads parkopt specific configurations for anything not set.
        #.  Configures the parkopt loggers at :code:`PARKOPT_LOG_LEVEL`.
        #.  Patches the scheduler so every closed slot and every hub
            response is checked against the storage bounds.
        """
        if settings_file:
            settings.load_yaml(settings_file)
        cls.load_config(settings)
        configure_logging(settings.PARKOPT_LOG_LEVEL)
        patch()
