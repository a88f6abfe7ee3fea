from typing import Any

import yaml

from parkopt.errors import InvalidConfig


class Settings:
    """
    Runtime settings.  Values configured explicitly win over
    :code:`PARKOPT_*` environment variables, which win over the
    defaults in :mod:`parkopt.config`.  Defaults are loaded on first
    access if :meth:`parkopt.ParkOpt.load_config` has not run yet.
    """

    def __getattr__(self, name: str) -> Any:
        if name.isupper() and not name.startswith("_"):
            from parkopt.app import ParkOpt

            ParkOpt.load_config(self)
            if name in vars(self):
                return vars(self)[name]
        raise AttributeError(name)

    def configure(self, **options) -> None:
        for key, value in options.items():
            if not key.isupper():
                raise InvalidConfig("setting names must be uppercase", field=key)
            setattr(self, key, value)

    def load_yaml(self, path: str) -> None:
        """
        Overrides settings with the uppercase keys of a YAML mapping.
        """
        with open(path, encoding="utf8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise InvalidConfig("settings file must hold a mapping", field=path)
        self.configure(**{str(k).upper(): v for k, v in data.items()})

    def reset(self) -> None:
        vars(self).clear()


settings = Settings()
