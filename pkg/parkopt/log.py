import logging
import logging.config

logger = logging.getLogger("parkopt")
error_logger = logging.getLogger("parkopt.error")

LOGGING_CONFIG_DEFAULTS = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "generic": {
            "format": "%(asctime)s [%(process)d] [%(levelname)s] %(message)s",
            "datefmt": "[%Y-%m-%d %H:%M:%S %z]",
        }
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "generic",
            "stream": "ext://sys.stdout",
        },
        "error_console": {
            "class": "logging.StreamHandler",
            "formatter": "generic",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "parkopt": {"level": "INFO", "handlers": ["console"]},
        "parkopt.error": {
            "level": "INFO",
            "handlers": ["error_console"],
            "propagate": False,
        },
    },
}


def configure_logging(level: str = "INFO") -> None:
    """
    Applies :code:`LOGGING_CONFIG_DEFAULTS` with both parkopt loggers
    set to `level`.
    """
    config = {
        **LOGGING_CONFIG_DEFAULTS,
        "loggers": {
            name: {**conf, "level": level.upper()}
            for name, conf in LOGGING_CONFIG_DEFAULTS["loggers"].items()
        },
    }
    logging.config.dictConfig(config)
