import logging
import sys

from app.core.services.config import settings


def setup_logger(name: str = "flowsense", force: bool = False) -> logging.Logger:
    """
    Configure and return the library logger.
    """
    logger = logging.getLogger(name)

    level = getattr(logging, settings.log_level.upper(), logging.INFO)
    logger.setLevel(level)

    # Avoid duplicate handlers
    if logger.handlers and not force:
        return logger

    if force:
        logger.handlers.clear()

    logger.propagate = False

    formatter = logging.Formatter(
        "[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    try:
        from rich.console import Console
        from rich.logging import RichHandler

        # messages carry matrix shapes and item lists in brackets
        handler = RichHandler(
            console=Console(stderr=True),
            rich_tracebacks=True,
            markup=False,
            show_path=False,
        )
    except ImportError:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(formatter)

    handler.setLevel(level)
    logger.addHandler(handler)
    logger.debug(f"Logger '{name}' configured at level {logging.getLevelName(level)}")

    return logger


logger = setup_logger()
