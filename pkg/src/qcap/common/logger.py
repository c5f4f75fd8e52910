import logging
import time
from contextlib import contextmanager
from typing import Iterator, Optional

# One logger for the whole package, library modules import it from here
logger = logging.getLogger("qcap")

# Records at INFO and above are kept: finished bounds, windows, report paths
logger.setLevel(logging.INFO)

# The console only shows errors unless --debug or --log_level asks for more,
# DEBUG follows H_min brackets and subspace-search improvements
stream_handler = logging.StreamHandler()
stream_handler.setLevel(logging.ERROR)
stream_handler.setFormatter(
    logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
)
logger.addHandler(stream_handler)


def set_level(
    logger_level: Optional[str | int] = None, print_level: Optional[str | int] = None
):
    """Change the logger level and the console level.

    An unknown level is reported as a warning and both levels stay as they were.

    Args:
        logger_level (str | int, optional): minimum level recorded by the logger.
        print_level (str | int, optional): minimum level printed to the console.
    """
    old = logger.level, stream_handler.level
    try:
        if logger_level:
            logger.setLevel(logger_level)
        if print_level:
            stream_handler.setLevel(print_level)
    except (ValueError, TypeError) as e:
        logger.setLevel(old[0])
        stream_handler.setLevel(old[1])
        names = ",".join(logging.getLevelName(n) for n in range(10, 60, 10))
        logger.warning(f"{e}; available levels: {names}")
        logger.warning(
            f"keep logger level {logging.getLevelName(old[0])}, "
            f"print level {logging.getLevelName(old[1])}"
        )


@contextmanager
def timed(label: str) -> Iterator[None]:
    """Log the wall time of the enclosed block at INFO."""
    start = time.perf_counter()
    try:
        yield
    finally:
        logger.info(f"{label} took {time.perf_counter() - start:.2f}s")
