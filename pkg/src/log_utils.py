import logging

from rich.logging import RichHandler

_configured = False


def setup_logging(level='INFO'):
    """
        Install a single rich handler on the root logger.

        Calling it again only changes the level, so the CLI and the web UI can both call it.

        Args:
            level (str | int): The logging level.
    """
    global _configured

    root = logging.getLogger()
    root.setLevel(level)

    if not _configured:
        handler = RichHandler(rich_tracebacks=False, show_path=False, markup=False)
        handler.setFormatter(logging.Formatter('%(message)s', datefmt='[%X]'))
        root.addHandler(handler)
        _configured = True


def progress_disabled(logger):
    # tqdm bars only make sense when INFO messages are shown too
    return not logger.isEnabledFor(logging.INFO)
