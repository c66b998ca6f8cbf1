import logging

from rich.logging import RichHandler

from log_utils import progress_disabled, setup_logging


def test_setup_logging_installs_one_handler_and_updates_the_level():
    root = logging.getLogger()
    level = root.level
    try:
        setup_logging('WARNING')
        setup_logging('DEBUG')
        assert root.level == logging.DEBUG
        assert sum(isinstance(handler, RichHandler) for handler in root.handlers) == 1
    finally:
        root.setLevel(level)


def test_progress_disabled_follows_the_info_level():
    logger = logging.getLogger('train_utils.progress_check')
    logger.setLevel(logging.WARNING)
    assert progress_disabled(logger)
    logger.setLevel(logging.INFO)
    assert not progress_disabled(logger)
