"""
Logging Configuration

This module configures logging for the Iris Quality Toolkit.
It sets up component loggers and handles log rotation.
"""

import logging
import logging.handlers
from pathlib import Path
from datetime import datetime

COMPONENT_LOGGERS = (
    'src.core_model',
    'src.factors',
    'src.dfs_metric',
    'src.predictor',
    'src.evaluation',
    'src.synth',
    'cli',
)


def setup_logging(log_level="INFO", log_file=None, max_size_mb=10, backup_count=5):
    """
    Setup logging configuration for the application.

    Args:
        log_level (str): Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file (str): Path to log file, or None for console only
        max_size_mb (int): Maximum log file size in MB
        backup_count (int): Number of backup log files to keep

    Returns:
        dict: Component name to logger
    """
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

    level = getattr(logging, str(log_level).upper(), logging.INFO)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    # Console output goes to stderr so stdout stays clean for tables
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=max_size_mb * 1024 * 1024,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    loggers = {name: logging.getLogger(name) for name in COMPONENT_LOGGERS}
    for logger in loggers.values():
        logger.setLevel(level)

    startup_logger = logging.getLogger('startup')
    startup_logger.debug("=" * 60)
    startup_logger.debug("Iris Quality Toolkit - startup")
    startup_logger.debug(f"Log level: {log_level}")
    startup_logger.debug(f"Log file: {log_file}")
    startup_logger.debug(f"Timestamp: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    startup_logger.debug("=" * 60)

    return loggers


def get_logger(name):
    """
    Get a logger instance for a specific component.

    Args:
        name (str): Logger name (component name)

    Returns:
        logging.Logger: Logger instance
    """
    return logging.getLogger(name)


def log_function_call(logger, function_name):
    """
    Decorator to log calls of a pipeline step at DEBUG level.

    Args:
        logger: Logger instance
        function_name (str): Name shown in the log line
    """
    def decorator(func):
        def wrapper(*args, **kwargs):
            logger.debug(f"Calling {function_name}")
            try:
                result = func(*args, **kwargs)
                logger.debug(f"{function_name} finished")
                return result
            except Exception as e:
                logger.error(f"Error in {function_name}: {e}")
                raise
        wrapper.__name__ = getattr(func, '__name__', function_name)
        wrapper.__doc__ = func.__doc__
        return wrapper
    return decorator


def log_performance_metric(logger, metric_name, value, context=None):
    """
    Log a numeric metric (loss, EER, correlation) for monitoring.

    Args:
        logger: Logger instance
        metric_name (str): Name of the metric
        value (float): Metric value
        context (str): Where the metric came from (epoch, quality field, ...)
    """
    logger.info(f"Metric - {metric_name}: {value:.6g}, Context: {context}")


def log_dataset_event(logger, event, path, count=None):
    """
    Log an artifact read or write.

    Args:
        logger: Logger instance
        event (str): What happened (wrote manifest, loaded checkpoint, ...)
        path: File involved
        count (int): Number of records or items, if applicable
    """
    logger.info(f"Dataset Event - {event}: {path}, Count: {count}")
