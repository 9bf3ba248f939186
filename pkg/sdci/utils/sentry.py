import logging

import sentry_sdk
from sentry_sdk.integrations.logging import LoggingIntegration

from sdci.config import (
    SENTRY_ATTACH_STACKTRACE,
    SENTRY_DSN,
    SENTRY_ENVIRONMENT,
    SENTRY_LOG_LEVEL,
    SENTRY_SEND_DEFAULT_PII,
    SENTRY_TRACES_SAMPLE_RATE,
)


def init_sentry(command: str | None = None, custom_integrations=None) -> bool:
    """
    Initialize Sentry error reporting for a CLI run.

    Args:
        command (str): Subcommand name, attached as a tag to every event
        custom_integrations (list): Extra integration instances appended to the logging integration

    Returns:
        bool: Whether Sentry was initialized
    """
    if not SENTRY_DSN:
        logging.getLogger(__name__).debug("Sentry DSN is not set, skipping initialization")
        return False

    log_level = getattr(logging, SENTRY_LOG_LEVEL, logging.WARNING)

    # INFO and above become breadcrumbs; records at SENTRY_LOG_LEVEL and above become events
    sentry_logging = LoggingIntegration(level=logging.INFO, event_level=log_level)
    integrations = [sentry_logging] + list(custom_integrations or [])

    sentry_sdk.init(
        dsn=SENTRY_DSN,
        environment=SENTRY_ENVIRONMENT,
        traces_sample_rate=SENTRY_TRACES_SAMPLE_RATE,
        integrations=integrations,
        attach_stacktrace=SENTRY_ATTACH_STACKTRACE,
        send_default_pii=SENTRY_SEND_DEFAULT_PII,
        in_app_include=["sdci"],
    )
    if command:
        sentry_sdk.set_tag("command", command)

    return True
