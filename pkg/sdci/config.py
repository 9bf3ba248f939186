import os

from dotenv import load_dotenv

load_dotenv()

# Core application settings
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")

# Numerics
SDCI_DEFAULT_PRECISION = os.getenv("SDCI_DEFAULT_PRECISION", "float32")
SDCI_OVERFLOW_GUARD = float(os.getenv("SDCI_OVERFLOW_GUARD", "1e6"))

# Dataset generation workers; per-sample RNG streams keep output independent of this value
SDCI_NUM_THREADS = int(os.getenv("SDCI_NUM_THREADS", "1"))

# Training cadence
SDCI_CHECKPOINT_EVERY = int(os.getenv("SDCI_CHECKPOINT_EVERY", "50"))
SDCI_VALIDATE_EVERY = int(os.getenv("SDCI_VALIDATE_EVERY", "10"))

# File formats
FORMAT_VERSION = "1.0"

# Sentry configuration
SENTRY_DSN = os.getenv("SENTRY_DSN", "")
SENTRY_ENVIRONMENT = os.getenv("SENTRY_ENVIRONMENT", "development")
SENTRY_TRACES_SAMPLE_RATE = float(os.getenv("SENTRY_TRACES_SAMPLE_RATE", "0.0"))
SENTRY_LOG_LEVEL = os.getenv("SENTRY_LOG_LEVEL", "WARNING")
SENTRY_ATTACH_STACKTRACE = os.getenv("SENTRY_ATTACH_STACKTRACE", "True").lower() in (
    "true",
    "1",
    "t",
)
SENTRY_SEND_DEFAULT_PII = os.getenv("SENTRY_SEND_DEFAULT_PII", "False").lower() in (
    "true",
    "1",
    "t",
)


def num_threads() -> int:
    return max(1, SDCI_NUM_THREADS)
