import os

import structlog
from dotenv import load_dotenv

load_dotenv()

log = structlog.get_logger()

APP_NAME = os.getenv("APP_NAME", "discountlearn")
BUILD_VERSION: str = os.getenv("BUILD_VERSION", "UNKNOWN")
ENV = os.getenv("ENV", "dev")
LOG_LEVEL = os.getenv("LOG_LEVEL", "info")
METRICS_PATH: str = os.getenv("METRICS_PATH", "")
NUM_CORES: int = os.cpu_count() or 1
SWEEP_WORKERS = int(os.getenv("SWEEP_WORKERS") or NUM_CORES)
DEFAULT_FORMAT = os.getenv("DEFAULT_FORMAT", "csv")
VERSION = os.getenv("BUILD_VERSION") or "0.1.0"
