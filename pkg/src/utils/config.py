import os

from dotenv import load_dotenv

# Load the .env file (this must come before reading environment variables)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
load_dotenv(dotenv_path=os.path.join(BASE_DIR, ".env"))


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")
    return value


LOG_LEVEL = os.getenv("PHOTOYIELD_LOG_LEVEL", "INFO").upper()
MAX_WORKERS = max(1, _int_from_env("PHOTOYIELD_MAX_WORKERS", os.cpu_count() or 1))
DEFAULT_SEED = _int_from_env("PHOTOYIELD_SEED", 12345)
