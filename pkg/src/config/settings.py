"""Configuration settings for the SAN-lite pipeline"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Base directory
BASE_DIR = Path(__file__).parent.parent.parent

# Bundled configs
CONFIG_DIR = BASE_DIR / "configs"
DESK_CONFIG_PATH = CONFIG_DIR / "desk.json"

# Runtime settings
OUTPUT_DIR = Path(os.getenv("SANLITE_OUTPUT_DIR", str(BASE_DIR / "runs" / "default")))
LOG_LEVEL = os.getenv("SANLITE_LOG_LEVEL", "INFO")
THREADS = os.getenv("SANLITE_THREADS")
CHECK_FINITE = os.getenv("SANLITE_CHECK_FINITE", "1") not in ("0", "false", "False", "")
