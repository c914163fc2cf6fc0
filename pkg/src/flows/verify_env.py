import importlib
import os

from src.config import settings
from src.utils.utils import get_worker_count

REQUIRED_PACKAGES = ("numpy", "pandas", "scipy", "PIL", "pydantic", "tqdm", "click")


def verify_env_setup():

    print(f"\n🔧 Environment Setup:")
    print("=" * 50)

    threads = os.getenv("SANLITE_THREADS")
    print(f"SANLITE_THREADS: {threads if threads else '(unset, using CPU count)'}")
    print(f"SANLITE_LOG_LEVEL: {settings.LOG_LEVEL}")
    print(f"SANLITE_OUTPUT_DIR: {settings.OUTPUT_DIR}")
    print(f"SANLITE_CHECK_FINITE: {'✅ On' if settings.CHECK_FINITE else '⚠️ Off'}")

    # Worker cap must parse before any parallel stage runs
    try:
        workers = get_worker_count()
    except EnvironmentError as e:
        print(f"\n❌ {e}")
        print(f"\n💡 To cap worker threads, add to your .env file:")
        print(f"   SANLITE_THREADS=4")
        raise
    print(f"Workers: ✅ {workers}")

    missing_packages = []
    for name in REQUIRED_PACKAGES:
        try:
            importlib.import_module(name)
        except ImportError:
            missing_packages.append(name)

    if missing_packages:
        error_msg = f"Missing required packages: {', '.join(missing_packages)}"
        print(f"\n❌ {error_msg}")
        print(f"\n💡 Install them with: pip install -r requirements.txt")
        raise EnvironmentError(error_msg)

    print("✅ Required packages importable")
    return workers
