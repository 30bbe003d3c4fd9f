import logging
import os
from pathlib import Path
from typing import Optional, Union

FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def debug_requested(flag: bool = False) -> bool:
    return flag or os.getenv('FRZ_DEBUG', 'false').lower() == 'true'


def setup_forensics_logging(logs_dir: Union[str, Path] = 'logs', console_level: int = logging.INFO) -> Optional[Path]:
    """DEBUG to logs/forensics.log plus console output on the 'forensics' logger; idempotent"""
    forensics_logger = logging.getLogger('forensics')
    if getattr(forensics_logger, '_frz_configured', False):
        return None

    logs_dir = Path(logs_dir)
    logs_dir.mkdir(parents=True, exist_ok=True)
    log_path = logs_dir / 'forensics.log'
    forensics_logger.setLevel(logging.DEBUG)
    formatter = logging.Formatter(FORMAT)

    file_handler = logging.FileHandler(log_path)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    forensics_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(console_level)
    console_handler.setFormatter(formatter)
    forensics_logger.addHandler(console_handler)

    forensics_logger._frz_configured = True
    forensics_logger.info(f"Forensics logging enabled - detailed debug information will be logged to {log_path}")
    return log_path
