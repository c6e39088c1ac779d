# app/config/settings.py

import logging
import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel

load_dotenv()


class Settings(BaseModel):
    out_dir: Path = Path("results")
    log_level: str = "INFO"
    sweep_workers: int = 4


@lru_cache
def get_settings() -> Settings:
    return Settings(
        out_dir=Path(os.getenv("SLIPT_OUT_DIR", "results")),
        log_level=os.getenv("SLIPT_LOG_LEVEL", "INFO").upper(),
        sweep_workers=int(os.getenv("SLIPT_SWEEP_WORKERS", "4")),
    )


def configure_logging(level: str = None) -> None:
    logging.basicConfig(
        level=level or get_settings().log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
