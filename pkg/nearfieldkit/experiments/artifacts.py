#
# For licensing see accompanying LICENSE.md file.
#
""" CSV artifacts: one commented metadata line followed by the table body
"""
import os
from typing import Optional

import pandas as pd
from argmaxtools.utils import get_logger

from nearfieldkit._version import __version__
from nearfieldkit.experiments.config import ExperimentConfig

logger = get_logger(__name__)


def metadata_line(cfg: ExperimentConfig) -> str:
    return f"# nearfieldkit {__version__} config_hash={cfg.config_hash()} seed={cfg.seed}\n"


def write_csv(frame: pd.DataFrame, out_dir: Optional[str], name: str, cfg: ExperimentConfig) -> Optional[str]:
    """ Writes `frame` to out_dir/name, skipped when out_dir is None
    """
    if out_dir is None:
        return None
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as f:
        f.write(metadata_line(cfg))
        frame.to_csv(f, index=False, lineterminator="\n")
    logger.info(f"Saved {len(frame)} rows to {path}")
    return path


def read_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def read_metadata(path: str) -> dict:
    with open(path) as f:
        first = f.readline().strip()
    assert first.startswith("# nearfieldkit"), f"{path} has no metadata line"
    fields = first.split()[3:]
    return dict(field.split("=", 1) for field in fields)


def log_table(title: str, frame: pd.DataFrame) -> None:
    logger.info(f"""\n
    =======================================================
    {title}
    =======================================================
\n{frame.to_markdown(index=False)}
    """)
