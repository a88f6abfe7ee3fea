from typing import Dict, List, Optional

import pandas as pd

from parkopt.errors import IoError
from parkopt.log import error_logger

__all__ = [
    "TrajectoryStorage",
    "TrajectoryMemoryStorage",
    "TrajectoryCsvStorage",
]


class TrajectoryStorage:
    """
    Receives one row per closed slot.
    """

    def __init__(self):
        self._rows: List[Dict[str, float]] = []

    def record(self, row: Dict[str, float]) -> None:
        self._rows.append(dict(row))

    @property
    def rows(self) -> List[Dict[str, float]]:
        return list(self._rows)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self._rows)

    def close(self) -> None:
        pass


class TrajectoryMemoryStorage(TrajectoryStorage):
    """
    Keeps every row in memory.
    """


class TrajectoryCsvStorage(TrajectoryStorage):
    """
    Streams every row to a CSV file as soon as the slot closes, and
    keeps the rows in memory as well.
    """

    logger = error_logger

    def __init__(self, path: Optional[str] = None, float_format: str = "%.10g"):
        super().__init__()
        if path is None:
            raise IoError("TrajectoryCsvStorage needs a file path")
        self.path = path
        self.float_format = float_format
        self._header_written = False

    def record(self, row: Dict[str, float]) -> None:
        super().record(row)
        try:
            pd.DataFrame([row]).to_csv(
                self.path,
                mode="a" if self._header_written else "w",
                header=not self._header_written,
                index=False,
                float_format=self.float_format,
            )
        except OSError as e:
            self.logger.error(
                f"[PARKOPT] trajectory row {row.get('t')} not written", exc_info=True
            )
            raise IoError(f"cannot write {self.path}: {e}")
        self._header_written = True
