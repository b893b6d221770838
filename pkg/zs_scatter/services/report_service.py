"""
Report emission and re-reading.

CSV rows carry the header scheme,M,xi,metric,value with 17 significant
digits; JSON mirrors the rows as an array of objects.
"""

import logging
from pathlib import Path
from typing import List, Union

import pandas as pd
from pydantic import TypeAdapter

from ..errors import ConfigError, ParseError
from ..schemas.experiment import REPORT_COLUMNS, ReportRow, rows_to_frame

logger = logging.getLogger(__name__)

ROWS_ADAPTER = TypeAdapter(List[ReportRow])


class ReportService:
    """Writes report rows to CSV or JSON and reads them back."""

    FORMATS = ("csv", "json")

    def __init__(self, output_format: str = "csv"):
        if output_format not in self.FORMATS:
            raise ConfigError(f"Unknown output format {output_format!r}, expected one of {self.FORMATS}")
        self.output_format = output_format

    def render(self, rows: List[ReportRow]) -> str:
        """Serialise rows in the configured format."""
        if self.output_format == "json":
            return ROWS_ADAPTER.dump_json(rows, by_alias=True, indent=2).decode("utf-8")
        return rows_to_frame(rows).to_csv(index=False, float_format="%.17g")

    def write(self, rows: List[ReportRow], path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(rows), encoding="utf-8")
        logger.info(f"Wrote {len(rows)} rows to {path} ({self.output_format})")
        return path

    def read(self, path: Union[str, Path]) -> List[ReportRow]:
        """
        Parse a report written by write().

        Raises:
            ParseError: the file does not hold report rows
        """
        path = Path(path)
        try:
            if self.output_format == "json":
                return ROWS_ADAPTER.validate_json(path.read_bytes())
            frame = pd.read_csv(path, float_precision="round_trip", dtype={"scheme": str, "metric": str})
        except (ValueError, pd.errors.ParserError) as e:
            raise ParseError(f"Cannot read report {path}: {e}") from e
        if list(frame.columns) != REPORT_COLUMNS:
            raise ParseError(f"Report {path} has columns {list(frame.columns)}, expected {REPORT_COLUMNS}")
        records = frame.to_dict(orient="records")
        for record in records:
            if pd.isna(record["xi"]):
                record["xi"] = None
        return [ReportRow.model_validate(record) for record in records]

