"""
Pydantic models for experiment configuration and report rows.
"""

from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Optional

import numpy as np
import numpy.typing as npt
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..numerics.potentials import ChirpedSechParams
from ..numerics.schemes import PRODUCTION_SCHEMES, SchemeId

REPORT_COLUMNS = ["scheme", "M", "xi", "metric", "value"]


class ExperimentCommand(str, Enum):
    """Experiment reproduced by a CLI subcommand."""
    SCAN = "scan"
    ORDER = "order"
    ENERGY = "energy"
    DISCRETE = "discrete"
    PARSEVAL = "parseval"


# Grid sweeps used when no --M is given
DEFAULT_NODES: Dict[ExperimentCommand, List[int]] = {
    ExperimentCommand.SCAN: [2 ** 9, 2 ** 10, 2 ** 11, 2 ** 12],
    ExperimentCommand.ORDER: [2 ** 10, 2 ** 11],
    ExperimentCommand.ENERGY: [2 ** 12],
    ExperimentCommand.DISCRETE: [2 ** 11],
    ExperimentCommand.PARSEVAL: [2 ** 12],
}


class ExperimentConfig(BaseModel):
    """Validated parameters of one experiment run."""
    model_config = ConfigDict(extra="forbid")

    command: ExperimentCommand
    amplitude: float = Field(5.25, ge=0)
    chirp: float = 0.0
    signal_file: Optional[Path] = None
    sigma: Literal[1, -1] = 1
    length: float = Field(30.0, gt=0)
    nodes: List[int] = Field(default_factory=lambda: [2 ** 11], min_length=1)
    schemes: List[SchemeId] = Field(default_factory=lambda: list(PRODUCTION_SCHEMES), min_length=1)
    xi_min: float = -20.0
    xi_max: float = 20.0
    xi_points: int = Field(1025, ge=1)
    output: Optional[Path] = None
    output_format: Literal["csv", "json"] = "csv"
    threads: int = Field(0, ge=0)
    oracle_only: bool = False
    amplitude_sweep: Optional[List[float]] = None
    levels: int = Field(4, ge=2)

    @field_validator("nodes")
    @classmethod
    def _nodes_increasing(cls, nodes: List[int]) -> List[int]:
        if any(m < 1 for m in nodes):
            raise ValueError(f"every M must be at least 1, got {nodes}")
        if any(b <= a for a, b in zip(nodes, nodes[1:])):
            raise ValueError(f"M values must be strictly increasing, got {nodes}")
        return nodes

    @field_validator("schemes")
    @classmethod
    def _schemes_runnable(cls, schemes: List[SchemeId]) -> List[SchemeId]:
        if len(set(schemes)) != len(schemes):
            raise ValueError(f"schemes must be unique, got {[s.value for s in schemes]}")
        if SchemeId.TAYLOR4 in schemes:
            raise ValueError("taylor4 needs analytic derivatives of q and is not an experiment scheme")
        return schemes

    @field_validator("amplitude_sweep")
    @classmethod
    def _sweep_valid(cls, sweep: Optional[List[float]]) -> Optional[List[float]]:
        if sweep is not None and (not sweep or any(a < 0 for a in sweep)):
            raise ValueError("amplitude sweep must hold non-negative amplitudes")
        return sweep

    @model_validator(mode="after")
    def _xi_range(self) -> "ExperimentConfig":
        if self.xi_points > 1 and not self.xi_min < self.xi_max:
            raise ValueError(f"xi_min must be below xi_max, got [{self.xi_min}, {self.xi_max}]")
        return self

    @property
    def params(self) -> ChirpedSechParams:
        return ChirpedSechParams(self.amplitude, self.chirp)

    @property
    def xi_grid(self) -> npt.NDArray[np.float64]:
        if self.xi_points == 1:
            return np.array([self.xi_min])
        return np.linspace(self.xi_min, self.xi_max, self.xi_points)


class ReportRow(BaseModel):
    """One (scheme, M, xi, metric) value of a report."""
    model_config = ConfigDict(populate_by_name=True, ser_json_inf_nan="constants")

    scheme: str
    nodes: int = Field(..., alias="M")
    xi: Optional[float] = None
    metric: str
    value: float


class ExperimentReport(BaseModel):
    """Rows of one experiment plus the configuration that produced them."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    config: ExperimentConfig
    rows: List[ReportRow] = []
    wall_clock: Dict[str, float] = {}
    created_at: datetime = Field(default_factory=datetime.now)

    def add(self, scheme: str, nodes: int, metric: str, value: float, xi: Optional[float] = None):
        self.rows.append(ReportRow(scheme=scheme, nodes=nodes, xi=xi, metric=metric, value=float(value)))

    def to_frame(self) -> pd.DataFrame:
        return rows_to_frame(self.rows)

    def values(self, metric: str, scheme: Optional[str] = None, nodes: Optional[int] = None) -> List[float]:
        """Values of one metric, optionally restricted to a scheme and M."""
        return [
            row.value
            for row in self.rows
            if row.metric == metric
            and (scheme is None or row.scheme == scheme)
            and (nodes is None or row.nodes == nodes)
        ]


def rows_to_frame(rows: List[ReportRow]) -> pd.DataFrame:
    """Rows as a DataFrame with the columns scheme, M, xi, metric, value."""
    records = [row.model_dump(by_alias=True) for row in rows]
    return pd.DataFrame.from_records(records, columns=REPORT_COLUMNS).astype({"xi": "float64", "value": "float64"})
