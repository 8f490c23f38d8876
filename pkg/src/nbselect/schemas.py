"""Request/response models for the scoring service."""

from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel, Field, model_validator


class DataSource(BaseModel):
    """Where the dataset comes from and how to prepare it.

    Exactly one of ``path`` (a file on the service host) or ``csv_text``
    (inline CSV content) must be given.
    """

    path: Optional[str] = None
    csv_text: Optional[str] = None
    class_column: Union[str, int] = Field(description="class column name or index")
    bins: int = 5
    missing_markers: list[str] = ["?", ""]
    discretize_seed: int = 0

    @model_validator(mode="after")
    def _one_source(self) -> "DataSource":
        if (self.path is None) == (self.csv_text is None):
            raise ValueError("exactly one of path or csv_text must be set")
        return self


class CriterionOptions(BaseModel):
    criterion: str
    loss: Optional[str] = None
    folds: Optional[int] = None
    orderings: Optional[int] = None
    seed: int = 0


class DiscretizeRequest(BaseModel):
    data: DataSource


class ColumnInfo(BaseModel):
    name: str
    kind: str
    cardinality: int
    categories: list[str]
    is_class: bool


class DiscretizeResponse(BaseModel):
    tool: dict
    config: dict
    n_rows: int
    columns: list[ColumnInfo]
    csv_text: str


class ScoreRequest(BaseModel):
    data: DataSource
    options: CriterionOptions
    structure: str = Field(description="canonical integer or comma-separated feature names")


class StructureInfo(BaseModel):
    mask: int
    features: list[str]
    score: Union[float, str, None] = None


class ScoreResponse(BaseModel):
    tool: dict
    config: dict
    criterion: str
    structure: StructureInfo


class SelectRequest(BaseModel):
    data: DataSource
    options: CriterionOptions
    workers: Optional[int] = None
    top: int = 10
    max_features: int = 14
    include_table_csv: bool = False


class SelectResponse(BaseModel):
    tool: dict
    config: dict
    criterion: str
    n_structures: int
    degenerate: bool
    best: StructureInfo
    table_top: list[StructureInfo]
    table_csv: Optional[str] = None


class ExperimentRequest(BaseModel):
    data: DataSource
    criteria: list[str]
    loss: Optional[str] = None
    repetitions: int = 50
    sample_size: Optional[int] = 500
    seed: int = 0
    workers: Optional[int] = None
    max_features: int = 14
    redraw_per_repetition: bool = False


class CompareRequest(BaseModel):
    reports: list[dict]


class VersionResponse(BaseModel):
    name: str
    version: str


__all__ = [
    "DataSource",
    "CriterionOptions",
    "DiscretizeRequest",
    "DiscretizeResponse",
    "ColumnInfo",
    "ScoreRequest",
    "ScoreResponse",
    "StructureInfo",
    "SelectRequest",
    "SelectResponse",
    "ExperimentRequest",
    "CompareRequest",
    "VersionResponse",
]
