"""FastAPI service wrapping the core package.

Stateless: every request carries its dataset (a host path or inline CSV)
and full configuration, and every response echoes the resolved config plus
the tool version, so any result can be replayed from its own header.
Usage errors map to 422, data/runtime errors to 400.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .criteria import criterion_label, evaluate_criterion, parse_criterion, spec_to_dict
from .dataset import Dataset, load_csv, load_csv_text
from .errors import UsageError
from .experiment import compare_reports, run_experiment
from .model import parse_structure
from .schemas import (
    ColumnInfo,
    CompareRequest,
    DataSource,
    DiscretizeRequest,
    DiscretizeResponse,
    ExperimentRequest,
    ScoreRequest,
    ScoreResponse,
    SelectRequest,
    SelectResponse,
    StructureInfo,
    VersionResponse,
)
from .search import select_best, table_to_csv

app = FastAPI(title="nbselect service", version=__version__)

_TOOL = {"name": "nbselect", "version": __version__}


@app.exception_handler(UsageError)
async def _usage_error(request: Request, exc: UsageError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(FileNotFoundError)
async def _missing_file(request: Request, exc: FileNotFoundError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": f"file not found: {exc.filename}"})


def _load(source: DataSource) -> Dataset:
    kwargs = dict(
        bins=source.bins,
        missing_markers=tuple(source.missing_markers),
        seed=source.discretize_seed,
    )
    if source.path is not None:
        return load_csv(source.path, source.class_column, **kwargs)
    return load_csv_text(source.csv_text, source.class_column, **kwargs)


def _data_config(source: DataSource) -> dict:
    return {
        "data": source.path,
        "class_column": source.class_column,
        "bins": source.bins,
        "missing_markers": list(source.missing_markers),
        "discretize_seed": source.discretize_seed,
    }


def _json_score(x: float) -> float | str:
    return x if math.isfinite(x) else repr(x)


@app.get("/version", response_model=VersionResponse)
def version() -> VersionResponse:
    return VersionResponse(name="nbselect", version=__version__)


@app.post("/discretize", response_model=DiscretizeResponse)
def discretize(req: DiscretizeRequest) -> DiscretizeResponse:
    data = _load(req.data)
    columns = [
        ColumnInfo(
            name=var.name,
            kind=var.kind,
            cardinality=var.cardinality,
            categories=list(var.categories),
            is_class=(i == data.schema.class_index),
        )
        for i, var in enumerate(data.schema.variables)
    ]
    header = ",".join(var.name for var in data.schema.variables)
    lines = [header]
    for row in data.rows:
        lines.append(
            ",".join(data.schema.variables[j].categories[row[j]] for j in range(len(row)))
        )
    return DiscretizeResponse(
        tool=_TOOL,
        config=_data_config(req.data),
        n_rows=data.n_rows,
        columns=columns,
        csv_text="\n".join(lines) + "\n",
    )


@app.post("/score", response_model=ScoreResponse)
def score(req: ScoreRequest) -> ScoreResponse:
    data = _load(req.data)
    spec = parse_criterion(
        req.options.criterion,
        loss=req.options.loss,
        folds=req.options.folds,
        orderings=req.options.orderings,
        seed=req.options.seed,
    )
    structure = parse_structure(req.structure, data.schema.feature_names)
    value = evaluate_criterion(data, structure, spec)
    return ScoreResponse(
        tool=_TOOL,
        config={**_data_config(req.data), "criterion": spec_to_dict(spec)},
        criterion=criterion_label(spec),
        structure=StructureInfo(
            mask=structure.mask,
            features=structure.feature_names(data.schema),
            score=_json_score(value),
        ),
    )


@app.post("/select", response_model=SelectResponse)
def select(req: SelectRequest) -> SelectResponse:
    data = _load(req.data)
    spec = parse_criterion(
        req.options.criterion,
        loss=req.options.loss,
        folds=req.options.folds,
        orderings=req.options.orderings,
        seed=req.options.seed,
    )
    result = select_best(data, spec, workers=req.workers, cap=req.max_features)
    entries = result.table.entries
    best_score = entries[result.best.mask][1]
    ranked = sorted(entries, key=lambda e: (-e[1], e[0].size, e[0].mask))
    top = [
        StructureInfo(
            mask=s.mask, features=s.feature_names(data.schema), score=_json_score(val)
        )
        for s, val in ranked[: max(req.top, 0)]
    ]
    return SelectResponse(
        tool=_TOOL,
        config={
            **_data_config(req.data),
            "criterion": spec_to_dict(spec),
            "workers": req.workers,
            "max_features": req.max_features,
        },
        criterion=criterion_label(spec),
        n_structures=len(entries),
        degenerate=result.degenerate,
        best=StructureInfo(
            mask=result.best.mask,
            features=result.best.feature_names(data.schema),
            score=_json_score(best_score),
        ),
        table_top=top,
        table_csv=(
            table_to_csv(result.table, data.schema.feature_names)
            if req.include_table_csv
            else None
        ),
    )


@app.post("/experiment")
def experiment(req: ExperimentRequest) -> dict:
    data = _load(req.data)
    specs = [
        parse_criterion(name.strip(), loss=req.loss, seed=req.seed)
        for name in req.criteria
        if name.strip()
    ]
    if not specs:
        raise UsageError("no criteria given")
    return run_experiment(
        data,
        specs,
        repetitions=req.repetitions,
        sample_size=req.sample_size,
        seed=req.seed,
        workers=req.workers,
        cap=req.max_features,
        redraw_per_repetition=req.redraw_per_repetition,
        extra_config=_data_config(req.data),
    )


@app.post("/compare")
def compare(req: CompareRequest) -> dict:
    return compare_reports(req.reports)
