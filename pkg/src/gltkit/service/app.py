"""FastAPI service exposing the experiment registry.

One POST endpoint per experiment; the response carries the result table,
summary statistics, and any artifacts (file contents) so that clients can
materialize them locally.  Compute runs synchronously in the request:
every experiment is a deterministic batch computation sized for
interactive use.

Note: no ``from __future__ import annotations`` here; the endpoints are
built dynamically and FastAPI must see real classes in the annotations.
"""

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..experiments import REGISTRY, run
from .schemas import (
    REQUEST_MODELS,
    ExperimentInfo,
    ExperimentResponse,
    HealthResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="gltkit experiment service", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/experiments", response_model=list[ExperimentInfo])
    def list_experiments() -> list[ExperimentInfo]:
        out = []
        for name in sorted(REGISTRY):
            model = REQUEST_MODELS[name]
            out.append(ExperimentInfo(name=name, parameters=model.model_json_schema()))
        return out

    def _make_endpoint(name: str, model):
        def endpoint(req: model) -> ExperimentResponse:  # type: ignore[valid-type]
            try:
                result = run(name, **req.model_dump())
            except (ValueError, FloatingPointError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            return ExperimentResponse(
                experiment=result.experiment, params=result.params,
                columns=[str(c) for c in result.columns], rows=result.rows,
                summary=result.summary, artifacts=result.artifacts)
        endpoint.__name__ = f"run_{name.replace('-', '_')}"
        return endpoint

    for name, model in REQUEST_MODELS.items():
        app.post(f"/experiments/{name}", response_model=ExperimentResponse)(
            _make_endpoint(name, model))

    return app


app = create_app()
