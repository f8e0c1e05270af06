"""JSON HTTP binding for the platform service.

Routes:
    POST /datasets                      practitioner   upload manifest
    GET  /datasets/{id}                 practitioner   dataset summary
    POST /campaigns                     practitioner   create campaign
    GET  /campaigns                     practitioner   list campaigns
    GET  /campaigns/{id}                practitioner   campaign detail
    POST /campaigns/{id}/publish        practitioner
    POST /campaigns/{id}/unpublish      practitioner
    GET  /campaigns/{id}/progress       practitioner
    GET  /campaigns/{id}/export         practitioner   line-delimited records
    POST /campaigns/{id}/items/{item}/reopen  practitioner
    POST /serve                         client         reserve a task batch
    POST /responses                     client         submit batch responses
    GET  /healthz                       open

Authentication is a static bearer token per role. Errors map to 400/401/404
with a JSON body naming the failing condition (upload errors include the
offending line number).
"""

from __future__ import annotations

from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .config import ServiceConfig
from .consolidate import UnknownCampaign as UnknownCampaignReport
from .engine import UnknownCampaign, UnknownDataset, UnknownItem
from .model import CampaignConfig, DEFAULT_OPTIONS, DomainError
from .service import PlatformService, UnknownBatch, ValidationFailed

_NOT_FOUND = (
    UnknownCampaign,
    UnknownDataset,
    UnknownItem,
    UnknownCampaignReport,
    UnknownBatch,
)


class DatasetUpload(BaseModel):
    name: str = "unnamed"
    manifest: str


class CampaignCreate(BaseModel):
    dataset_id: str
    prompt_template: str
    options: list[str] = Field(default_factory=lambda: list(DEFAULT_OPTIONS))
    required_engagements: int = 3
    batch_size: int = 5
    time_budget: float = 30.0
    reward_points: int = 0


class ServeRequest(BaseModel):
    user_id: str
    campaign_id: Optional[str] = None
    seed: Optional[int] = None


class ResponseItem(BaseModel):
    assignment_id: str
    choice: str
    elapsed: float


class SubmitRequest(BaseModel):
    batch_id: str
    responses: list[ResponseItem]


class ReopenRequest(BaseModel):
    extra: int = 1


def create_app(service: PlatformService, config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="taskads", docs_url=None, redoc_url=None)

    def _role(authorization: Optional[str] = Header(default=None)) -> Optional[str]:
        if not authorization or not authorization.startswith("Bearer "):
            return None
        token = authorization.removeprefix("Bearer ")
        if token == config.practitioner_token:
            return "practitioner"
        if token == config.client_token:
            return "client"
        return None

    def practitioner(role: Optional[str] = Depends(_role)) -> str:
        if role != "practitioner":
            raise HTTPException(status_code=401, detail="practitioner token required")
        return role

    def client(role: Optional[str] = Depends(_role)) -> str:
        # Practitioner tokens may drive client calls (useful for smoke tests).
        if role not in ("client", "practitioner"):
            raise HTTPException(status_code=401, detail="client token required")
        return role

    @app.exception_handler(DomainError)
    def _domain_error(_req: Request, exc: DomainError):
        if isinstance(exc, _NOT_FOUND):
            return JSONResponse(status_code=404, content={"error": str(exc)})
        body = {"error": str(exc), "code": type(exc).__name__}
        if isinstance(exc, ValidationFailed) and exc.line is not None:
            body["line"] = exc.line
        return JSONResponse(status_code=400, content=body)

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "version": service.version}

    @app.post("/datasets", status_code=201)
    def upload_dataset(body: DatasetUpload, _: str = Depends(practitioner)):
        dataset_id = service.upload_dataset(body.manifest, name=body.name)
        return service.dataset_summary(dataset_id)

    @app.get("/datasets/{dataset_id}")
    def dataset_summary(dataset_id: str, _: str = Depends(practitioner)):
        return service.dataset_summary(dataset_id)

    @app.post("/campaigns", status_code=201)
    def create_campaign(body: CampaignCreate, _: str = Depends(practitioner)):
        config_ = CampaignConfig(
            prompt_template=body.prompt_template,
            options=tuple(body.options),
            required_engagements=body.required_engagements,
            batch_size=body.batch_size,
            time_budget=body.time_budget,
            reward_points=body.reward_points,
        )
        campaign_id = service.create_campaign(body.dataset_id, config_)
        return {"campaign_id": campaign_id, "status": "Draft"}

    @app.get("/campaigns")
    def list_campaigns(_: str = Depends(practitioner)):
        return service.campaign_overview()

    @app.get("/campaigns/{campaign_id}")
    def campaign_detail(campaign_id: str, _: str = Depends(practitioner)):
        return service.campaign_overview(campaign_id)[0]

    @app.post("/campaigns/{campaign_id}/publish")
    def publish(campaign_id: str, _: str = Depends(practitioner)):
        return {"campaign_id": campaign_id, "status": service.publish(campaign_id).value}

    @app.post("/campaigns/{campaign_id}/unpublish")
    def unpublish(campaign_id: str, _: str = Depends(practitioner)):
        return {"campaign_id": campaign_id, "status": service.unpublish(campaign_id).value}

    @app.get("/campaigns/{campaign_id}/progress")
    def progress(campaign_id: str, _: str = Depends(practitioner)):
        return service.progress(campaign_id).to_doc()

    @app.get("/campaigns/{campaign_id}/export")
    def export(campaign_id: str, detail: bool = Query(default=False), _: str = Depends(practitioner)):
        lines = service.export(campaign_id, include_detail=detail)
        return PlainTextResponse("\n".join(lines) + "\n", media_type="application/x-ndjson")

    @app.post("/campaigns/{campaign_id}/items/{item_id}/reopen")
    def reopen(campaign_id: str, item_id: str, body: ReopenRequest, _: str = Depends(practitioner)):
        required = service.reopen_item(campaign_id, item_id, body.extra)
        return {"campaign_id": campaign_id, "item_id": item_id, "required_engagements": required}

    @app.post("/serve")
    def serve(body: ServeRequest, _: str = Depends(client)):
        return service.serve_batch(body.user_id, body.campaign_id, seed=body.seed)

    @app.post("/responses")
    def submit(body: SubmitRequest, _: str = Depends(client)):
        acks = service.submit_responses(
            body.batch_id,
            [r.model_dump() for r in body.responses],
        )
        return {"batch_id": body.batch_id, "acks": acks}

    return app


def run_server(service: PlatformService, config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(service, config), host=config.listen_host, port=config.listen_port, log_level="warning")
