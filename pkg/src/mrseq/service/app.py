"""REST API: plotting, simulation jobs, phantoms, and per-user persistence.

Routes live under /api; everything except login and health requires a bearer
token.  Validation failures return 422 with machine-readable field paths;
foreign or unknown resources return 404 without leaking existence; admin-only
routes return 403 for plain users.
"""

from __future__ import annotations

import logging
import os
import secrets
from pathlib import Path

from fastapi import Body, Depends, FastAPI, Header, HTTPException, Query, Request, Response
from pydantic import BaseModel

from mrseq import engine, model, timeline
from mrseq import phantom as ph
from mrseq.phantom import PLANES, PhantomFormatError, orthogonal_slices, slice_from_sequence
from mrseq.service.jobs import JobManager, QueueFullError
from mrseq.service.store import AuthError, Store

logger = logging.getLogger("mrseq.service")

API_VERSION = "1.0.0"


class LoginBody(BaseModel):
    username: str
    password: str


class UserBody(BaseModel):
    username: str
    password: str
    role: str = "user"


class UserUpdateBody(BaseModel):
    password: str | None = None
    role: str | None = None


class SaveSequenceBody(BaseModel):
    name: str
    doc: dict


def _schema_detail(e: model.SchemaError) -> dict:
    return {"code": "SCHEMA_ERROR", "path": e.path, "message": e.message}


def _flatten_detail(e: timeline.FlattenError) -> dict:
    return {"code": "FLATTEN_ERROR", "path": e.path, "message": str(e)}


def create_app(data_dir: str | None, max_jobs: int = 2, queue_cap: int = 16,
               static_dir: str | None = None, admin_password: str | None = None) -> FastAPI:
    store = Store(data_dir)
    jobs = JobManager(store, max_jobs=max_jobs, queue_cap=queue_cap)
    phantoms: dict[str, ph.Phantom] = {}

    if store.n_users() == 0:
        password = admin_password or os.environ.get("MRSEQ_ADMIN_PASSWORD")
        if not password:
            password = secrets.token_urlsafe(12)
            logger.warning("bootstrapped admin user with generated password: %s", password)
        store.create_user("admin", password, role="admin")

    app = FastAPI(
        title="mrseq service",
        version=API_VERSION,
        description="Pulse sequence plotting, Bloch simulation jobs, phantom access "
                    "and per-user storage of sequences and results.",
    )
    app.state.store = store
    app.state.jobs = jobs

    def get_phantom(phantom_id: str) -> ph.Phantom | None:
        if phantom_id not in phantoms:
            factory = ph.builtin_phantoms().get(phantom_id)
            if factory is None:
                return None
            phantoms[phantom_id] = factory()
        return phantoms[phantom_id]

    # -- auth

    def current_user(authorization: str | None = Header(default=None)) -> dict:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, detail={"code": "NO_TOKEN", "message": "missing bearer token"})
        token = authorization.removeprefix("Bearer ").strip()
        try:
            return store.authenticate(token)
        except AuthError as e:
            raise HTTPException(401, detail={"code": e.code, "message": str(e)}) from None

    def admin_user(user: dict = Depends(current_user)) -> dict:
        if user["role"] != "admin":
            raise HTTPException(403, detail={"code": "FORBIDDEN", "message": "admin only"})
        return user

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": API_VERSION}

    @app.post("/api/auth/login")
    def login(body: LoginBody):
        result = store.login(body.username, body.password)
        if result is None:
            raise HTTPException(401, detail={"code": "BAD_CREDENTIALS",
                                             "message": "invalid username or password"})
        token, user = result
        return {"token": token, "user": user}

    @app.post("/api/auth/logout")
    def logout(authorization: str | None = Header(default=None),
               user: dict = Depends(current_user)):
        store.logout(authorization.removeprefix("Bearer ").strip())
        return {"ok": True}

    @app.get("/api/auth/me")
    def me(user: dict = Depends(current_user)):
        return user

    # -- plotting and previews

    def parse_doc(obj) -> model.SequenceDoc:
        try:
            return model.doc_from_json(obj)
        except model.SchemaError as e:
            raise HTTPException(422, detail=_schema_detail(e)) from None

    @app.post("/api/plot/sequence")
    def plot_sequence(body: dict = Body(...), dt: float | None = Query(default=None, gt=0),
                      user: dict = Depends(current_user)):
        doc = parse_doc(body)
        violations = timeline.validate(doc)
        try:
            tl = timeline.flatten(doc)
            series = timeline.diagram_series(tl, dt if dt else timeline.auto_plot_dt(tl))
        except timeline.FlattenError as e:
            raise HTTPException(422, detail=_flatten_detail(e)) from None
        except ValueError as e:
            raise HTTPException(422, detail={"code": "PLOT_ERROR", "message": str(e)}) from None
        return {
            "series": series.to_dict(),
            "violations": [v.to_dict() for v in violations],
            "total_duration": tl.total_duration,
        }

    @app.post("/api/slice_preview")
    def slice_preview(body: dict = Body(...), user: dict = Depends(current_user)):
        doc = parse_doc(body)
        try:
            tl = timeline.flatten(doc)
        except timeline.FlattenError as e:
            raise HTTPException(422, detail=_flatten_detail(e)) from None
        plane = slice_from_sequence(tl)
        if plane is None:
            return {"plane": None}
        return {"plane": {"axis": plane.axis, "center_offset": plane.center_offset,
                          "thickness": plane.thickness}}

    # -- bundled examples

    @app.get("/api/examples")
    def list_examples(user: dict = Depends(current_user)):
        from mrseq.examples import EXAMPLES

        return sorted(EXAMPLES)

    @app.get("/api/examples/{name}")
    def get_example(name: str, user: dict = Depends(current_user)):
        import json as _json

        from mrseq.examples import EXAMPLES

        builder = EXAMPLES.get(name)
        if builder is None:
            raise HTTPException(404, detail={"code": "NOT_FOUND",
                                             "message": f"no example {name!r}"})
        return _json.loads(model.save(builder()))

    # -- phantoms

    @app.get("/api/phantoms")
    def list_phantoms(user: dict = Depends(current_user)):
        out = []
        for pid in sorted(ph.builtin_phantoms()):
            p = get_phantom(pid)
            out.append({
                "id": pid,
                "name": p.name,
                "n_spins": p.n_spins,
                "has_grid": p.grid is not None,
                "grid_dims": list(p.grid.dims) if p.grid else None,
                "has_motion": bool(p.motion),
            })
        return out

    @app.get("/api/phantoms/{phantom_id}/slice")
    def phantom_slice(phantom_id: str, plane: str = Query(...), index: int = Query(...),
                      quantity: str = Query(default="pd"),
                      user: dict = Depends(current_user)):
        p = get_phantom(phantom_id)
        if p is None:
            raise HTTPException(404, detail={"code": "NOT_FOUND",
                                             "message": f"no phantom {phantom_id!r}"})
        if plane not in PLANES:
            raise HTTPException(400, detail={"code": "BAD_PLANE",
                                             "message": f"plane must be one of {sorted(PLANES)}"})
        try:
            img, extent = orthogonal_slices(p, plane, index, quantity)
        except IndexError as e:
            raise HTTPException(400, detail={"code": "BAD_INDEX", "message": str(e)}) from None
        except ValueError as e:
            raise HTTPException(400, detail={"code": "BAD_QUERY", "message": str(e)}) from None
        except PhantomFormatError as e:
            raise HTTPException(409, detail={"code": "NO_GRID", "message": str(e)}) from None
        return {
            "shape": list(img.shape),
            "data": [float(v) for v in img.ravel()],
            "extent": extent,
        }

    # -- simulation jobs

    @app.post("/api/simulate", status_code=202)
    def submit_simulation(body: dict = Body(...), user: dict = Depends(current_user)):
        if not isinstance(body, dict) or "sequence" not in body:
            raise HTTPException(422, detail={"code": "SCHEMA_ERROR", "path": ".sequence",
                                             "message": "missing sequence document"})
        doc = parse_doc(body["sequence"])
        phantom_id = body.get("phantom_id")
        p = get_phantom(phantom_id) if isinstance(phantom_id, str) else None
        if p is None:
            raise HTTPException(404, detail={"code": "NOT_FOUND",
                                             "message": f"no phantom {phantom_id!r}"})
        cfg_obj = body.get("config") or {}
        try:
            cfg = engine.SimConfig(
                dt_rf=float(cfg_obj.get("dt_rf", 1e-6)),
                dt_grad=float(cfg_obj.get("dt_grad", 1e-5)),
                threads=int(cfg_obj.get("threads", 0)),
            )
        except (TypeError, ValueError) as e:
            raise HTTPException(422, detail={"code": "SCHEMA_ERROR", "path": ".config",
                                             "message": str(e)}) from None
        violations = timeline.validate(doc)
        if violations:
            raise HTTPException(422, detail={
                "code": "LIMIT_VIOLATIONS",
                "message": "document violates scanner limits",
                "violations": [v.to_dict() for v in violations],
            })
        try:
            job = jobs.submit(user["id"], doc, p, phantom_id, cfg)
        except QueueFullError:
            raise HTTPException(429, detail={"code": "QUEUE_FULL",
                                             "message": "try again later"}) from None
        return {"job_id": job.id}

    def visible_job(job_id: str, user: dict):
        job = jobs.get(job_id)
        if job is None or (job.owner != user["id"] and user["role"] != "admin"):
            raise HTTPException(404, detail={"code": "NOT_FOUND",
                                             "message": f"no job {job_id!r}"})
        return job

    @app.get("/api/simulate/{job_id}/status")
    def job_status(job_id: str, user: dict = Depends(current_user)):
        job = visible_job(job_id, user)
        out = jobs.status(job)
        del out["result_item"]
        return out

    @app.get("/api/simulate/{job_id}/result")
    def job_result(job_id: str, user: dict = Depends(current_user)):
        job = visible_job(job_id, user)
        if job.state != "done":
            raise HTTPException(409, detail={"code": "NOT_DONE",
                                             "message": f"job is {job.state}"})
        item = store.get_item(job.result_item)
        data = store.get_blob(item["blob_hash"]) if item else None
        if data is None:
            raise HTTPException(500, detail={"code": "MISSING_RESULT",
                                             "message": "result payload lost"})
        return Response(content=data, media_type="application/octet-stream",
                        headers={"X-Result-Item": item["id"]})

    @app.post("/api/simulate/{job_id}/cancel")
    def job_cancel(job_id: str, user: dict = Depends(current_user)):
        job = visible_job(job_id, user)
        jobs.cancel(job)
        return {"state": job.state}

    # -- stored items

    def item_routes(kind: str, list_path: str):
        def list_items(user: dict = Depends(current_user)):
            owner = None if user["role"] == "admin" else user["id"]
            return store.list_items(kind, owner)

        def get_owned(item_id: str, user: dict) -> dict:
            item = store.get_item(item_id)
            if item is None or item["kind"] != kind or (
                    item["owner"] != user["id"] and user["role"] != "admin"):
                raise HTTPException(404, detail={"code": "NOT_FOUND",
                                                 "message": f"no {kind} {item_id!r}"})
            return item

        def delete_item(item_id: str, user: dict = Depends(current_user)):
            item = get_owned(item_id, user)
            store.delete_item(item["id"])
            return {"ok": True}

        app.get(list_path, name=f"list_{kind}s")(list_items)
        app.delete(list_path + "/{item_id}", name=f"delete_{kind}")(delete_item)
        return get_owned

    get_owned_sequence = item_routes("sequence", "/api/sequences")
    get_owned_result = item_routes("result", "/api/results")

    @app.post("/api/sequences", status_code=201)
    def save_sequence(body: SaveSequenceBody, user: dict = Depends(current_user)):
        doc = parse_doc(body.doc)
        item = store.create_item(user["id"], "sequence", body.name, model.save(doc))
        return {"id": item["id"], "name": item["name"], "created_at": item["created_at"]}

    @app.get("/api/sequences/{item_id}")
    def get_sequence(item_id: str, user: dict = Depends(current_user)):
        import json

        item = get_owned_sequence(item_id, user)
        data = store.get_blob(item["blob_hash"])
        return {"id": item["id"], "name": item["name"], "created_at": item["created_at"],
                "doc": json.loads(data)}

    @app.post("/api/results", status_code=201)
    async def upload_result(request: Request, name: str = Query(default="uploaded result"),
                            user: dict = Depends(current_user)):
        data = await request.body()
        if not data:
            raise HTTPException(422, detail={"code": "EMPTY_BODY",
                                             "message": "expected a result payload"})
        item = store.create_item(user["id"], "result", name, data)
        return {"id": item["id"], "name": item["name"], "created_at": item["created_at"]}

    @app.get("/api/results/{item_id}")
    def get_result(item_id: str, user: dict = Depends(current_user)):
        item = get_owned_result(item_id, user)
        data = store.get_blob(item["blob_hash"])
        return Response(content=data, media_type="application/octet-stream")

    # -- admin user management

    @app.get("/api/users")
    def list_users(user: dict = Depends(admin_user)):
        return store.list_users()

    @app.post("/api/users", status_code=201)
    def create_user(body: UserBody, user: dict = Depends(admin_user)):
        try:
            return store.create_user(body.username, body.password, body.role)
        except ValueError as e:
            raise HTTPException(422, detail={"code": "BAD_USER", "message": str(e)}) from None

    @app.get("/api/users/{user_id}")
    def get_user(user_id: str, user: dict = Depends(admin_user)):
        found = store.get_user(user_id)
        if found is None:
            raise HTTPException(404, detail={"code": "NOT_FOUND", "message": "no such user"})
        return found

    @app.put("/api/users/{user_id}")
    def update_user(user_id: str, body: UserUpdateBody, user: dict = Depends(admin_user)):
        try:
            updated = store.update_user(user_id, password=body.password, role=body.role)
        except ValueError as e:
            raise HTTPException(422, detail={"code": "BAD_USER", "message": str(e)}) from None
        if updated is None:
            raise HTTPException(404, detail={"code": "NOT_FOUND", "message": "no such user"})
        return updated

    @app.delete("/api/users/{user_id}")
    def delete_user(user_id: str, user: dict = Depends(admin_user)):
        if not store.delete_user(user_id):
            raise HTTPException(404, detail={"code": "NOT_FOUND", "message": "no such user"})
        return {"ok": True}

    # -- static front-end

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="frontend")
    else:
        @app.get("/", include_in_schema=False)
        def index():
            return {"service": "mrseq", "docs": "/docs", "api": "/api"}

    return app
