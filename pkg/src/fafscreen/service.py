"""HTTP/JSON API behind the grid-placement UI.

Sessions are directories: the uploaded image, a JSON state file, and an
append-only event log whose replay reproduces the state exactly. Models are
read-only JSON files in ``<data>/models``. All numeric JSON fields are
serialized through the shared 17-significant-digit encoder, so service
responses and CLI output agree to the last digit.
"""

from __future__ import annotations

import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, Request, Response, UploadFile, File, Form
from fastapi.exceptions import RequestValidationError
from fastapi.staticfiles import StaticFiles

from .errors import DataError, EmptySectorError, FafScreenError, ImageFormatError, SchemaError
from .grid import GridSpec, SECTOR_ORDER, sector_statistics
from .image import FafImage, Laterality, encode_png, load_image
from .serialize import dumps_json
from .svm import SvmModel, decision_value, load_model, signed_distance

__all__ = ["create_app", "SessionStore", "replay_events"]


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(
        content=dumps_json(payload) + "\n",
        status_code=status_code,
        media_type="application/json",
    )


def _error_response(status_code: int, message: str, **extra) -> Response:
    return _json_response({"error": message, **extra}, status_code=status_code)


def _grid_payload(doc: dict) -> GridSpec:
    required = ("cx", "cy", "r1", "r2", "r3", "laterality")
    missing = [k for k in required if k not in doc]
    if missing:
        raise SchemaError(f"grid body missing fields: {', '.join(missing)}")
    unknown = [k for k in doc if k not in required]
    if unknown:
        raise SchemaError(f"grid body has unknown fields: {', '.join(unknown)}")
    try:
        cx, cy = float(doc["cx"]), float(doc["cy"])
        radii = tuple(float(doc[k]) for k in ("r1", "r2", "r3"))
    except (TypeError, ValueError):
        raise SchemaError("grid coordinates and radii must be numbers") from None
    if not isinstance(doc["laterality"], str):
        raise SchemaError("laterality must be a string")
    try:
        laterality = Laterality.parse(doc["laterality"])
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    if laterality == Laterality.UNKNOWN:
        raise SchemaError("grid laterality must be OD or OS")
    return GridSpec(cx, cy, *radii, laterality)


def _grid_doc(grid: GridSpec) -> dict:
    return {
        "cx": grid.center_x,
        "cy": grid.center_y,
        "r1": grid.r1,
        "r2": grid.r2,
        "r3": grid.r3,
        "laterality": grid.laterality.value,
    }


def _apply_event(state: dict, event: dict) -> dict:
    """Fold one event-log entry into session state (pure; used by replay)."""
    kind = event["event"]
    payload = event["payload"]
    state = dict(state)
    if kind == "created":
        state.update(
            {
                "session_id": payload["session_id"],
                "image_file": payload["image_file"],
                "width": payload["width"],
                "height": payload["height"],
                "max_value": payload["max_value"],
                "laterality": payload.get("laterality"),
                "grid": None,
                "features": None,
                "sector_stats": None,
                "classification": None,
                "created_at": event["ts"],
                "updated_at": event["ts"],
            }
        )
    elif kind == "grid":
        state["grid"] = payload["grid"]
        state["features"] = payload["features"]
        state["sector_stats"] = payload["sector_stats"]
        state["classification"] = None  # stale once the grid moves
        state["updated_at"] = event["ts"]
    elif kind == "classify":
        state["classification"] = payload
        state["updated_at"] = event["ts"]
    else:
        raise SchemaError(f"unknown event kind {kind!r}")
    return state


def replay_events(events: list[dict]) -> dict:
    """Rebuild session state from its event log."""
    state: dict = {}
    for event in events:
        state = _apply_event(state, event)
    return state


class SessionStore:
    """One directory per session; mutations serialized per session id."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def exists(self, session_id: str) -> bool:
        return (self._dir(session_id) / "state.json").is_file()

    def list_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "state.json").is_file()
        )

    def state(self, session_id: str) -> dict:
        import json

        return json.loads((self._dir(session_id) / "state.json").read_text("utf-8"))

    def events(self, session_id: str) -> list[dict]:
        import json

        path = self._dir(session_id) / "events.jsonl"
        return [json.loads(line) for line in path.read_text("utf-8").splitlines() if line]

    def image(self, session_id: str) -> FafImage:
        raw = (self._dir(session_id) / "image.bin").read_bytes()
        return load_image(raw)

    def _append_event(self, session_id: str, event: dict, state: dict) -> None:
        d = self._dir(session_id)
        with (d / "events.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(dumps_json(event) + "\n")
        (d / "state.json").write_text(dumps_json(state, indent=2) + "\n", "utf-8")

    def create(self, image_bytes: bytes, laterality: str | None) -> dict:
        img = load_image(image_bytes)
        lat_value = None
        if laterality is not None:
            try:
                lat_value = Laterality.parse(laterality).value  # sidecar metadata
            except ValueError as exc:
                raise SchemaError(str(exc)) from None
        session_id = uuid.uuid4().hex[:12]
        d = self._dir(session_id)
        d.mkdir(parents=True)
        (d / "image.bin").write_bytes(image_bytes)
        event = {
            "ts": time.time(),
            "event": "created",
            "payload": {
                "session_id": session_id,
                "image_file": "image.bin",
                "width": img.width,
                "height": img.height,
                "max_value": img.max_value,
                "laterality": lat_value,
            },
        }
        state = _apply_event({}, event)
        with self._lock(session_id):
            self._append_event(session_id, event, state)
        return state

    def set_grid(self, session_id: str, grid: GridSpec) -> dict:
        with self._lock(session_id):
            img = self.image(session_id)
            stats = sector_statistics(img, grid)
            features = [stats[s][stat] for s in SECTOR_ORDER for stat in ("mean", "std")]
            event = {
                "ts": time.time(),
                "event": "grid",
                "payload": {
                    "grid": _grid_doc(grid),
                    "features": features,
                    "sector_stats": {
                        s.value: stats[s] for s in SECTOR_ORDER
                    },
                },
            }
            state = _apply_event(self.state(session_id), event)
            self._append_event(session_id, event, state)
            return state

    def classify(self, session_id: str, model_id: str, model: SvmModel) -> dict:
        with self._lock(session_id):
            state = self.state(session_id)
            if state.get("features") is None:
                raise LookupError("no grid placed")  # mapped to 409 by the route
            import numpy as np

            x = np.array(state["features"], dtype=float)
            f = decision_value(model, x)
            payload = {
                "label": 1 if f >= 0.0 else -1,
                "decision_value": f,
                "signed_distance": signed_distance(model, x),
                "model_id": model_id,
            }
            event = {"ts": time.time(), "event": "classify", "payload": payload}
            state = _apply_event(state, event)
            self._append_event(session_id, event, state)
            return state


class ModelRegistry:
    """Read-only view of ``<dir>/*.json`` model files."""

    def __init__(self, models_dir: Path) -> None:
        self.models_dir = Path(models_dir)

    def ids(self) -> list[str]:
        if not self.models_dir.is_dir():
            return []
        return sorted(p.stem for p in self.models_dir.glob("*.json"))

    def load(self, model_id: str) -> SvmModel | None:
        path = self.models_dir / f"{model_id}.json"
        if not path.is_file() or model_id not in self.ids():
            return None
        return load_model(path.read_bytes())


def _overlay_doc(grid: GridSpec) -> dict:
    return {
        "cx": grid.center_x,
        "cy": grid.center_y,
        "radii": [grid.r1, grid.r2, grid.r3],
        "diagonal_angles_deg": [45.0, 135.0, 225.0, 315.0],
        "laterality": grid.laterality.value,
        "nasal_side": "right" if grid.laterality == Laterality.OD else "left",
    }


def _session_summary(state: dict) -> dict:
    return {
        "session_id": state["session_id"],
        "width": state["width"],
        "height": state["height"],
        "has_grid": state.get("grid") is not None,
        "has_classification": state.get("classification") is not None,
        "created_at": state["created_at"],
        "updated_at": state["updated_at"],
    }


def create_app(data_dir: Path, frontend_dir: Path | None = None) -> FastAPI:
    data_dir = Path(data_dir)
    store = SessionStore(data_dir / "sessions")
    registry = ModelRegistry(data_dir / "models")
    app = FastAPI(title="fafscreen service", version="1.0")

    @app.exception_handler(RequestValidationError)
    async def _on_validation(_req: Request, exc: RequestValidationError):
        return _error_response(400, f"schema violation: {exc.errors()[:1]}")

    @app.exception_handler(FafScreenError)
    async def _on_package_error(_req: Request, exc: FafScreenError):
        if isinstance(exc, EmptySectorError):
            return _error_response(422, "EmptySector", sector=exc.sector.value)
        if isinstance(exc, (SchemaError, ImageFormatError, DataError)):
            return _error_response(400, str(exc))
        return _error_response(500, str(exc))

    @app.post("/api/sessions")
    async def create_session(
        image: UploadFile = File(...), laterality: str | None = Form(default=None)
    ):
        payload = await image.read()
        state = store.create(payload, laterality)
        return _json_response(
            {
                "session_id": state["session_id"],
                "width": state["width"],
                "height": state["height"],
            },
            status_code=201,
        )

    @app.get("/api/sessions")
    async def list_sessions():
        return _json_response(
            {"sessions": [_session_summary(store.state(sid)) for sid in store.list_ids()]}
        )

    @app.get("/api/sessions/{session_id}")
    async def get_session(session_id: str):
        if not store.exists(session_id):
            return _error_response(404, f"unknown session {session_id}")
        return _json_response(store.state(session_id))

    @app.get("/api/sessions/{session_id}/image")
    async def get_image(session_id: str):
        if not store.exists(session_id):
            return _error_response(404, f"unknown session {session_id}")
        img = store.image(session_id)
        if img.max_value not in (255, 65535):
            # PGM maxvals between the two PNG depths: widen losslessly to 16-bit
            img = FafImage(
                width=img.width, height=img.height,
                pixels=img.pixels.astype("int64"), max_value=65535,
            )
        return Response(content=encode_png(img), media_type="image/png")

    @app.put("/api/sessions/{session_id}/grid")
    async def put_grid(session_id: str, request: Request):
        if not store.exists(session_id):
            return _error_response(404, f"unknown session {session_id}")
        try:
            body = await request.json()
        except Exception:
            return _error_response(400, "body is not valid JSON")
        if not isinstance(body, dict):
            return _error_response(400, "grid body must be a JSON object")
        grid = _grid_payload(body)
        state = store.set_grid(session_id, grid)
        return _json_response(
            {
                "features": state["features"],
                "sector_stats": state["sector_stats"],
                "overlay": _overlay_doc(grid),
            }
        )

    @app.post("/api/sessions/{session_id}/classify")
    async def classify_session(session_id: str, request: Request):
        if not store.exists(session_id):
            return _error_response(404, f"unknown session {session_id}")
        try:
            body = await request.json()
        except Exception:
            return _error_response(400, "body is not valid JSON")
        if not isinstance(body, dict) or not isinstance(body.get("model_id"), str):
            return _error_response(400, "classify body needs a string model_id")
        model_id = body["model_id"]
        model = registry.load(model_id)
        if model is None:
            return _error_response(404, f"unknown model {model_id}")
        try:
            state = store.classify(session_id, model_id, model)
        except LookupError:
            return _error_response(409, "classify requires a grid placement first")
        return _json_response(state["classification"])

    @app.get("/api/models")
    async def list_models():
        models = []
        for model_id in registry.ids():
            model = registry.load(model_id)
            if model is None:
                continue
            models.append(
                {
                    "model_id": model_id,
                    "kernel": model.kernel.kind.value,
                    "scale_factor": model.kernel.scale_factor,
                    "C": model.box_constraint,
                    "standardized": model.standardization is not None,
                    "n_support_vectors": int(model.support_vectors.shape[0]),
                    "dimension": model.dimension,
                    "class_counts": list(model.class_counts),
                }
            )
        return _json_response({"models": models})

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
