"""HTTP facade over the catalog and the generation workflow.

Sessions live on disk, one directory each (original.png, mask.png,
result.png, eraser_NNN.png, meta.json), so they survive restarts and are
trivially inspectable. Requests within one session are serialized; distinct
sessions proceed concurrently. The server binds to loopback unless
explicitly told otherwise: images never leave the machine by default.
"""

from __future__ import annotations

import json
import secrets
import shutil
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request, Response

from . import images, toy_models
from .canonical import canonical_json
from .catalog import Catalog, CatalogError
from .diffusion import GenerationParams, encode_condition, erase_blend, inpaint_generate

MAX_DIM = 1024
SESSION_TTL_S = 24 * 3600.0

ORIGINAL = "original.png"
MASK = "mask.png"
RESULT = "result.png"
META = "meta.json"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _json_response(obj, status: int = 200) -> Response:
    return Response(canonical_json(obj), status_code=status, media_type="application/json")


def _png_response(data: bytes) -> Response:
    return Response(data, media_type="image/png")


class SessionStore:
    """Disk-backed try-on sessions with lazy 24h expiry."""

    def __init__(self, root: Path, ttl_s: float = SESSION_TTL_S):
        self.root = root
        self.ttl_s = ttl_s
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def dir(self, session_id: str) -> Path:
        return self.root / session_id

    def sweep(self) -> None:
        if not self.root.is_dir():
            return
        now = time.time()
        for d in self.root.iterdir():
            meta = d / META
            if not meta.is_file():
                continue
            try:
                last = json.loads(meta.read_text("utf-8")).get("last_active", 0.0)
            except (OSError, json.JSONDecodeError):
                continue
            if now - last > self.ttl_s:
                shutil.rmtree(d, ignore_errors=True)

    def create(self, png: bytes) -> str:
        session_id = secrets.token_hex(16)
        d = self.dir(session_id)
        d.mkdir(parents=True)
        (d / ORIGINAL).write_bytes(png)
        self._write_meta(session_id, {"created": time.time()})
        return session_id

    def _write_meta(self, session_id: str, extra: dict) -> None:
        d = self.dir(session_id)
        meta = {}
        if (d / META).is_file():
            meta = json.loads((d / META).read_text("utf-8"))
        meta.update(extra)
        meta["last_active"] = time.time()
        (d / META).write_text(canonical_json(meta), "utf-8")

    def touch(self, session_id: str) -> Path:
        """Validate existence + freshness; returns the session directory."""
        d = self.dir(session_id)
        meta = d / META
        if not meta.is_file():
            raise ApiError(404, "unknown_session", f"no session {session_id}")
        last = json.loads(meta.read_text("utf-8")).get("last_active", 0.0)
        if time.time() - last > self.ttl_s:
            shutil.rmtree(d, ignore_errors=True)
            raise ApiError(404, "unknown_session", f"session {session_id} expired")
        self._write_meta(session_id, {})
        return d


def create_app(data_dir, session_ttl_s: float = SESSION_TTL_S, static_dir=None) -> FastAPI:
    """Build the service bound to one data directory.

    ``static_dir``, when given, is served at ``/ui`` (the browser mask
    studio's build output).
    """
    root = Path(data_dir)
    sessions = SessionStore(root / "sessions", session_ttl_s)
    catalog_write_lock = threading.Lock()

    app = FastAPI(title="mfr try-on service")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return _json_response({"error": exc.code, "message": exc.message}, exc.status)

    def catalog() -> Catalog:
        return Catalog(root)

    @app.get("/garments")
    def list_garments(request: Request):
        class_filter = request.query_params.get("class")
        records = catalog().list_garments(class_filter if class_filter else None)
        return _json_response(
            [
                {
                    "garment_id": r.garment_id,
                    "display_name": r.display_name,
                    "garment_class": r.garment_class,
                    "size_bytes": r.size_bytes,
                    "downloaded": r.downloaded,
                }
                for r in records
            ]
        )

    @app.post("/garments/{garment_id}/download")
    def download_garment(garment_id: str):
        try:
            with catalog_write_lock:
                catalog().set_downloaded(garment_id)
        except CatalogError as exc:
            if "unknown garment" in str(exc):
                raise ApiError(404, "unknown_garment", str(exc)) from exc
            raise ApiError(409, "model_unavailable", str(exc)) from exc
        return _json_response({"downloaded": True})

    @app.post("/garments/{garment_id}/interest")
    async def set_interest(garment_id: str, request: Request):
        body = await _read_json(request)
        score = body.get("score")
        if not isinstance(score, (int, float)):
            raise ApiError(400, "bad_request", "body must carry a numeric 'score'")
        try:
            with catalog_write_lock:
                catalog().set_interest(garment_id, float(score))
        except CatalogError as exc:
            raise ApiError(404, "unknown_garment", str(exc)) from exc
        return _json_response({"ok": True})

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.body()
        try:
            rgb = images.decode_rgb(body)
        except images.ImageError as exc:
            raise ApiError(400, "invalid_image", str(exc)) from exc
        h, w = rgb.shape[:2]
        if h > MAX_DIM or w > MAX_DIM:
            raise ApiError(400, "image_too_large", f"image is {w}x{h}, limit is {MAX_DIM}x{MAX_DIM}")
        sessions.sweep()
        session_id = sessions.create(images.encode_rgb(rgb))
        return _json_response({"session_id": session_id})

    @app.get("/sessions/{session_id}/original")
    def get_original(session_id: str):
        with sessions.lock(session_id):
            d = sessions.touch(session_id)
            return _png_response((d / ORIGINAL).read_bytes())

    @app.post("/sessions/{session_id}/mask")
    async def submit_mask(session_id: str, request: Request):
        body = await request.body()
        with sessions.lock(session_id):
            d = sessions.touch(session_id)
            try:
                gray = images.decode_gray(body)
            except images.ImageError as exc:
                raise ApiError(400, "invalid_image", str(exc)) from exc
            rgb = images.decode_rgb((d / ORIGINAL).read_bytes())
            if gray.shape != rgb.shape[:2]:
                raise ApiError(
                    400,
                    "dim_mismatch",
                    f"mask is {gray.shape[1]}x{gray.shape[0]}, image is {rgb.shape[1]}x{rgb.shape[0]}",
                )
            (d / MASK).write_bytes(images.encode_gray(gray))
            return _json_response({"ok": True})

    @app.post("/sessions/{session_id}/generate")
    async def generate(session_id: str, request: Request):
        body = await _read_json(request)
        garment_id = body.get("garment_id")
        if not isinstance(garment_id, str):
            raise ApiError(400, "bad_request", "body must carry 'garment_id'")
        with sessions.lock(session_id):
            d = sessions.touch(session_id)
            if not (d / MASK).is_file():
                raise ApiError(409, "no_mask", "submit a mask before generating")
            cat = catalog()
            try:
                record = cat.get(garment_id)
            except CatalogError as exc:
                raise ApiError(404, "unknown_garment", str(exc)) from exc
            if not record.downloaded:
                raise ApiError(409, "model_unavailable", "model not available; call download first")
            try:
                params = GenerationParams(
                    guidance_weight=float(body.get("guidance", 5.0)),
                    steps=int(body.get("steps", 20)),
                    seed=int(body.get("seed", 0)),
                )
            except (TypeError, ValueError) as exc:
                raise ApiError(400, "bad_request", f"invalid params: {exc}") from exc

            original = images.to_unit(images.decode_rgb((d / ORIGINAL).read_bytes()))
            mask = images.to_unit(images.decode_gray((d / MASK).read_bytes()))
            denoiser = toy_models.load_denoiser(cat, garment_id, params.steps, original.shape[:2])
            cond = encode_condition(cat.prompt_for(garment_id))
            result = inpaint_generate(original, mask, denoiser, cond, params)
            (d / RESULT).write_bytes(images.encode_rgb(images.to_u8(result)))
            sessions._write_meta(session_id, {"garment_id": garment_id, "seed": params.seed})
            return _json_response({"ok": True})

    @app.get("/sessions/{session_id}/result")
    def get_result(session_id: str):
        with sessions.lock(session_id):
            d = sessions.touch(session_id)
            if not (d / RESULT).is_file():
                raise ApiError(404, "no_result", "generate first")
            return _png_response((d / RESULT).read_bytes())

    @app.post("/sessions/{session_id}/erase")
    async def erase(session_id: str, request: Request):
        body = await request.body()
        with sessions.lock(session_id):
            d = sessions.touch(session_id)
            if not (d / RESULT).is_file():
                raise ApiError(409, "no_result", "generate before erasing")
            try:
                gray = images.decode_gray(body)
            except images.ImageError as exc:
                raise ApiError(400, "invalid_image", str(exc)) from exc
            original = images.decode_rgb((d / ORIGINAL).read_bytes())
            if gray.shape != original.shape[:2]:
                raise ApiError(400, "dim_mismatch", "eraser mask dims do not match the image")
            current = images.decode_rgb((d / RESULT).read_bytes())
            out = erase_blend(
                images.to_unit(original), images.to_unit(current), images.to_unit(gray)
            )
            (d / RESULT).write_bytes(images.encode_rgb(images.to_u8(out)))
            n = len(list(d.glob("eraser_*.png")))
            (d / f"eraser_{n:03d}.png").write_bytes(images.encode_gray(gray))
            return _json_response({"ok": True})

    return app


async def _read_json(request: Request) -> dict:
    try:
        body = await request.json()
    except json.JSONDecodeError as exc:
        raise ApiError(400, "bad_request", f"body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise ApiError(400, "bad_request", "body must be a JSON object")
    return body
