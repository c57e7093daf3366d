"""HTTP tuning service behind the interactive ground-truth console.

Sessions hold one uploaded image each. Previews run on a downscaled copy
(max edge 768) and reuse a cached mixture fit; `accept` recomputes at full
resolution through exactly the same code path as the `gen-gt` command.
"""

from __future__ import annotations

import base64
import threading
import uuid
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .config import load_config
from .gmm import mean_luma
from .imgcore import ColorImage, GrayImage, decode_pnm, encode_pnm, histogram
from .pipeline import fit_background_model, generate_groundtruth, preprocess_gray, write_bundle

PREVIEW_MAX_EDGE = 768
PREVIEW_EM_SUBSAMPLE = 50_000


def _downscale(img: ColorImage, max_edge: int = PREVIEW_MAX_EDGE) -> ColorImage:
    longest = max(img.width, img.height)
    if longest <= max_edge:
        return img
    f = -(-longest // max_edge)  # ceil
    h = (img.height // f) * f
    w = (img.width // f) * f
    cropped = img.data[:h, :w]
    blocks = cropped.reshape(h // f, f, w // f, f, 3)
    return ColorImage(blocks.mean(axis=(1, 3)))


def _b64_image(img) -> str:
    return base64.b64encode(encode_pnm(img)).decode("ascii")


class Session:
    def __init__(self, image: ColorImage):
        self.image = image
        self.preview_image = _downscale(image)
        self.lock = threading.Lock()
        self.latest_issued = 0
        self.stored_seq = 0
        self.stored_params = None
        self._gmm_cache = {}

    def issue_seq(self) -> int:
        with self.lock:
            self.latest_issued += 1
            return self.latest_issued

    def finish_preview(self, seq: int, params: dict) -> bool:
        """Stores the newest result only; returns True when it was stored."""
        with self.lock:
            if seq > self.stored_seq:
                self.stored_seq = seq
                self.stored_params = params
                stored = True
            else:
                stored = False
            superseded = seq < self.latest_issued
        return stored and not superseded

    def background_for(self, params):
        key = (params.k, params.em_seed, params.em_subsample)
        with self.lock:
            cached = self._gmm_cache.get(key)
        if cached is not None:
            return cached
        model, roles, _ = fit_background_model(self.preview_image, params)
        with self.lock:
            self._gmm_cache[key] = (model, roles)
        return model, roles


class UploadRequest(BaseModel):
    image: str = Field(description="base64 binary PPM (P6) payload")


class GmmRequest(BaseModel):
    k: int = 4
    seed: int = 0


class PreviewRequest(BaseModel):
    params: dict = Field(default_factory=dict)


class AcceptRequest(BaseModel):
    out_path: str
    params: dict = Field(default_factory=dict)


def _session_or_404(sessions, session_id) -> Session:
    session = sessions.get(session_id)
    if session is None:
        raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
    return session


def _config_or_422(overrides: dict):
    try:
        return load_config(overrides=overrides)
    except (ValueError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="docrestore tuning service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}

    @app.post("/session")
    def create_session(req: UploadRequest):
        try:
            img = decode_pnm(base64.b64decode(req.image))
        except Exception as exc:
            raise HTTPException(status_code=422, detail=f"bad image payload: {exc}") from exc
        if isinstance(img, GrayImage):
            img = ColorImage(np.repeat(img.data[:, :, None], 3, axis=2))
        session_id = uuid.uuid4().hex
        sessions[session_id] = Session(img)
        return {"id": session_id, "width": img.width, "height": img.height}

    @app.get("/session/{session_id}/histogram")
    def session_histogram(session_id: str, bright: bool = True,
                          contrast_kind: str = "identity", contrast_param: float = 1.0):
        session = _session_or_404(sessions, session_id)
        cfg = _config_or_422({
            "bright_medium": bright,
            "contrast_kind": contrast_kind,
            "contrast_param": contrast_param,
        })
        gray = preprocess_gray(session.preview_image, cfg.gt_params())
        h = histogram(gray)
        return {"bins": h.bins.tolist(), "total": h.total}

    @app.post("/session/{session_id}/gmm")
    def session_gmm(session_id: str, req: GmmRequest):
        session = _session_or_404(sessions, session_id)
        cfg = _config_or_422({
            "k": req.k, "em_seed": req.seed, "em_subsample": PREVIEW_EM_SUBSAMPLE,
        })
        params = cfg.gt_params()
        try:
            model, roles = session.background_for(params)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "k": model.K,
            "priors": model.priors.tolist(),
            "means": model.means.tolist(),
            "lumas": mean_luma(model).tolist(),
            "roles": {
                "background": roles.background_idx,
                "text": roles.text_idx,
                "scanner_white": roles.scanner_white_idx,
                "noise": list(roles.noise_idxs),
            },
        }

    @app.post("/session/{session_id}/preview")
    def session_preview(session_id: str, req: PreviewRequest):
        session = _session_or_404(sessions, session_id)
        seq = session.issue_seq()
        overrides = dict(req.params)
        overrides["em_subsample"] = min(
            int(overrides.get("em_subsample", PREVIEW_EM_SUBSAMPLE)), PREVIEW_EM_SUBSAMPLE
        )
        cfg = _config_or_422(overrides)
        params = cfg.gt_params()
        try:
            background = session.background_for(params)
            bundle = generate_groundtruth(session.preview_image, params, background=background)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        fresh = session.finish_preview(seq, req.params)
        return {
            "seq": seq,
            "superseded": not fresh,
            "binarized_text": _b64_image(
                GrayImage(np.where(bundle.binarized_text.bits, 0.0, 1.0))
            ),
            "foreground": _b64_image(bundle.restored_foreground),
            "background": _b64_image(bundle.restored_background),
            "restored": _b64_image(bundle.restored_document),
        }

    @app.get("/session/{session_id}/state")
    def session_state(session_id: str):
        session = _session_or_404(sessions, session_id)
        with session.lock:
            return {
                "latest_issued": session.latest_issued,
                "stored_seq": session.stored_seq,
                "stored_params": session.stored_params,
            }

    @app.post("/session/{session_id}/accept")
    def session_accept(session_id: str, req: AcceptRequest):
        session = _session_or_404(sessions, session_id)
        cfg = _config_or_422(req.params)
        try:
            bundle = generate_groundtruth(session.image, cfg.gt_params())
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        written = write_bundle(bundle, req.out_path, params_doc=asdict(cfg))
        return {"written": written, "params": asdict(cfg)}

    return app
