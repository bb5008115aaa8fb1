"""JSON-over-HTTP API for interactive latent-space exploration.

Endpoints (all bodies JSON):
  GET  /model       -> model configuration
  POST /decode      {"z": [...], "c_l": float} -> shape + recomputed metrics
  GET  /latent-map  -> per-item latent embedding of the loaded dataset
  POST /sample      {"count": int, "sampling": "random"|"envelope"} -> latents

Every response is a pure function of (checkpoint, dataset, request); the
server keeps no mutable state. A spherical-model z with a non-unit norm is
rejected with status 422 and a machine-readable reason.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import aero, pipeline, vae
from .errors import ParameterError

NORM_TOL = 1e-6


class ExplorerState:
    """Immutable bundle the handlers read from."""

    def __init__(self, model: vae.CvaeModel, flow: aero.FlowCondition,
                 data_vectors=None, data_labels=None, data_ids=None,
                 data_families=None, seed: int = 0):
        self.model = model
        self.flow = flow
        self.data_vectors = data_vectors
        self.data_labels = data_labels
        self.data_ids = data_ids
        self.data_families = data_families
        self.seed = seed
        self._lock = threading.Lock()
        self._latent_map_cache = None

    def model_info(self) -> dict:
        m = self.model
        return {"kind": m.kind, "d": m.d, "n_points": m.n_points,
                "conditional": m.conditional, "alpha": self.flow.alpha,
                "latent_width": m.latent_width,
                "has_dataset": self.data_vectors is not None}

    def decode(self, payload: dict) -> tuple[int, dict]:
        if "z" not in payload or "c_l" not in payload:
            return 400, {"error": "missing_field", "detail": "need z and c_l"}
        z = np.asarray(payload["z"], dtype=float)
        if z.ndim != 1 or len(z) != self.model.latent_width:
            return 422, {"error": "bad_latent_width",
                         "detail": f"expected {self.model.latent_width} components"}
        if self.model.kind == "sphere":
            norm = float(np.linalg.norm(z))
            if abs(norm - 1.0) > NORM_TOL:
                return 422, {"error": "norm_violation", "norm": norm,
                             "detail": "spherical latent vectors must have unit norm"}
        out = pipeline.evaluate_decode(self.model, z, float(payload["c_l"]), self.flow)
        return 200, out

    def latent_map(self) -> tuple[int, dict]:
        if self.data_vectors is None:
            return 400, {"error": "no_dataset",
                         "detail": "server started without a dataset"}
        with self._lock:
            if self._latent_map_cache is None:
                z = vae.posterior_mean_z(self.model, self.data_vectors, self.data_labels)
                self._latent_map_cache = {
                    "ids": list(self.data_ids),
                    "z": z.tolist(),
                    "c_l": [float(v) for v in self.data_labels],
                    "family": list(self.data_families),
                }
            return 200, self._latent_map_cache

    def sample(self, payload: dict) -> tuple[int, dict]:
        count = int(payload.get("count", 30))
        sampling = payload.get("sampling", "random")
        data = None
        if sampling == "envelope":
            if self.data_vectors is None:
                return 400, {"error": "no_dataset",
                             "detail": "envelope sampling needs a dataset"}
            data = (self.data_vectors, self.data_labels)
        # pure function of the request: same (seed, count, sampling) -> same draw
        req_seed = int(payload.get("seed", 0))
        rng = np.random.default_rng((self.seed, req_seed, count))
        try:
            z = vae.sample_latents(self.model, count, sampling, rng, data)
        except ParameterError as exc:
            return 422, {"error": "bad_sampling", "detail": str(exc)}
        return 200, {"z": z.tolist(), "sampling": sampling}


def make_handler(state: ExplorerState):
    class Handler(BaseHTTPRequestHandler):
        def _send(self, status: int, doc: dict):
            body = json.dumps(doc).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, fmt, *args):
            pass

        def do_OPTIONS(self):
            self._send(204, {})

        def do_GET(self):
            if self.path == "/model":
                self._send(200, state.model_info())
            elif self.path == "/latent-map":
                self._send(*state.latent_map())
            else:
                self._send(404, {"error": "not_found"})

        def do_POST(self):
            try:
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
            except (ValueError, json.JSONDecodeError):
                self._send(400, {"error": "bad_json"})
                return
            if self.path == "/decode":
                try:
                    self._send(*state.decode(payload))
                except Exception as exc:
                    self._send(500, {"error": "internal", "detail": str(exc)})
            elif self.path == "/sample":
                self._send(*state.sample(payload))
            else:
                self._send(404, {"error": "not_found"})

    return Handler


def serve(state: ExplorerState, port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Create the server (caller decides whether to serve_forever or poll)."""
    return ThreadingHTTPServer((host, port), make_handler(state))
