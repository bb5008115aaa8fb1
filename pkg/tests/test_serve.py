import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from foilgen import aero, dataset as ds, geometry, pipeline, server, vae


@pytest.fixture(scope="module")
def live_server(flow):
    rng = np.random.default_rng(1)
    model = vae.build_model("sphere", 2, 248, rng, hidden=(16, 16))
    grid = {"a_step": 0.05, "a_max": 0.15, "b_step": 0.05, "b_max": 0.05, "r": 1.1}
    data, _ = ds.build_joukowski(flow, grid=grid, stride=(1, 1))
    state = server.ExplorerState(
        model, flow,
        data_vectors=data.vectors(), data_labels=data.labels(),
        data_ids=[it.id for it in data.items],
        data_families=[it.family for it in data.items], seed=4)
    httpd = server.serve(state, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    yield base, model, state, data
    httpd.shutdown()


def get(url):
    with urllib.request.urlopen(url) as resp:
        return resp.status, json.loads(resp.read())


def post(url, payload, raw=None):
    body = raw if raw is not None else json.dumps(payload).encode()
    req = urllib.request.Request(url, data=body,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


class TestEndpoints:
    def test_model_info(self, live_server):
        base, model, _, _ = live_server
        status, doc = get(base + "/model")
        assert status == 200
        assert doc["kind"] == "sphere" and doc["d"] == 2
        assert doc["latent_width"] == 3

    def test_decode_roundtrip(self, live_server, flow):
        base, model, _, data = live_server
        z = np.array([0.0, 0.6, 0.8])
        status, doc = get(base + "/model")
        status, doc = post(base + "/decode", {"z": z.tolist(), "c_l": 0.7})
        assert status == 200
        assert len(doc["shape"]) == 248
        # bit-for-bit consistent with the direct pipeline call
        direct = pipeline.evaluate_decode(model, z, 0.7, flow)
        assert doc["shape"] == direct["shape"]
        assert doc["c_l_recomputed"] == direct["c_l_recomputed"]
        assert doc["w"] == direct["w"]

    def test_decode_norm_violation_422(self, live_server):
        base, *_ = live_server
        status, doc = post(base + "/decode", {"z": [0.9, 0.0, 0.0], "c_l": 0.5})
        assert status == 422
        assert doc["error"] == "norm_violation"

    def test_crafted_raw_request_422(self, live_server):
        # hand-built body bypassing any client-side projection
        base, *_ = live_server
        raw = b'{"z": [0.57, 0.57, 0.57999], "c_l": 0.4}'
        status, doc = post(base + "/decode", {}, raw=raw)
        assert status == 422
        assert doc["error"] == "norm_violation"
        assert "norm" in doc

    def test_decode_reconstruction_path(self, live_server, flow):
        base, model, _, data = live_server
        vecs, labels = data.vectors(), data.labels()
        z = vae.posterior_mean_z(model, vecs[:1], labels[:1])[0]
        status, doc = post(base + "/decode", {"z": z.tolist(), "c_l": float(labels[0])})
        assert status == 200
        got = np.array(doc["shape"])
        assert got.shape == (248, 2)

    def test_latent_map(self, live_server):
        base, _, _, data = live_server
        status, doc = get(base + "/latent-map")
        assert status == 200
        assert len(doc["ids"]) == len(data)
        z = np.array(doc["z"])
        assert np.max(np.abs(np.linalg.norm(z, axis=1) - 1.0)) < 1e-9

    def test_sample_sphere_random(self, live_server):
        base, *_ = live_server
        status, doc = post(base + "/sample", {"count": 30, "sampling": "random"})
        assert status == 200
        z = np.array(doc["z"])
        assert z.shape == (30, 3)
        assert np.max(np.abs(np.linalg.norm(z, axis=1) - 1.0)) < 1e-9

    def test_sample_envelope_rejected_on_sphere(self, live_server):
        base, *_ = live_server
        status, doc = post(base + "/sample", {"count": 5, "sampling": "envelope"})
        assert status == 422
        assert doc["error"] == "bad_sampling"

    def test_sample_pure_function_of_request(self, live_server):
        base, *_ = live_server
        _, a = post(base + "/sample", {"count": 4, "sampling": "random", "seed": 11})
        _, b = post(base + "/sample", {"count": 4, "sampling": "random", "seed": 11})
        assert a == b

    def test_bad_json(self, live_server):
        base, *_ = live_server
        status, doc = post(base + "/decode", {}, raw=b"{not json")
        assert status == 400

    def test_unknown_route(self, live_server):
        base, *_ = live_server
        status, doc = post(base + "/nope", {})
        assert status == 404
