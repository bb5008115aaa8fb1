"""Conditional VAEs with Gaussian (euclidean) or von Mises-Fisher (spherical)
latent spaces, trained by manual backprop through the reparameterized samplers.

Both models share the architecture: encoder 2n(+label) -> 500 -> 500 -> heads,
decoder latent(+label) -> 500 -> 500 -> 2n. The spherical model keeps its mean
direction on the unit sphere and regularizes only the concentration, so the
prior (uniform on the sphere) never collapses the posterior means to a point.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ive

from .errors import FormatError, ParameterError, TrainingError
from .nn import AdamState, Layer, MlpModel, TrainConfig, adam_step, backward, forward, init_mlp

KAPPA_MIN, KAPPA_MAX = 1e-3, 5e3
KAPPA_INIT_BIAS = 20.0          # softplus(20) ~ 20: informative latent at init
SIGMA_FLOOR = 1e-8
HIDDEN = (500, 500)
CHECKPOINT_FORMAT = "foilgen-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class GaussLatent:
    mu: np.ndarray       # (batch, d)
    sigma: np.ndarray    # (batch, d), positive

    @property
    def d(self) -> int:
        return self.mu.shape[1]


@dataclass(frozen=True)
class SphereLatent:
    mu: np.ndarray       # (batch, d+1), unit rows
    kappa: np.ndarray    # (batch,), >= 0

    @property
    def d(self) -> int:
        return self.mu.shape[1] - 1


@dataclass
class CvaeModel:
    encoder: MlpModel
    decoder: MlpModel
    kind: str                 # "gauss" | "sphere"
    d: int
    n_points: int
    conditional: bool = True

    @property
    def latent_width(self) -> int:
        return self.d if self.kind == "gauss" else self.d + 1


def build_model(kind: str, d: int, n_points: int, rng: np.random.Generator,
                conditional: bool = True, hidden: tuple[int, int] = HIDDEN) -> CvaeModel:
    if kind not in ("gauss", "sphere"):
        raise ParameterError(f"unknown latent kind {kind!r}")
    if d < 1:
        raise ParameterError("latent dimension must be >= 1")
    in_width = 2 * n_points + (1 if conditional else 0)
    head = 2 * d if kind == "gauss" else (d + 1) + 1
    enc = init_mlp([in_width, hidden[0], hidden[1], head],
                   ["relu", "relu", "linear"], rng)
    if kind == "sphere":
        # start concentrated: a near-uniform posterior at init carries no
        # information, the decoder learns to ignore it, and the latent heads
        # never recover
        enc.layers[-1].b[d + 1] = KAPPA_INIT_BIAS
    lat = d if kind == "gauss" else d + 1
    dec = init_mlp([lat + (1 if conditional else 0), hidden[1], hidden[0], 2 * n_points],
                   ["relu", "relu", "linear"], rng)
    return CvaeModel(encoder=enc, decoder=dec, kind=kind, d=d,
                     n_points=n_points, conditional=conditional)


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _encoder_input(model: CvaeModel, s: np.ndarray, c: np.ndarray) -> np.ndarray:
    s = np.atleast_2d(np.asarray(s, dtype=float))
    if model.conditional:
        c = np.asarray(c, dtype=float).reshape(len(s), 1)
        return np.concatenate([s, c], axis=1)
    return s


def _split_heads(model: CvaeModel, raw: np.ndarray):
    if model.kind == "gauss":
        return raw[:, :model.d], raw[:, model.d:]
    return raw[:, :model.d + 1], raw[:, model.d + 1]


def encode(model: CvaeModel, s: np.ndarray, c: np.ndarray):
    """Posterior parameters for a batch of flattened shapes with labels."""
    raw = forward(model.encoder, _encoder_input(model, s, c))[-1][1]
    head_a, head_b = _split_heads(model, raw)
    if model.kind == "gauss":
        sigma = np.maximum(_softplus(head_b), SIGMA_FLOOR)
        return GaussLatent(mu=head_a, sigma=sigma)
    norms = np.linalg.norm(head_a, axis=1, keepdims=True)
    mu = head_a / np.maximum(norms, 1e-12)
    # floor added smoothly so the concentration head never loses its gradient
    kappa = KAPPA_MIN + np.minimum(_softplus(head_b), KAPPA_MAX)
    return SphereLatent(mu=mu, kappa=kappa)


def sample_gauss(lat: GaussLatent, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal(lat.mu.shape)
    return lat.mu + lat.sigma * eps


def _sample_w(kappa: np.ndarray, dim_m: int, rng: np.random.Generator,
              max_rounds: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Rejection-sample the cosine w of the angle to mu. Returns (w, beta draw)."""
    kappa = np.asarray(kappa, dtype=float)
    b = dim_m / (np.sqrt(4.0 * kappa**2 + dim_m**2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dim_m * np.log(1.0 - x0 * x0)
    w = np.empty_like(kappa)
    zb = np.empty_like(kappa)
    todo = np.arange(len(kappa))
    for _ in range(max_rounds):
        z = rng.beta(dim_m / 2.0, dim_m / 2.0, size=len(todo))
        u = rng.uniform(size=len(todo))
        bt = b[todo]
        cand = (1.0 - (1.0 + bt) * z) / (1.0 - (1.0 - bt) * z)
        ok = kappa[todo] * cand + dim_m * np.log(1.0 - x0[todo] * cand) - c[todo] >= np.log(u)
        idx = todo[ok]
        w[idx] = cand[ok]
        zb[idx] = z[ok]
        todo = todo[~ok]
        if len(todo) == 0:
            return w, zb
    raise TrainingError("vMF rejection sampler exceeded the proposal budget")


def _householder_apply(mu: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Reflect s so the north pole maps onto mu, rowwise."""
    dim = mu.shape[1]
    e = np.zeros(dim)
    e[-1] = 1.0
    g = e[None, :] - mu
    n2 = np.sum(g * g, axis=1, keepdims=True)
    safe = n2 > 1e-24
    coef = np.where(safe, 2.0 * np.sum(g * s, axis=1, keepdims=True) / np.where(safe, n2, 1.0), 0.0)
    return s - coef * g


def sample_vmf(lat: SphereLatent, rng: np.random.Generator) -> np.ndarray:
    """Draw unit vectors from vMF(mu, kappa): rejection-sampled cosine,
    uniform tangent direction, Householder rotation from the north pole."""
    z, _aux = _sample_vmf_aux(lat, rng)
    return z


def _sample_vmf_aux(lat: SphereLatent, rng: np.random.Generator):
    dim = lat.mu.shape[1]
    w, zb = _sample_w(lat.kappa, dim - 1, rng)
    u = rng.standard_normal((len(w), dim - 1))
    t = u / np.linalg.norm(u, axis=1, keepdims=True)
    s = np.concatenate([np.sqrt(np.maximum(0.0, 1.0 - w**2))[:, None] * t, w[:, None]], axis=1)
    z = _householder_apply(lat.mu, s)
    return z, (w, zb, t, s)


def kl_gauss(lat: GaussLatent) -> np.ndarray:
    """Per-row KL(N(mu, diag sigma^2) || N(0, I))."""
    return 0.5 * np.sum(lat.mu**2 + lat.sigma**2 - 1.0 - 2.0 * np.log(lat.sigma), axis=1)


def _bessel_ratio(nu: float, kappa):
    return ive(nu, kappa) / ive(nu - 1.0, kappa)


def kl_vmf(kappa, d: int):
    """KL(vMF(mu, kappa) || uniform on S^d); independent of mu by symmetry.

    Evaluated with exponentially scaled Bessel functions so large kappa
    never overflows.
    """
    if d < 1:
        raise ParameterError("d must be >= 1")
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0):
        raise ParameterError("kappa must be >= 0")
    nu = (d + 1) / 2.0
    k = np.maximum(kappa, 1e-300)
    val = (k * _bessel_ratio(nu, k)
           + (nu - 1.0) * np.log(k)
           - nu * np.log(2.0 * np.pi)
           - (np.log(ive(nu - 1.0, k)) + k)
           + nu * np.log(np.pi) + np.log(2.0) - gammaln(nu))
    return np.where(kappa < 1e-12, 0.0, np.maximum(val, 0.0))


def kl_vmf_grad(kappa, d: int):
    """d KL / d kappa = kappa * A'(kappa) with A the Bessel ratio."""
    kappa = np.asarray(kappa, dtype=float)
    nu = (d + 1) / 2.0
    k = np.maximum(kappa, 1e-12)
    a = _bessel_ratio(nu, k)
    a_prime = 1.0 - a**2 - (d / k) * a
    return k * a_prime


@dataclass
class LossParts:
    total: float
    rec: float
    kl: float


def decode(model: CvaeModel, z: np.ndarray, c: np.ndarray,
           norm_tol: float = 1e-6) -> np.ndarray:
    """Decoder output for latent vectors z and labels c (batch, 2n)."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[1] != model.latent_width:
        raise ParameterError(f"latent width {z.shape[1]} != expected {model.latent_width}")
    if model.kind == "sphere":
        norms = np.linalg.norm(z, axis=1)
        if np.any(np.abs(norms - 1.0) > norm_tol):
            raise ParameterError("spherical latent vectors must have unit norm")
    if model.conditional:
        c = np.asarray(c, dtype=float).reshape(len(z), 1)
        z = np.concatenate([z, c], axis=1)
    return forward(model.decoder, z)[-1][1]


def posterior_mean_z(model: CvaeModel, s: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Mean latent per item (mean vector, or mean direction on the sphere)."""
    lat = encode(model, s, c)
    return lat.mu


def _forward_training(model: CvaeModel, s: np.ndarray, c: np.ndarray,
                      rng: np.random.Generator, kl_weight: float):
    """Full pass with every intermediate needed for the manual backward."""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    enc_in = _encoder_input(model, s, c)
    enc_caches = forward(model.encoder, enc_in)
    raw = enc_caches[-1][1]
    head_a, head_b = _split_heads(model, raw)
    ctx = {"s": s, "enc_in": enc_in, "enc_caches": enc_caches,
           "head_a": head_a, "head_b": head_b}
    if model.kind == "gauss":
        sigma = np.maximum(_softplus(head_b), SIGMA_FLOOR)
        eps = rng.standard_normal(head_a.shape)
        z = head_a + sigma * eps
        kl = kl_gauss(GaussLatent(mu=head_a, sigma=sigma))
        ctx.update(sigma=sigma, eps=eps)
    else:
        norms = np.linalg.norm(head_a, axis=1, keepdims=True)
        mu = head_a / np.maximum(norms, 1e-12)
        kappa = KAPPA_MIN + np.minimum(_softplus(head_b), KAPPA_MAX)
        lat = SphereLatent(mu=mu, kappa=kappa)
        z, (w, zb, t, s_local) = _sample_vmf_aux(lat, rng)
        kl = kl_vmf(kappa, model.d)
        ctx.update(mu=mu, norms=norms, kappa=kappa, w=w, zb=zb, t=t, s_local=s_local)
    dec_in = np.concatenate([z, np.asarray(c, dtype=float).reshape(len(z), 1)], axis=1) \
        if model.conditional else z
    dec_caches = forward(model.decoder, dec_in)
    y = dec_caches[-1][1]
    rec = np.sum((y - s) ** 2, axis=1)
    total = float(np.mean(rec) + kl_weight * np.mean(kl))
    ctx.update(z=z, dec_in=dec_in, dec_caches=dec_caches, y=y,
               rec=rec, kl=kl, kl_weight=kl_weight)
    return total, ctx


def loss(model: CvaeModel, s: np.ndarray, c: np.ndarray, rng: np.random.Generator,
         kl_weight: float = 1.0) -> LossParts:
    """total = mean ||s - y||^2 + kl_weight * mean KL over the batch."""
    s2 = np.atleast_2d(np.asarray(s, dtype=float))
    if len(s2) == 0:
        raise ParameterError("batch must be nonempty")
    total, ctx = _forward_training(model, s2, c, rng, kl_weight)
    if not np.isfinite(total):
        raise TrainingError("non-finite loss")
    return LossParts(total=total, rec=float(np.mean(ctx["rec"])),
                     kl=float(np.mean(ctx["kl"])))


def _backward_training(model: CvaeModel, ctx) -> list[np.ndarray]:
    """Gradients of the scalar loss, ordered encoder params then decoder params."""
    s = ctx["s"]
    bsz = len(s)
    kl_weight = ctx["kl_weight"]
    dy = 2.0 * (ctx["y"] - s) / bsz
    dec_grads, ddec_in = backward(model.decoder, ctx["dec_in"], ctx["dec_caches"], dy)
    dz = ddec_in[:, :model.latent_width] if model.conditional else ddec_in
    if model.kind == "gauss":
        dmu = dz + kl_weight * ctx["head_a"] / bsz
        sigma = ctx["sigma"]
        dsigma = dz * ctx["eps"] + kl_weight * (sigma - 1.0 / sigma) / bsz
        dhead_b = dsigma * _sigmoid(ctx["head_b"])
        dhead_b[sigma <= SIGMA_FLOOR] = 0.0
        denc_out = np.concatenate([dmu, dhead_b], axis=1)
    else:
        mu, w, zb, t = ctx["mu"], ctx["w"], ctx["zb"], ctx["t"]
        s_local = ctx["s_local"]
        kappa = ctx["kappa"]
        dim = mu.shape[1]
        e = np.zeros(dim)
        e[-1] = 1.0
        g = e[None, :] - mu
        n2 = np.sum(g * g, axis=1, keepdims=True)
        n2 = np.maximum(n2, 1e-24)
        gs = np.sum(g * s_local, axis=1, keepdims=True)
        dz_g = np.sum(dz * g, axis=1, keepdims=True)
        # z = s - (2 gs / n2) g : pull gradients back to s_local and g
        ds = dz - (2.0 / n2) * dz_g * g
        dg = -(2.0 / n2) * (dz_g * s_local + gs * dz) + (4.0 * gs / n2**2) * dz_g * g
        dmu = -dg
        # s_local = (sqrt(1-w^2) t, w)
        root = np.sqrt(np.maximum(1.0 - w**2, 1e-24))
        dw = ds[:, -1] - np.sum(ds[:, :-1] * t, axis=1) * (w / root)
        # w through the accepted proposal: pathwise in kappa via b(kappa)
        m_dim = dim - 1
        sq = np.sqrt(4.0 * kappa**2 + m_dim**2)
        b = m_dim / (sq + 2.0 * kappa)
        db_dk = -m_dim * (4.0 * kappa / sq + 2.0) / (sq + 2.0 * kappa) ** 2
        den = 1.0 - (1.0 - b) * zb
        dw_db = -2.0 * zb * (1.0 - zb) / den**2
        dkappa = dw * dw_db * db_dk + kl_weight * kl_vmf_grad(kappa, model.d) / bsz
        # kappa = KAPPA_MIN + min(softplus(head_b), KAPPA_MAX): gradient only
        # stops at the (rarely reached) upper cap
        gate = (_softplus(ctx["head_b"]) < KAPPA_MAX).astype(float)
        dhead_b = dkappa * _sigmoid(ctx["head_b"]) * gate
        # mu = head_a / ||head_a||
        norms = ctx["norms"]
        dhead_a = (dmu - np.sum(dmu * mu, axis=1, keepdims=True) * mu) / norms
        denc_out = np.concatenate([dhead_a, dhead_b[:, None]], axis=1)
    enc_grads, _ = backward(model.encoder, ctx["enc_in"], ctx["enc_caches"], denc_out)
    flat = []
    for gw, gb in enc_grads:
        flat.extend([gw, gb])
    for gw, gb in dec_grads:
        flat.extend([gw, gb])
    return flat


def loss_and_grads(model: CvaeModel, s: np.ndarray, c: np.ndarray,
                   rng: np.random.Generator, kl_weight: float = 1.0):
    total, ctx = _forward_training(model, s, c, rng, kl_weight)
    grads = _backward_training(model, ctx)
    parts = LossParts(total=total, rec=float(np.mean(ctx["rec"])),
                      kl=float(np.mean(ctx["kl"])))
    return parts, grads


def evaluate(model: CvaeModel, s: np.ndarray, c: np.ndarray,
             kl_weight: float = 1.0) -> LossParts:
    """Deterministic loss with the posterior mean in place of a sample."""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    lat = encode(model, s, c)
    y = decode(model, lat.mu, c)
    rec = np.sum((y - s) ** 2, axis=1)
    kl = kl_gauss(lat) if model.kind == "gauss" else kl_vmf(lat.kappa, model.d)
    return LossParts(total=float(np.mean(rec) + kl_weight * np.mean(kl)),
                     rec=float(np.mean(rec)), kl=float(np.mean(kl)))


def train(model: CvaeModel, s: np.ndarray, c: np.ndarray, config: TrainConfig,
          test_s: np.ndarray | None = None, test_c: np.ndarray | None = None):
    """Adam over shuffled minibatches; returns the per-epoch loss trace.

    The train columns average the minibatch losses seen during the epoch;
    the test columns are deterministic posterior-mean evaluations.
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    c = np.asarray(c, dtype=float).reshape(-1)
    if len(s) != len(c):
        raise ParameterError("shape/label count mismatch")
    rng = np.random.default_rng(config.rng_seed)
    params = list(model.encoder.parameters()) + list(model.decoder.parameters())
    state = AdamState.for_model(model.encoder, model.decoder)
    trace = []
    for epoch in range(config.epochs):
        perm = rng.permutation(len(s))
        tot = rec = kl = 0.0
        nb = 0
        for lo in range(0, len(s), config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            parts, grads = loss_and_grads(model, s[idx], c[idx], rng, config.kl_weight)
            if not np.isfinite(parts.total):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            adam_step(params, grads, state, config)
            tot += parts.total
            rec += parts.rec
            kl += parts.kl
            nb += 1
        row = {"epoch": epoch, "train_total": tot / nb, "train_rec": rec / nb,
               "train_kl": kl / nb}
        if test_s is not None and len(test_s):
            te = evaluate(model, test_s, test_c, config.kl_weight)
            row.update(test_total=te.total, test_rec=te.rec, test_kl=te.kl)
        trace.append(row)
    return model, trace


def envelope_bounds(model: CvaeModel, s: np.ndarray, c: np.ndarray):
    """Per-axis [min, max] of the posterior means of a dataset (gauss models)."""
    if model.kind != "gauss":
        raise ParameterError("envelope bounds are defined for gauss models only")
    z = posterior_mean_z(model, s, c)
    return z.min(axis=0), z.max(axis=0)


def sample_latents(model: CvaeModel, count: int, sampling: str,
                   rng: np.random.Generator,
                   data: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Latent vectors for generation.

    sphere + random: uniform on the sphere. gauss + random: standard normal.
    gauss + envelope: uniform in the per-axis box of training posterior means.
    """
    if count < 0:
        raise ParameterError("count must be >= 0")
    if sampling == "random":
        if model.kind == "sphere":
            v = rng.standard_normal((count, model.d + 1))
            return v / np.linalg.norm(v, axis=1, keepdims=True)
        return rng.standard_normal((count, model.d))
    if sampling == "envelope":
        if model.kind != "gauss":
            raise ParameterError("envelope sampling applies to gauss models only")
        if data is None:
            raise ParameterError("envelope sampling needs a dataset to encode")
        lo, hi = envelope_bounds(model, data[0], data[1])
        return rng.uniform(lo, hi, size=(count, model.d))
    raise ParameterError(f"unknown sampling mode {sampling!r}")


def _encode_array(arr: np.ndarray) -> dict:
    return {"dims": list(arr.shape),
            "data": base64.b64encode(np.ascontiguousarray(arr, dtype=float).tobytes()).decode()}


def _decode_array(obj: dict) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(obj["data"]), dtype=float)
    return arr.reshape(obj["dims"]).copy()


def _mlp_to_doc(mlp: MlpModel) -> list[dict]:
    return [{"act": layer.act, "w": _encode_array(layer.w), "b": _encode_array(layer.b)}
            for layer in mlp.layers]


def _mlp_from_doc(doc: list[dict]) -> MlpModel:
    return MlpModel([Layer(w=_decode_array(e["w"]), b=_decode_array(e["b"]), act=e["act"])
                     for e in doc])


def save_checkpoint(model: CvaeModel, path, extra: dict | None = None) -> None:
    """Single self-describing JSON document; arrays are row-major base64 float64."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": model.kind,
        "d": model.d,
        "n_points": model.n_points,
        "conditional": model.conditional,
        "encoder": _mlp_to_doc(model.encoder),
        "decoder": _mlp_to_doc(model.decoder),
        "extra": extra or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_checkpoint(path) -> tuple[CvaeModel, dict]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"unparseable checkpoint: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise FormatError("not a model checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {doc.get('version')}")
    model = CvaeModel(encoder=_mlp_from_doc(doc["encoder"]),
                      decoder=_mlp_from_doc(doc["decoder"]),
                      kind=doc["kind"], d=doc["d"], n_points=doc["n_points"],
                      conditional=doc["conditional"])
    return model, doc.get("extra", {})
