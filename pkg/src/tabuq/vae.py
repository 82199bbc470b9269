"""Linear Gaussian VAE used as a novelty detector.

Encoder and decoder are single linear maps (no hidden layers). The encoder
produces a diagonal Gaussian over the latent space; the decoder produces a
diagonal Gaussian over feature space with a learned per-dimension variance.
Training minimizes the negative ELBO with one reparameterized latent sample
per datum per step; log-variances are clamped to [-10, 10].
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import DataError, ParameterError, ShapeError, TrainingError
from .numeric import AdamState, adam_step
from .rng import SeededRng

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0
LOG_2PI = float(np.log(2.0 * np.pi))

# Parameter ordering used by flatten/with_params and the trainer.
PARAM_FIELDS = ("enc_w_mu", "enc_b_mu", "enc_w_lv", "enc_b_lv",
                "dec_w_mu", "dec_b_mu", "dec_w_lv", "dec_b_lv")


@dataclass(frozen=True)
class VaeModel:
    enc_w_mu: np.ndarray
    enc_b_mu: np.ndarray
    enc_w_lv: np.ndarray
    enc_b_lv: np.ndarray
    dec_w_mu: np.ndarray
    dec_b_mu: np.ndarray
    dec_w_lv: np.ndarray
    dec_b_lv: np.ndarray

    @property
    def n_features(self) -> int:
        return self.enc_w_mu.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.enc_w_mu.shape[1]

    def params(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, name) for name in PARAM_FIELDS)


@dataclass(frozen=True)
class VaeConfig:
    latent_dim: int = 500
    batch_size: int = 256
    epochs: int = 30
    lr: float = 1e-3
    samples: int = 10

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ParameterError(f"latent dimension must be positive, got {self.latent_dim}")
        if self.batch_size < 1 or self.epochs < 1 or self.samples < 1:
            raise ParameterError("batch_size, epochs and samples must be positive")

    @classmethod
    def toy(cls) -> "VaeConfig":
        return cls(latent_dim=2)


def _encode(model: VaeModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Latent mean, clamped log-variance, and the pre-clamp raw log-variance."""
    e_mu = X @ model.enc_w_mu + model.enc_b_mu
    e_lv_raw = X @ model.enc_w_lv + model.enc_b_lv
    return e_mu, np.clip(e_lv_raw, LOGVAR_MIN, LOGVAR_MAX), e_lv_raw


def _decode(model: VaeModel, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d_mu = z @ model.dec_w_mu + model.dec_b_mu
    d_lv_raw = z @ model.dec_w_lv + model.dec_b_lv
    return d_mu, np.clip(d_lv_raw, LOGVAR_MIN, LOGVAR_MAX), d_lv_raw


def _check_inputs(model: VaeModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(
            f"model expects (N, {model.n_features}) inputs, got {X.shape}")
    return X


def decoder_nll(X: np.ndarray, d_mu: np.ndarray, d_lv: np.ndarray) -> np.ndarray:
    """Per-row negative log-likelihood under the decoder's diagonal Gaussian."""
    r = X - d_mu
    return 0.5 * (d_lv + r * r * np.exp(-d_lv) + LOG_2PI).sum(axis=1)


def kl_to_standard_normal(e_mu: np.ndarray, e_lv: np.ndarray) -> np.ndarray:
    """Closed-form per-row KL(q(z|x) || N(0, I)) for diagonal Gaussians."""
    return 0.5 * (e_mu * e_mu + np.exp(e_lv) - e_lv - 1.0).sum(axis=1)


def vae_loss(model: VaeModel, X: np.ndarray, eps: np.ndarray) -> float:
    """Negative ELBO (reconstruction NLL plus KL), mean over the batch.

    eps is the (N, latent) reparameterization draw; passing a frozen eps makes
    the loss a deterministic function of the parameters for gradient checks.
    """
    X = _check_inputs(model, X)
    e_mu, e_lv, _ = _encode(model, X)
    z = e_mu + np.exp(0.5 * e_lv) * eps
    d_mu, d_lv, _ = _decode(model, z)
    return float((decoder_nll(X, d_mu, d_lv) + kl_to_standard_normal(e_mu, e_lv)).mean())


def vae_loss_and_grads(model: VaeModel, X: np.ndarray, eps: np.ndarray
                       ) -> tuple[float, tuple[np.ndarray, ...]]:
    """Negative-ELBO loss and analytic gradients in PARAM_FIELDS order.

    Clamped log-variance coordinates receive zero gradient through the clamp.
    The reparameterization path contributes d z / d e_lv = eps * s / 2 with
    s = exp(e_lv / 2).
    """
    X = _check_inputs(model, X)
    n = X.shape[0]
    e_mu, e_lv, e_lv_raw = _encode(model, X)
    s = np.exp(0.5 * e_lv)
    z = e_mu + s * eps
    d_mu, d_lv, d_lv_raw = _decode(model, z)
    r = X - d_mu
    inv_var = np.exp(-d_lv)
    loss = float((decoder_nll(X, d_mu, d_lv) + kl_to_standard_normal(e_mu, e_lv)).mean())

    mask_x = ((d_lv_raw > LOGVAR_MIN) & (d_lv_raw < LOGVAR_MAX)).astype(np.float64)
    mask_z = ((e_lv_raw > LOGVAR_MIN) & (e_lv_raw < LOGVAR_MAX)).astype(np.float64)

    delta_dmu = -r * inv_var / n
    delta_dlv = mask_x * 0.5 * (1.0 - r * r * inv_var) / n
    g_dec_w_mu = z.T @ delta_dmu
    g_dec_b_mu = delta_dmu.sum(axis=0)
    g_dec_w_lv = z.T @ delta_dlv
    g_dec_b_lv = delta_dlv.sum(axis=0)

    dz = delta_dmu @ model.dec_w_mu.T + delta_dlv @ model.dec_w_lv.T
    de_mu = dz + e_mu / n
    de_lv = mask_z * (dz * eps * 0.5 * s + 0.5 * (np.exp(e_lv) - 1.0) / n)
    g_enc_w_mu = X.T @ de_mu
    g_enc_b_mu = de_mu.sum(axis=0)
    g_enc_w_lv = X.T @ de_lv
    g_enc_b_lv = de_lv.sum(axis=0)

    return loss, (g_enc_w_mu, g_enc_b_mu, g_enc_w_lv, g_enc_b_lv,
                  g_dec_w_mu, g_dec_b_mu, g_dec_w_lv, g_dec_b_lv)


def flatten_vae_params(model: VaeModel) -> np.ndarray:
    return np.concatenate([p.ravel() for p in model.params()])


def vae_with_params(model: VaeModel, flat: np.ndarray) -> VaeModel:
    flat = np.asarray(flat, dtype=np.float64)
    updates = {}
    pos = 0
    for name in PARAM_FIELDS:
        p = getattr(model, name)
        updates[name] = flat[pos:pos + p.size].reshape(p.shape).copy()
        pos += p.size
    if pos != flat.size:
        raise ShapeError(f"parameter vector has {flat.size} entries, model needs {pos}")
    return replace(model, **updates)


def init_vae(n_features: int, cfg: VaeConfig, rng: SeededRng) -> VaeModel:
    """Uniform init with bound 1/sqrt(fan_in) per map, like the MLP layers."""
    enc_bound = 1.0 / np.sqrt(n_features)
    dec_bound = 1.0 / np.sqrt(cfg.latent_dim)
    L, D = cfg.latent_dim, n_features
    return VaeModel(
        enc_w_mu=rng.split("enc_w_mu").uniform(-enc_bound, enc_bound, (D, L)),
        enc_b_mu=rng.split("enc_b_mu").uniform(-enc_bound, enc_bound, (L,)),
        enc_w_lv=rng.split("enc_w_lv").uniform(-enc_bound, enc_bound, (D, L)),
        enc_b_lv=rng.split("enc_b_lv").uniform(-enc_bound, enc_bound, (L,)),
        dec_w_mu=rng.split("dec_w_mu").uniform(-dec_bound, dec_bound, (L, D)),
        dec_b_mu=rng.split("dec_b_mu").uniform(-dec_bound, dec_bound, (D,)),
        dec_w_lv=rng.split("dec_w_lv").uniform(-dec_bound, dec_bound, (L, D)),
        dec_b_lv=rng.split("dec_b_lv").uniform(-dec_bound, dec_bound, (D,)),
    )


def train_vae(train: Dataset, cfg: VaeConfig, rng: SeededRng) -> VaeModel:
    """Minibatch Adam on the negative ELBO for a fixed number of epochs."""
    if train.n < 1:
        raise DataError("training set is empty")
    model = init_vae(train.d, cfg, rng.split("init"))
    states = [AdamState.for_params(p, lr=cfg.lr) for p in model.params()]
    shuffle_rng = rng.split("shuffle")
    eps_rng = rng.split("eps")
    for epoch in range(cfg.epochs):
        order = shuffle_rng.split(str(epoch)).permutation(train.n)
        for b, start in enumerate(range(0, train.n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            X = train.features[idx]
            eps = eps_rng.split(f"{epoch}.{b}").normal((len(idx), cfg.latent_dim))
            loss, grads = vae_loss_and_grads(model, X, eps)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite VAE loss at epoch {epoch}")
            updates = {}
            for name, p, g, st in zip(PARAM_FIELDS, model.params(), grads, states):
                p_new, _ = adam_step(p, g, st)
                updates[name] = p_new
            model = replace(model, **updates)
    return model


def vae_novelty_score(model: VaeModel, X: np.ndarray, S: int = 10,
                      rng: SeededRng | None = None) -> np.ndarray:
    """Mean decoder NLL over S latent samples; higher means more novel.

    The S reparameterization draws are shared across rows, so duplicate rows
    always receive identical scores under a fixed seed.
    """
    if S < 1:
        raise ParameterError(f"need at least one latent sample, got S={S}")
    if rng is None:
        raise ParameterError("vae_novelty_score needs an rng")
    X = _check_inputs(model, X)
    e_mu, e_lv, _ = _encode(model, X)
    s = np.exp(0.5 * e_lv)
    eps = rng.normal((S, model.latent_dim))
    total = np.zeros(X.shape[0])
    for k in range(S):
        z = e_mu + s * eps[k]
        d_mu, d_lv, _ = _decode(model, z)
        total += decoder_nll(X, d_mu, d_lv)
    return total / S
