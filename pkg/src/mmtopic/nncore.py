"""Dense neural substrate: activations, the reparameterized Gaussian draw,
closed-form KL terms, the logistic-normal Dirichlet prior approximation,
Adam, and a finite-difference gradient checker.

Everything runs in float64 on plain numpy arrays. Parameter sets are flat
dicts of named arrays so the optimizer and the gradient checker can treat
every model uniformly. Gradients are written by hand throughout the
package; :func:`gradcheck` is the contract that keeps them honest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def softplus(x):
    """log(1 + exp(x)), overflow-safe for large positive inputs."""
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x, axis=-1):
    """Shift-invariant softmax along ``axis``."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(x, axis=-1):
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def activation(kind: str, x):
    """Apply a named activation. Supported kinds: ``softplus``, ``softmax``."""
    if kind == "softplus":
        return softplus(x)
    if kind == "softmax":
        return softmax(x)
    raise ValueError(f"unknown activation kind {kind!r}")


def reparameterize(mu, logvar, eps):
    """Map a diagonal-Gaussian draw onto the probability simplex.

    z = mu + exp(logvar / 2) * eps, theta = softmax(z). With ``eps == 0``
    this is the posterior-mean topic distribution. Works on single vectors
    or row-stacked batches.
    """
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    z = mu + np.exp(0.5 * logvar) * eps
    return softmax(z, axis=-1)


@dataclass(frozen=True)
class GaussianPrior:
    """Diagonal Gaussian with per-dimension mean and variance."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "variance", np.asarray(self.variance, dtype=np.float64))
        if self.mean.shape != self.variance.shape:
            raise ValueError("prior mean and variance must have the same shape")
        if np.any(self.variance <= 0):
            raise ValueError("prior variance must be strictly positive")


def dirichlet_laplace_prior(num_topics: int, alpha: float) -> GaussianPrior:
    """Gaussian approximation of a symmetric Dirichlet(alpha) in softmax
    space: zero mean, per-dimension variance (1/alpha) * (1 - 2/K) +
    (1/K^2) * K * (1/alpha), which collapses to (1/alpha) * (1 - 1/K)."""
    if num_topics < 2:
        raise ValueError("num_topics must be >= 2")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    inv = 1.0 / alpha
    variance = inv * (1.0 - 2.0 / num_topics) + (num_topics * inv) / num_topics ** 2
    return GaussianPrior(mean=np.zeros(num_topics),
                         variance=np.full(num_topics, variance))


def kl_diag_gaussian(mu, logvar, prior: GaussianPrior) -> float:
    """Closed-form KL(N(mu, exp(logvar)) || prior), both diagonal."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    if mu.shape != logvar.shape or mu.shape != prior.mean.shape:
        raise ValueError("mu, logvar, and prior must share one shape")
    return float(np.sum(_kl_terms(mu, logvar, prior)))


def _kl_terms(mu, logvar, prior: GaussianPrior):
    """Per-dimension KL contributions; broadcasts over leading axes."""
    var = np.exp(logvar)
    return 0.5 * ((var + (mu - prior.mean) ** 2) / prior.variance
                  - 1.0 + np.log(prior.variance) - logvar)


def kl_rows(mu, logvar, prior: GaussianPrior) -> np.ndarray:
    """KL per row for batched (N, K) posterior parameters."""
    return np.sum(_kl_terms(mu, logvar, prior), axis=-1)


def kl_grads(mu, logvar, prior: GaussianPrior):
    """Gradients of the summed KL with respect to mu and logvar."""
    d_mu = (mu - prior.mean) / prior.variance
    d_logvar = 0.5 * (np.exp(logvar) / prior.variance - 1.0)
    return d_mu, d_logvar


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_inference_network(input_dim: int, num_topics: int,
                           rng: np.random.Generator,
                           hidden_dim: int = 100) -> dict[str, np.ndarray]:
    """Glorot-uniform weights and zero biases for the encoder: one hidden
    layer with softplus activation feeding separate mu and logvar heads."""
    if input_dim < 1 or hidden_dim < 1 or num_topics < 2:
        raise ValueError("invalid encoder dimensions")
    return {
        "W_hidden": glorot_uniform(rng, (hidden_dim, input_dim)),
        "b_hidden": np.zeros(hidden_dim),
        "W_mu": glorot_uniform(rng, (num_topics, hidden_dim)),
        "b_mu": np.zeros(num_topics),
        "W_logvar": glorot_uniform(rng, (num_topics, hidden_dim)),
        "b_logvar": np.zeros(num_topics),
    }


def inference_forward(params: dict, prefix: str, x: np.ndarray,
                      dropout_mask: np.ndarray | None = None):
    """Encoder forward pass over a row-stacked batch.

    ``dropout_mask`` is an inverted-dropout scale matrix (entries 0 or
    1/(1-rate)) applied to the hidden activation, or None to disable.
    Returns (mu, logvar, cache) where cache feeds the backward pass.
    """
    w1 = params[prefix + ".W_hidden"]
    pre = x @ w1.T + params[prefix + ".b_hidden"]
    hidden = softplus(pre)
    dropped = hidden if dropout_mask is None else hidden * dropout_mask
    mu = dropped @ params[prefix + ".W_mu"].T + params[prefix + ".b_mu"]
    logvar = dropped @ params[prefix + ".W_logvar"].T + params[prefix + ".b_logvar"]
    return mu, logvar, (x, pre, dropped, dropout_mask)


def inference_backward(params: dict, prefix: str, cache, d_mu, d_logvar,
                       grads: dict) -> np.ndarray:
    """Accumulate encoder parameter gradients into ``grads``; returns the
    gradient with respect to the input batch."""
    x, pre, dropped, mask = cache
    grads[prefix + ".W_mu"] += d_mu.T @ dropped
    grads[prefix + ".b_mu"] += d_mu.sum(axis=0)
    grads[prefix + ".W_logvar"] += d_logvar.T @ dropped
    grads[prefix + ".b_logvar"] += d_logvar.sum(axis=0)
    d_dropped = d_mu @ params[prefix + ".W_mu"] + d_logvar @ params[prefix + ".W_logvar"]
    d_hidden = d_dropped if mask is None else d_dropped * mask
    d_pre = d_hidden * sigmoid(pre)
    grads[prefix + ".W_hidden"] += d_pre.T @ x
    grads[prefix + ".b_hidden"] += d_pre.sum(axis=0)
    return d_pre @ params[prefix + ".W_hidden"]


def softmax_backward(theta: np.ndarray, d_theta: np.ndarray) -> np.ndarray:
    """Gradient through row-wise softmax: given d(loss)/d(theta), return
    d(loss)/d(logits)."""
    inner = np.sum(d_theta * theta, axis=-1, keepdims=True)
    return theta * (d_theta - inner)


@dataclass
class AdamState:
    """Adam with bias correction. ``adam_step`` owns the moment buffers."""

    learning_rate: float = 2e-3
    beta1: float = 0.99
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState):
    """One Adam update, in place. Every gradient must match its parameter's
    shape. Returns the same (params, state) pair."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name!r} has shape {g.shape}, "
                             f"parameter has {p.shape}")
        m = state.first_moment.setdefault(name, np.zeros_like(p))
        v = state.second_moment.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return params, state


@dataclass(frozen=True)
class GradcheckReport:
    """Relative error of analytic against finite-difference gradients,
    per parameter block and overall."""

    per_block: dict[str, float]
    max_relative_error: float
    step: float

    @property
    def ok(self) -> bool:
        return np.isfinite(self.max_relative_error)


def gradcheck(loss_fn, params: dict, step: float = 1e-5,
              max_coords_per_block: int = 32,
              rng: np.random.Generator | None = None) -> GradcheckReport:
    """Compare analytic gradients against central finite differences.

    ``loss_fn(params) -> (loss, grads)`` must be deterministic (fix any
    noise draws and disable dropout before calling). For each parameter
    block up to ``max_coords_per_block`` coordinates are sampled and the
    block's relative error is the l2 distance between analytic and
    finite-difference values over those coordinates, divided by the larger
    of their norms. Parameters are copied; the caller's arrays are left
    untouched.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    work = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    _, analytic = loss_fn(work)
    per_block = {}
    for name in sorted(work):
        flat = work[name].reshape(-1)
        n = flat.size
        count = min(n, max_coords_per_block)
        coords = rng.choice(n, size=count, replace=False) if count < n else np.arange(n)
        fd = np.empty(count)
        for j, i in enumerate(coords):
            orig = flat[i]
            flat[i] = orig + step
            up, _ = loss_fn(work)
            flat[i] = orig - step
            down, _ = loss_fn(work)
            flat[i] = orig
            fd[j] = (up - down) / (2.0 * step)
        ana = analytic[name].reshape(-1)[coords]
        denom = max(np.linalg.norm(ana), np.linalg.norm(fd), 1e-12)
        per_block[name] = float(np.linalg.norm(ana - fd) / denom)
    return GradcheckReport(per_block=per_block,
                           max_relative_error=max(per_block.values()),
                           step=step)


def named_rng(seed: int, name: str) -> np.random.Generator:
    """Deterministic per-purpose random stream derived from one seed."""
    import zlib
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))
