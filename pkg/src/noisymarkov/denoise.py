"""Denoisers for the observed process and their zero-one loss.

Four reconstruction rules are provided:

* ``forward_backward`` + ``map_denoise``: exact per-position MAP with known
  (p, eps), via scaled alpha/beta recursions.
* ``dude``: the channel-inverting context-count denoiser; only eps is known.
* ``bfp_denoise``: the backward-forward product surrogate for the two-sided
  conditional, in an exact (field-based) and an empirical (context-count) mode.
* ``gibbs_denoise``: a documented surrogate for two-sided Gibbs modeling:
  moment-matched estimation of p followed by the exact forward-backward pass.

Distributions over the binary state/output space are ordered (-1, +1)
throughout. The emission matrix is Pi[x, y] = P(Y=y | X=x) with index 0 for -1
and 1 for +1; its inverse exists iff eps != 1/2 and equals
(1/(1-2 eps)) [[1-eps, -eps], [-eps, 1-eps]]. The channel inversion identity

    P[X_n = . | all observations] propto pi_{y_n} (.) Pi^{-1} q2

maps any (estimated or exact) two-sided output conditional q2 to a posterior
over the hidden symbol.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientContextError,
    LengthMismatchError,
    SingularChannelError,
)
from .model import ChannelParams, derive_couplings, validate_params
from .sequences import SPIN_DTYPE, SpinSequence, as_spin_array
from .transfer import backward_fields, field_shift, forward_fields

__all__ = [
    "PosteriorMarginals",
    "BerReport",
    "emission_matrix",
    "emission_inverse",
    "emission_column",
    "forward_backward",
    "posterior_from_two_sided",
    "default_context_length",
    "dude",
    "dude_detail",
    "DudeResult",
    "bfp_denoise",
    "estimate_p_moment",
    "gibbs_denoise",
    "map_denoise",
    "bit_error_rate",
]

#: Entries of Pi^{-1} q2 below this are flagged before being clamped to zero.
NEGATIVE_FLAG_THRESHOLD = -1e-12


@dataclass(frozen=True)
class PosteriorMarginals:
    """Per-position distribution of the hidden symbol: columns (q_minus, q_plus)."""

    q_minus: np.ndarray
    q_plus: np.ndarray

    def __post_init__(self) -> None:
        qm = np.asarray(self.q_minus, dtype=np.float64)
        qp = np.asarray(self.q_plus, dtype=np.float64)
        if qm.shape != qp.shape:
            raise LengthMismatchError("q_minus and q_plus must have equal shapes")
        object.__setattr__(self, "q_minus", qm)
        object.__setattr__(self, "q_plus", qp)

    def __len__(self) -> int:
        return len(self.q_plus)


@dataclass
class BerReport:
    """One benchmark measurement: algorithm, cell parameters and achieved loss."""

    algorithm: str
    p: float
    epsilon: float
    n: int
    seed: int
    ber: float
    runtime_s: float
    generator: str = "philox4x64"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": "noisymarkov-ber-v1",
            "algorithm": self.algorithm,
            "p": self.p,
            "epsilon": self.epsilon,
            "n": self.n,
            "seed": self.seed,
            "ber": self.ber,
            "runtime_s": self.runtime_s,
            "generator": self.generator,
            "extra": self.extra,
        }


def _require_invertible(epsilon: float) -> None:
    if epsilon == 0.5:
        raise SingularChannelError("epsilon = 1/2 makes the emission matrix singular")


def emission_matrix(epsilon: float) -> np.ndarray:
    """Row-stochastic emission matrix Pi[x, y] = P(Y=y | X=x), indices (-1, +1)."""
    return np.array([[1.0 - epsilon, epsilon], [epsilon, 1.0 - epsilon]])


def emission_inverse(epsilon: float) -> np.ndarray:
    """Inverse of the emission matrix; requires epsilon != 1/2."""
    _require_invertible(epsilon)
    return np.array([[1.0 - epsilon, -epsilon], [-epsilon, 1.0 - epsilon]]) / (1.0 - 2.0 * epsilon)


def emission_column(epsilon: float, y: int) -> np.ndarray:
    """Likelihood vector pi_y over hidden states for a single observed symbol."""
    if y not in (-1, 1):
        raise ValueError(f"y must be -1 or +1, got {y}")
    return emission_matrix(epsilon)[:, (y + 1) // 2]


def forward_backward(y, params: ChannelParams) -> PosteriorMarginals:
    """Exact posteriors P[X_i | Y = y] via scaled alpha/beta recursions."""
    arr = as_spin_array(y)
    n = len(arr)
    p, eps = params.p, params.epsilon
    q = 1.0 - p
    ep = np.where(arr == 1, 1.0 - eps, eps).tolist()  # P(y_i | X=+1)
    em = np.where(arr == -1, 1.0 - eps, eps).tolist()  # P(y_i | X=-1)

    alpha_p: list[float] = [0.0] * n
    alpha_m: list[float] = [0.0] * n
    cp, cm = 0.5 * ep[0], 0.5 * em[0]
    s = cp + cm
    cp, cm = cp / s, cm / s
    alpha_p[0], alpha_m[0] = cp, cm
    for i in range(1, n):
        npl = (cp * q + cm * p) * ep[i]
        nmi = (cp * p + cm * q) * em[i]
        s = npl + nmi
        cp, cm = npl / s, nmi / s
        alpha_p[i], alpha_m[i] = cp, cm

    beta_p: list[float] = [0.0] * n
    beta_m: list[float] = [0.0] * n
    bp = bm = 1.0
    beta_p[n - 1] = beta_m[n - 1] = 1.0
    for i in range(n - 2, -1, -1):
        npl = q * ep[i + 1] * bp + p * em[i + 1] * bm
        nmi = p * ep[i + 1] * bp + q * em[i + 1] * bm
        s = npl + nmi
        bp, bm = npl / s, nmi / s
        beta_p[i], beta_m[i] = bp, bm

    post_p = np.array(alpha_p) * np.array(beta_p)
    post_m = np.array(alpha_m) * np.array(beta_m)
    tot = post_p + post_m
    return PosteriorMarginals(q_minus=post_m / tot, q_plus=post_p / tot)


def _posterior_batch(q2: np.ndarray, y_obs: np.ndarray, epsilon: float) -> tuple[np.ndarray, int]:
    """Channel inversion for a batch of two-sided conditionals.

    q2 rows are distributions of Y_i over (-1, +1); y_obs holds the observed
    symbols. Returns posterior rows over the hidden symbol and the number of
    rows whose intermediate Pi^{-1} q2 had an entry below the flag threshold
    (clamped to zero and renormalized, as the estimates are only approximate).
    """
    pinv = emission_inverse(epsilon)
    u = q2 @ pinv  # Pi^{-1} is symmetric
    n_flagged = int(np.count_nonzero((u < NEGATIVE_FLAG_THRESHOLD).any(axis=1)))
    u = np.clip(u, 0.0, None)
    pi_rows = np.where(
        (y_obs == 1)[:, None],
        np.array([epsilon, 1.0 - epsilon]),
        np.array([1.0 - epsilon, epsilon]),
    )
    v = pi_rows * u
    tot = v.sum(axis=1, keepdims=True)
    return v / tot, n_flagged


def posterior_from_two_sided(q2, y_n: int, params: ChannelParams) -> np.ndarray:
    """Posterior of X_n from a two-sided conditional of Y_n, ordered (-1, +1).

    Negative intermediate entries beyond the flag threshold (a known artifact
    of channel inversion applied to empirical estimates) trigger a warning and
    are clamped to zero before renormalizing.
    """
    _require_invertible(params.epsilon)
    if y_n not in (-1, 1):
        raise ValueError(f"y_n must be -1 or +1, got {y_n}")
    vec = np.asarray(q2, dtype=np.float64)
    if vec.shape != (2,):
        raise ValueError(f"q2 must have shape (2,), got {vec.shape}")
    if np.any(vec < NEGATIVE_FLAG_THRESHOLD) or abs(float(vec.sum()) - 1.0) > 1e-6:
        raise ValueError(f"q2 must be a probability distribution, got {vec}")
    post, n_flagged = _posterior_batch(vec[None, :], np.array([y_n]), params.epsilon)
    if n_flagged:
        warnings.warn(
            "channel inversion produced a negative intermediate; clamped to zero",
            stacklevel=2,
        )
    return post[0]


def default_context_length(n: int) -> int:
    """Default DUDE context length: ceil(log2(n)/2), at least 1, capped at 12."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return min(12, max(1, math.ceil(0.5 * math.log2(n))))


def _counts_lookup(keys: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """Occurrence counts of ``keys`` within the multiset ``observed`` (0 if absent)."""
    uniq, cnt = np.unique(observed, return_counts=True)
    idx = np.searchsorted(uniq, keys)
    idx_clipped = np.minimum(idx, len(uniq) - 1)
    found = (idx < len(uniq)) & (uniq[idx_clipped] == keys)
    return np.where(found, cnt[idx_clipped], 0)


@dataclass(frozen=True)
class DudeResult:
    """Denoised sequence plus diagnostics of the counting/inversion pipeline."""

    xhat: SpinSequence
    k: int
    q2: np.ndarray  # interior-position estimates of P(Y_i | contexts), columns (-1, +1)
    n_clamped: int


def dude_detail(y, epsilon: float, k: int | None = None) -> DudeResult:
    """Two-pass context-count denoiser with diagnostics.

    Pass one counts the occurrences m(a, c, b) of every (left context, center,
    right context) word; pass two estimates the two-sided conditional of each
    interior position from those counts and inverts the channel. Interior
    contexts always contain the position itself, so every count total is >= 1
    and no smoothing is needed. The first and last k positions are passed
    through unchanged.
    """
    _require_invertible(epsilon)
    arr = as_spin_array(y)
    n = len(arr)
    if k is None:
        k = default_context_length(n)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n <= 2 * k + 1:
        raise InsufficientContextError(
            f"need n >= {2 * k + 2} symbols for context length k={k}, got {n}"
        )
    bits = (arr == -1).astype(np.uint64)
    m = n - 2 * k
    left = np.zeros(m, dtype=np.uint64)
    right = np.zeros(m, dtype=np.uint64)
    for j in range(1, k + 1):
        left |= bits[k - j : k - j + m] << np.uint64(j - 1)
        right |= bits[k + j : k + j + m] << np.uint64(j - 1)
    ctx = left | (right << np.uint64(k))
    center = bits[k : k + m]
    observed = (ctx << np.uint64(1)) | center
    m_plus = _counts_lookup(ctx << np.uint64(1), observed).astype(np.float64)
    m_minus = _counts_lookup((ctx << np.uint64(1)) | np.uint64(1), observed).astype(np.float64)
    tot = m_plus + m_minus
    q2 = np.stack([m_minus / tot, m_plus / tot], axis=1)
    post, n_clamped = _posterior_batch(q2, arr[k : k + m], epsilon)
    xhat = arr.copy()
    xhat[k : k + m] = np.where(post[:, 1] >= post[:, 0], 1, -1).astype(SPIN_DTYPE)
    return DudeResult(xhat=SpinSequence(xhat), k=k, q2=q2, n_clamped=n_clamped)


def dude(y, epsilon: float, k: int | None = None) -> SpinSequence:
    """Context-count denoiser; see dude_detail for the two-pass description."""
    return dude_detail(y, epsilon, k).xhat


def _one_sided_count_tables(bits: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Empirical order-k conditionals of a symbol given its left / right k words.

    Returns (q_left, q_right) of shape (m, 2) for the interior positions
    k..n-1-k, columns ordered (-1, +1).
    """
    n = len(bits)
    m = n - 2 * k

    def table(orient_left: bool) -> np.ndarray:
        count = n - k  # positions with a full one-sided context
        code = np.zeros(count, dtype=np.uint64)
        for j in range(1, k + 1):
            if orient_left:
                # contexts of positions k..n-1: bits[i-j]
                code |= bits[k - j : n - j] << np.uint64(j - 1)
            else:
                # contexts of positions 0..n-1-k: bits[i+j]
                code |= bits[j : n - k + j] << np.uint64(j - 1)
        centers = bits[k:] if orient_left else bits[: n - k]
        observed = (code << np.uint64(1)) | centers
        interior = code[: m] if orient_left else code[k : k + m]
        keys = interior << np.uint64(1)
        c_plus = _counts_lookup(keys, observed).astype(np.float64)
        c_minus = _counts_lookup(keys | np.uint64(1), observed).astype(np.float64)
        tot = c_plus + c_minus
        return np.stack([c_minus / tot, c_plus / tot], axis=1)

    return table(True), table(False)


def bfp_denoise(
    y, params: ChannelParams, mode: str = "exact", k: int | None = None
) -> tuple[SpinSequence, PosteriorMarginals]:
    """Backward-forward product denoiser.

    The two-sided conditional of Y_i is replaced by the normalized product of
    the two one-sided conditionals, which for this model reduces to

        Qtilde(s | rest) propto cosh(K s + A(w_left)) * cosh(K s + A(w_right)).

    ``exact`` mode evaluates the one-sided conditionals from the transfer
    fields of the full observed word (valid in both directions because the
    symmetric chain is reversible); ``empirical`` mode estimates them with
    order-k context counts and passes the first/last k positions through. The
    surrogate is then pushed through the channel inversion and a per-position
    argmax. It deliberately does not equal the exact two-sided conditional in
    general.
    """
    _require_invertible(params.epsilon)
    arr = as_spin_array(y)
    n = len(arr)
    if mode == "exact":
        model = derive_couplings(params)
        shift_r = np.zeros(n)
        shift_l = np.zeros(n)
        if n > 1:
            wb = backward_fields(arr, model).values
            wf = forward_fields(arr, model).values
            shift_r[: n - 1] = field_shift(wb[1:], model)
            shift_l[1:] = field_shift(wf[: n - 1], model)
        num_plus = np.cosh(model.K + shift_l) * np.cosh(model.K + shift_r)
        num_minus = np.cosh(-model.K + shift_l) * np.cosh(-model.K + shift_r)
        tot = num_plus + num_minus
        q2 = np.stack([num_minus / tot, num_plus / tot], axis=1)
        post, _ = _posterior_batch(q2, arr, params.epsilon)
        marg = PosteriorMarginals(q_minus=post[:, 0], q_plus=post[:, 1])
        xhat = np.where(post[:, 1] >= post[:, 0], 1, -1).astype(SPIN_DTYPE)
        return SpinSequence(xhat), marg
    if mode != "empirical":
        raise ValueError(f"mode must be 'exact' or 'empirical', got {mode!r}")
    if k is None:
        k = default_context_length(n)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n <= 2 * k + 1:
        raise InsufficientContextError(
            f"need n >= {2 * k + 2} symbols for context length k={k}, got {n}"
        )
    bits = (arr == -1).astype(np.uint64)
    q_left, q_right = _one_sided_count_tables(bits, k)
    prod = q_left * q_right
    q2 = prod / prod.sum(axis=1, keepdims=True)
    post_interior, _ = _posterior_batch(q2, arr[k : n - k], params.epsilon)
    # boundary positions: passthrough estimate, channel-only posterior
    post = np.empty((n, 2))
    boundary, _ = _posterior_batch(
        np.full((2 * k, 2), 0.5), np.concatenate([arr[:k], arr[n - k :]]), params.epsilon
    )
    post[:k] = boundary[:k]
    post[n - k :] = boundary[k:]
    post[k : n - k] = post_interior
    xhat = arr.copy()
    xhat[k : n - k] = np.where(post_interior[:, 1] >= post_interior[:, 0], 1, -1).astype(SPIN_DTYPE)
    marg = PosteriorMarginals(q_minus=post[:, 0], q_plus=post[:, 1])
    return SpinSequence(xhat), marg


def estimate_p_moment(y, epsilon: float) -> float:
    """Moment-matched estimate of the source flip rate from the observed word.

    E[Y_i Y_{i+1}] = (1-2p)(1-2 eps)^2, so p_hat = (1 - r_hat/(1-2 eps)^2)/2
    with r_hat the empirical neighbor product mean, clamped to [1e-6, 1/2].
    """
    _require_invertible(epsilon)
    arr = as_spin_array(y)
    if len(arr) < 2:
        raise InsufficientContextError("need at least 2 symbols to estimate p")
    r_hat = float(np.mean(arr[:-1].astype(np.float64) * arr[1:].astype(np.float64)))
    p_hat = 0.5 * (1.0 - r_hat / (1.0 - 2.0 * epsilon) ** 2)
    return float(min(0.5, max(1e-6, p_hat)))


def gibbs_denoise(y, epsilon: float) -> SpinSequence:
    """Gibbs-modeling surrogate: moment-matched p, then the exact MAP pass."""
    p_hat = estimate_p_moment(y, epsilon)
    return map_denoise(forward_backward(y, validate_params(p_hat, epsilon)))


def map_denoise(post: PosteriorMarginals) -> SpinSequence:
    """Per-position argmax of the posterior; exact ties break toward +1."""
    return SpinSequence(np.where(post.q_plus >= post.q_minus, 1, -1).astype(SPIN_DTYPE))


def bit_error_rate(xhat, x) -> float:
    """Fraction of positions where the reconstruction differs from the truth."""
    a = as_spin_array(xhat)
    b = as_spin_array(x)
    if len(a) != len(b):
        raise LengthMismatchError(f"length mismatch: {len(a)} vs {len(b)}")
    return float(np.mean(a != b))
