"""Exact output-process probabilities via the transfer recursion.

Summing the hidden spins of the output law one by one reduces the 2^n
configuration sum to a linear right-to-left scan of auxiliary fields

    w_n = K*y_n,    w_i = K*y_i + A(w_{i+1})   for i < n,

where A is the field carried over from a summed-out neighbor and B is the
log-weight that neighbor releases:

    A(w) = (1/2) log( cosh(w+J) / cosh(w-J) ) = atanh( tanh(J) tanh(w) )
    B(w) = (1/2) log( 4 cosh(w+J) cosh(w-J) )
    exp(s*A(w) + B(w)) = 2 cosh(w + s*J)       for s = +-1.

Cylinder probabilities then read

    Q(y_m^n) = (cJ / lam^L) * 2 cosh(w_m) * exp( sum_{i=m+1}^n B(w_i) ),

with L = n - m + 1. The constant is fixed by Q(single symbol) = 1/2, which the
brute-force oracle confirms. All probabilities are assembled in log space and
exponentiated at the boundary; sums of B use exact (fsum) accumulation.
"""

from __future__ import annotations

import math

import numpy as np

from .model import Couplings
from .sequences import FieldTrajectory, SpinSequence, as_spin_array

__all__ = [
    "log2cosh",
    "field_shift",
    "field_shift_deriv",
    "log_partition_term",
    "log_partition_term_deriv",
    "backward_fields",
    "forward_fields",
    "fixed_point_field",
    "extended_fields",
    "extended_field",
    "log_cylinder_prob",
    "cylinder_prob",
    "conditional_prob",
    "two_sided_conditional",
    "two_sided_limit_conditional",
]


def log2cosh(x):
    """log(2 cosh(x)), safe against overflow for large |x|."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax))


def field_shift(w, model: Couplings):
    """Field A(w) passed to the left neighbor when a spin feeling field w is summed out.

    Uses the identity tanh(A(w)) = tanh(J) tanh(w); |A(w)| <= |J| for all real w.
    Accepts scalars or arrays.
    """
    return np.arctanh(math.tanh(model.J) * np.tanh(w))


def field_shift_deriv(w, model: Couplings):
    """dA/dw = sinh(2J) / (cosh(2J) + cosh(2w)), evaluated overflow-safely."""
    s2j = math.sinh(2.0 * model.J)
    c2j = math.cosh(2.0 * model.J)
    u = 2.0 * np.abs(w)
    eu = np.exp(-u)
    # sinh(2J) / (cosh(2J) + cosh(u)) multiplied through by 2 e^{-u}
    return 2.0 * s2j * eu / (1.0 + eu * eu + 2.0 * c2j * eu)


def log_partition_term(w, model: Couplings):
    """Per-site log-partition contribution B(w) = (1/2) log(4 cosh(w+J) cosh(w-J))."""
    J = model.J
    return 0.5 * (log2cosh(w + J) + log2cosh(w - J))


def log_partition_term_deriv(w, model: Couplings):
    """dB/dw = (tanh(w+J) + tanh(w-J)) / 2."""
    J = model.J
    return 0.5 * (np.tanh(w + J) + np.tanh(w - J))


def _scan_fields(symbols: np.ndarray, model: Couplings, w_init: float) -> np.ndarray:
    """Right-to-left field scan starting from the field to the right of the last symbol."""
    K = model.K
    tj = math.tanh(model.J)
    tanh, atanh = math.tanh, math.atanh
    out = np.empty(len(symbols), dtype=np.float64)
    w = w_init
    for i in range(len(symbols) - 1, -1, -1):
        w = K * float(symbols[i]) + atanh(tj * tanh(w))
        out[i] = w
    return out


def backward_fields(y, model: Couplings) -> FieldTrajectory:
    """Fields w_i^{(n)} for i = m..n of the word y on window [m, n], scanned right to left.

    The base case is w_n = K*y_n, i.e. the field beyond the horizon is zero.
    """
    start = y.start if isinstance(y, SpinSequence) else 0
    arr = as_spin_array(y)
    values = _scan_fields(arr, model, 0.0)
    return FieldTrajectory(values=values, start=start, horizon=start + len(arr) - 1)


def forward_fields(y, model: Couplings) -> FieldTrajectory:
    """Mirror of backward_fields for a left context, scanned left to right.

    The recursion w_{j+1} = K*y_{j+1} + A(w_j) starts from w_m = K*y_m, so the
    returned values equal backward_fields of the reversed word, reversed back.
    """
    start = y.start if isinstance(y, SpinSequence) else 0
    arr = as_spin_array(y)
    values = _scan_fields(arr[::-1], model, 0.0)[::-1].copy()
    return FieldTrajectory(values=values, start=start, horizon=start)


def fixed_point_field(symbol: int, model: Couplings, tol: float = 1e-15) -> float:
    """Limit field of the constant sequence of ``symbol``: solves w = K*symbol + A(w).

    The map is a global contraction (|A'| <= |1-2p| < 1), so the fixed point is
    unique and attracting.
    """
    if symbol not in (-1, 1):
        raise ValueError(f"symbol must be -1 or +1, got {symbol}")
    K, tj = model.K, math.tanh(model.J)
    tanh, atanh = math.tanh, math.atanh
    w = K * symbol
    for _ in range(100_000):
        w_next = K * symbol + atanh(tj * tanh(w))
        if abs(w_next - w) <= tol:
            return w_next
        w = w_next
    return w


def extended_fields(y, model: Couplings) -> np.ndarray:
    """Limit fields at the positions of y when y is extended by repeating its last symbol.

    Every position at or beyond the last given symbol sees a constant tail, so
    its field is the attracting fixed point; the remaining positions follow by
    the usual right-to-left scan. The result is exact (machine accuracy) for
    the declared extension.
    """
    arr = as_spin_array(y)
    out = np.empty(len(arr), dtype=np.float64)
    out[-1] = fixed_point_field(int(arr[-1]), model)
    if len(arr) > 1:
        out[:-1] = _scan_fields(arr[:-1], model, out[-1])
    return out


def extended_field(y, model: Couplings) -> float:
    """Limit field at the first position of y under the repeat-last-symbol extension."""
    return float(extended_fields(y, model)[0])


def log_cylinder_prob(y, model: Couplings) -> float:
    """log Q(y_m^n), assembled in log space so long words do not underflow."""
    arr = as_spin_array(y)
    L = len(arr)
    w = _scan_fields(arr, model, 0.0)
    log_z = log2cosh(w[0]) + math.fsum(log_partition_term(w[1:], model))
    return math.log(model.cJ) - L * math.log(model.lam) + float(log_z)


def cylinder_prob(y, model: Couplings) -> float:
    """Q(y_m^n) via the transfer recursion; matches the brute-force oracle to 1e-12."""
    return math.exp(log_cylinder_prob(y, model))


def conditional_prob(y0: int, future, model: Couplings) -> float:
    """One-sided conditional Q(y0 | y_1^n) = cosh(w_0) e^{B(w_1)} / (lam cosh(w_1))."""
    if y0 not in (-1, 1):
        raise ValueError(f"y0 must be -1 or +1, got {y0}")
    arr = as_spin_array(future)
    w1 = float(_scan_fields(arr, model, 0.0)[0])
    w0 = model.K * y0 + float(field_shift(w1, model))
    log_q = (
        -math.log(model.lam)
        + float(log2cosh(w0))
        - float(log2cosh(w1))
        + float(log_partition_term(w1, model))
    )
    return math.exp(log_q)


def _two_sided_from_shifts(y0: int, shift_left: float, shift_right: float, model: Couplings) -> float:
    """cosh-ratio form of the two-sided conditional given the two A-field terms."""
    a = model.K * y0 + shift_left + shift_right
    b = -model.K * y0 + shift_left + shift_right
    # cosh(a) / (cosh(a) + cosh(b)), stable for the bounded arguments that occur here
    return 1.0 / (1.0 + math.cosh(b) / math.cosh(a))


def two_sided_conditional(y0: int, left, right, model: Couplings) -> float:
    """Two-sided conditional Q(y0 | left context, right context).

    Either context may be empty; an absent side contributes field zero, which
    reduces the formula to the one-sided conditional (or to the marginal 1/2
    when both sides are empty).
    """
    if y0 not in (-1, 1):
        raise ValueError(f"y0 must be -1 or +1, got {y0}")
    left_arr = as_spin_array(left, allow_empty=True)
    right_arr = as_spin_array(right, allow_empty=True)
    shift_left = 0.0
    if len(left_arr):
        w_left = float(_scan_fields(left_arr[::-1], model, 0.0)[0])
        shift_left = float(field_shift(w_left, model))
    shift_right = 0.0
    if len(right_arr):
        w_right = float(_scan_fields(right_arr, model, 0.0)[0])
        shift_right = float(field_shift(w_right, model))
    return _two_sided_from_shifts(y0, shift_left, shift_right, model)


def two_sided_limit_conditional(y0: int, left, right, tol: float, model: Couplings) -> float:
    """Two-sided conditional with both contexts extended to their limits.

    Each nonempty context is treated as the visible part of an infinite context
    obtained by repeating its last symbol; the fields of that extension are
    computed to machine accuracy through the attracting fixed point, so the
    returned value is stable under further extension to well within ``tol``.
    Empty sides keep the field-zero convention. The decay certificate bounds the
    influence of the unseen tail by C * rho^len for each side.
    """
    if y0 not in (-1, 1):
        raise ValueError(f"y0 must be -1 or +1, got {y0}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    left_arr = as_spin_array(left, allow_empty=True)
    right_arr = as_spin_array(right, allow_empty=True)
    shift_left = 0.0
    if len(left_arr):
        # the left recursion equals the right recursion run on the reversed context
        shift_left = float(field_shift(extended_field(left_arr[::-1], model), model))
    shift_right = 0.0
    if len(right_arr):
        shift_right = float(field_shift(extended_field(right_arr, model), model))
    return _two_sided_from_shifts(y0, shift_left, shift_right, model)
