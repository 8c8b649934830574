"""Closed-form secret-key-rate model.

The scalar functions take a :class:`ProtocolParams`; ``optimize`` evaluates
the same formulas vectorised over a (mu, v_th) grid.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammainc

from .channel import end_to_end_transmittance, overall_transmittance
from .model import ProtocolParams, RatePoint

DEFAULT_MU_GRID = np.geomspace(1e-4, 1.0, 200)
DEFAULT_V_TH_RANGE = np.arange(1, 21)


def poisson_pmf(n: int, mu: float) -> float:
    if n < 0:
        return 0.0
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    if n > 20:
        return math.exp(n * math.log(mu) - mu - math.lgamma(n + 1))
    return math.exp(-mu) * mu**n / math.factorial(n)


def yield_n(n: int, params: ProtocolParams) -> float:
    eta = overall_transmittance(params)
    return 1.0 - (1.0 - 2.0 * params.dark_count) * (1.0 - eta) ** n


def error_n(n: int, params: ProtocolParams) -> float:
    """Error rate of the n-photon component; e_d when the yield vanishes."""
    eta = overall_transmittance(params)
    y = yield_n(n, params)
    if y == 0.0:
        return params.misalignment
    lost = (1.0 - eta) ** n
    return (params.dark_count * lost + params.misalignment * (1.0 - lost)) / y


def _gain(mu, eta, pd):
    return 1.0 - (1.0 - 2.0 * pd) * np.exp(-mu * eta)


def _qber(mu, eta, pd, ed):
    return ed + (pd - ed) * np.exp(-mu * eta)


def _tail(mu, v_th):
    # P(n > v_th) = regularized lower incomplete gamma P(v_th + 1, mu)
    return gammainc(np.asarray(v_th, dtype=float) + 1.0, mu)


def _phase_error(e_src, q, mu, eta, L, v_th):
    mu_eta = mu * eta
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0.0, e_src / np.where(q > 0.0, q, 1.0), np.where(e_src > 0.0, 1.0, 0.0))
        mixing = (1.0 - (1.0 - 2.0 / (L - 1)) ** v_th) / 4.0
        ep = ratio + (1.0 - ratio) * mixing + mu_eta / (2.0 * (1.0 - mu_eta))
    ep = np.clip(ep, 0.0, 0.5)
    return np.where(ratio >= 1.0, 0.5, ep)


def _entropy(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xs = np.where(inside, x, 0.5)
    h = -xs * np.log2(xs) - (1.0 - xs) * np.log2(1.0 - xs)
    return np.where(inside, h, 0.0)


def _rate(q, e_mu, e_p, f, L):
    r = q / L * (1.0 - f * _entropy(e_mu) - _entropy(e_p))
    return np.maximum(r, 0.0)


def gain_q_mu(params: ProtocolParams) -> float:
    eta = overall_transmittance(params)
    return float(_gain(params.mu, eta, params.dark_count))


def qber_e_mu(params: ProtocolParams) -> float:
    eta = overall_transmittance(params)
    return float(_qber(params.mu, eta, params.dark_count, params.misalignment))


def e_src(params: ProtocolParams) -> float:
    """Probability that the source emits more than ``v_th`` photons."""
    return float(_tail(params.mu, params.v_th))


def _check_domain(mu_eta: float) -> None:
    if mu_eta >= 1.0:
        raise ValueError(f"phase-error bound requires mu*eta < 1, got {mu_eta}")


def phase_error_ep(params: ProtocolParams) -> float:
    eta = overall_transmittance(params)
    _check_domain(params.mu * eta)
    q = _gain(params.mu, eta, params.dark_count)
    return float(_phase_error(e_src(params), q, params.mu, eta, params.train_length, params.v_th))


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy is defined on [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def linear_bound(eta: float) -> float:
    """Repeaterless rate-loss bound -log2(1 - eta) for end-to-end transmittance ``eta``.

    Scales as eta/ln 2 for small eta, which is the linear bound that
    midpoint-interference protocols can beat.
    """
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"linear bound needs 0 <= eta < 1, got {eta}")
    return -math.log1p(-eta) / math.log(2.0)


def key_rate(params: ProtocolParams, qber: Optional[float] = None) -> RatePoint:
    """Evaluate the full rate pipeline at ``params``.

    ``qber`` overrides the channel-derived bit error rate, as used by the
    error-tolerance sweep.
    """
    eta = overall_transmittance(params)
    _check_domain(params.mu * eta)
    q = gain_q_mu(params)
    e_mu = qber_e_mu(params) if qber is None else float(qber)
    tail = e_src(params)
    ep = float(_phase_error(tail, q, params.mu, eta, params.train_length, params.v_th))
    f = params.ec_efficiency
    r = q / params.train_length * (1.0 - f * binary_entropy(e_mu) - binary_entropy(ep))
    direct = end_to_end_transmittance(params)
    return RatePoint(
        eta=eta,
        q_mu=q,
        e_mu=e_mu,
        e_src=tail,
        e_p=ep,
        rate=max(r, 0.0),
        linear_bound=math.inf if direct >= 1.0 else linear_bound(direct),
    )


def rate_grid(params: ProtocolParams, mu_grid, v_th_range, qber: Optional[float] = None) -> np.ndarray:
    """Key rate on the (mu, v_th) grid; -inf where mu*eta >= 1."""
    eta = overall_transmittance(params)
    mu = np.asarray(mu_grid, dtype=float)[:, None]
    v = np.asarray(v_th_range, dtype=float)[None, :]
    pd, L = params.dark_count, params.train_length
    q = _gain(mu, eta, pd)
    e_mu = _qber(mu, eta, pd, params.misalignment) if qber is None else np.full_like(q, qber)
    valid = mu * eta < 1.0
    safe_mu = np.where(valid, mu, 0.0)
    ep = _phase_error(_tail(safe_mu, v), q, safe_mu, eta, L, v)
    r = _rate(q, e_mu, ep, params.ec_efficiency, L)
    return np.where(valid, r, -np.inf)


def optimize(
    params: ProtocolParams,
    mu_grid: Optional[Sequence[float]] = None,
    v_th_range: Optional[Sequence[int]] = None,
    qber: Optional[float] = None,
) -> tuple[float, int, RatePoint]:
    """Exhaustive grid search for the rate-maximising (mu, v_th).

    Ties go to the smaller mu, then the smaller v_th; an all-zero grid
    therefore returns the smallest arguments with a zero rate.
    """
    mus = np.unique(np.asarray(DEFAULT_MU_GRID if mu_grid is None else mu_grid, dtype=float))
    vs = np.unique(np.asarray(DEFAULT_V_TH_RANGE if v_th_range is None else v_th_range, dtype=int))
    if mus.size == 0 or vs.size == 0:
        raise ValueError("optimization grids must be non-empty")
    grid = rate_grid(params, mus, vs, qber=qber)
    if not np.isfinite(grid).any():
        raise ValueError("no grid point satisfies mu*eta < 1")
    i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
    mu_opt, v_opt = float(mus[i]), int(vs[j])
    point = key_rate(params.with_(mu=mu_opt, v_th=v_opt), qber=qber)
    return mu_opt, v_opt, point
