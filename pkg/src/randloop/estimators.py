"""Loop-event probabilities and their translation into spin correlations.

The three pair events for points (x,0), (y,0): same loop with identical
vertical directions (E+), same loop with opposite directions (E-), or
different loops.  Two-point quantum correlations are linear combinations of
their probabilities, so one sampling pass serves every operator pair.
Correlations are only defined here at zero external field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Graph
from .loops import LoopDecomposition
from .measure import (EstimateWithError, MeasureError, WeightSpec,
                      direct_estimate, metropolis_estimate)


@dataclass(frozen=True)
class SamplerConfig:
    kind: str = "direct"            # "direct" | "metropolis"
    n_samples: int = 100_000        # direct
    n_sweeps: int = 20_000          # metropolis
    burn_in: int = 1_000
    n_batches: int = 50
    seed: int = 0


def run_sampler(graph: Graph, beta: float, u: float, spec: WeightSpec,
                observables: dict, cfg: SamplerConfig):
    if cfg.kind == "direct":
        return direct_estimate(graph, beta, u, spec, observables,
                               cfg.n_samples, cfg.seed, cfg.n_batches)
    if cfg.kind == "metropolis":
        return metropolis_estimate(graph, beta, u, spec, observables,
                                   cfg.n_sweeps, cfg.burn_in, cfg.seed,
                                   cfg.n_batches)
    raise MeasureError(f"unknown sampler kind {cfg.kind!r}")


@dataclass(frozen=True)
class PairEventProbs:
    p_plus: EstimateWithError
    p_minus: EstimateWithError
    p_same: EstimateWithError
    p_diff: EstimateWithError
    # signed combination P(E+) - P(E-), estimated from the same samples so
    # it carries its own batch-means error bar
    p_signed: EstimateWithError


def _require_zero_field(spec: WeightSpec):
    if spec.h is not None and any(v != 0.0 for v in spec.h):
        raise MeasureError("pair-event probabilities require h == 0")


def _pair_indicators(x: int, y: int, tag: str) -> dict:
    def plus(dec: LoopDecomposition) -> float:
        lx, dx = dec.loop_at_time0(x)
        ly, dy = dec.loop_at_time0(y)
        return 1.0 if lx == ly and dx == dy else 0.0

    def minus(dec: LoopDecomposition) -> float:
        lx, dx = dec.loop_at_time0(x)
        ly, dy = dec.loop_at_time0(y)
        return 1.0 if lx == ly and dx != dy else 0.0

    def same(dec: LoopDecomposition) -> float:
        return 1.0 if dec.loop_at_time0(x)[0] == dec.loop_at_time0(y)[0] else 0.0

    def signed(dec: LoopDecomposition) -> float:
        lx, dx = dec.loop_at_time0(x)
        ly, dy = dec.loop_at_time0(y)
        if lx != ly:
            return 0.0
        return 1.0 if dx == dy else -1.0

    return {f"plus{tag}": plus, f"minus{tag}": minus, f"same{tag}": same,
            f"signed{tag}": signed}


def _pack_probs(results: dict, tag: str) -> PairEventProbs:
    p_plus = results[f"plus{tag}"]
    p_minus = results[f"minus{tag}"]
    p_same = results[f"same{tag}"]
    p_diff = EstimateWithError(1.0 - p_same.mean, p_same.stderr,
                               p_same.n_samples, p_same.n_batches)
    return PairEventProbs(p_plus, p_minus, p_same, p_diff,
                          results[f"signed{tag}"])


def pair_event_probs(graph: Graph, beta: float, u: float, spec: WeightSpec,
                     x: int, y: int, cfg: SamplerConfig) -> PairEventProbs:
    """Estimate P(E+), P(E-), P(E), P(Ec) for the pair (x, y)."""
    if x == y:
        raise ValueError("pair events need two distinct sites")
    _require_zero_field(spec)
    results, _ = run_sampler(graph, beta, u, spec,
                             _pair_indicators(x, y, ""), cfg)
    return _pack_probs(results, "")


def pair_event_probs_multi(graph: Graph, beta: float, u: float,
                           spec: WeightSpec, pairs, cfg: SamplerConfig):
    """One sampling pass serving several (x, y) pairs.

    Returns ((x, y) -> PairEventProbs, Y estimate or None).
    """
    _require_zero_field(spec)
    observables = {}
    for x, y in pairs:
        if x == y:
            raise ValueError("pair events need two distinct sites")
        observables.update(_pair_indicators(x, y, f"_{x}_{y}"))
    results, y_est = run_sampler(graph, beta, u, spec, observables, cfg)
    return {(x, y): _pack_probs(results, f"_{x}_{y}") for x, y in pairs}, y_est


def one_point_value(A: np.ndarray, two_s: int) -> float:
    """Zero-field one-point function tr A / (2S+1)."""
    return float(np.trace(A).real) / (two_s + 1)


def correlation_plain(A: np.ndarray, B: np.ndarray, probs: PairEventProbs,
                      two_s: int) -> float:
    """Two-point function <A_x B_y> for the cross/double-bar (Q) family.

    tr(AB)/(2S+1) * P(E+) + tr(A B^t)/(2S+1) * P(E-)
    + tr(A) tr(B)/(2S+1)^2 * P(Ec), with the transpose taken in the basis
    diagonalizing S^3.
    """
    d = two_s + 1
    if A.shape != (d, d) or B.shape != (d, d):
        raise ValueError(f"operators must be {d}x{d}")
    val = (np.trace(A @ B) / d * probs.p_plus.mean
           + np.trace(A @ B.T) / d * probs.p_minus.mean
           + np.trace(A) * np.trace(B) / d ** 2 * probs.p_diff.mean)
    return float(val.real)


def correlation_tilde(A: np.ndarray, B: np.ndarray, probs: PairEventProbs,
                      two_s: int) -> float:
    """Two-point function for the tilde (P) family, integer spin only.

    Same structure as the plain formula but the E- coefficient is
    (1/(2S+1)) sum_{a,b} (-1)^{a+b} <a|A|b><-a|B|-b>.  The tilde loop
    measure itself uses the same unsigned weights (2S+1)^{|L|} at h == 0.
    """
    if two_s % 2 != 0:
        raise ValueError("tilde correlations are defined for integer S only")
    d = two_s + 1
    if A.shape != (d, d) or B.shape != (d, d):
        raise ValueError(f"operators must be {d}x{d}")
    # basis index i corresponds to a = -S + i; |-a> is index d-1-i
    a = np.arange(d) - two_s / 2.0
    sign = (-1.0) ** (a[:, None] + a[None, :])
    Brev = B[::-1, ::-1]
    minus_coeff = np.sum(sign * A * Brev) / d
    val = (np.trace(A @ B) / d * probs.p_plus.mean
           + minus_coeff * probs.p_minus.mean
           + np.trace(A) * np.trace(B) / d ** 2 * probs.p_diff.mean)
    return float(val.real)


def _combo_error(c_plus, c_minus, c_comp, probs: PairEventProbs) -> float:
    """Conservative stderr for c+ P(E+) + c- P(E-) + cc P(Ec).

    Rewritten over the directly estimated p_same and p_signed so their
    batch-means errors can be combined.
    """
    half_sum = abs((c_plus + c_minus) / 2.0 - c_comp)
    half_diff = abs(c_plus - c_minus) / 2.0
    return half_sum * probs.p_same.stderr + half_diff * probs.p_signed.stderr


def correlation_plain_with_error(A, B, probs: PairEventProbs,
                                 two_s: int) -> tuple[float, float]:
    d = two_s + 1
    value = correlation_plain(A, B, probs, two_s)
    err = _combo_error(float(np.trace(A @ B).real) / d,
                       float(np.trace(A @ B.T).real) / d,
                       float((np.trace(A) * np.trace(B)).real) / d ** 2, probs)
    return value, err


def correlation_tilde_with_error(A, B, probs: PairEventProbs,
                                 two_s: int) -> tuple[float, float]:
    d = two_s + 1
    value = correlation_tilde(A, B, probs, two_s)
    a = np.arange(d) - two_s / 2.0
    sign = (-1.0) ** (a[:, None] + a[None, :])
    minus_coeff = float(np.sum(sign * A * B[::-1, ::-1]).real) / d
    err = _combo_error(float(np.trace(A @ B).real) / d, minus_coeff,
                       float((np.trace(A) * np.trace(B)).real) / d ** 2, probs)
    return value, err


def spin_spin_tilde(probs: PairEventProbs, two_s: int) -> float:
    """<S^i_x S^i_y> for the tilde family: S(S+1)/3 * [P(E+) - P(E-)]."""
    s = two_s / 2.0
    return s * (s + 1) / 3.0 * (probs.p_plus.mean - probs.p_minus.mean)


def nematic_tilde(probs: PairEventProbs, two_s: int) -> float:
    """Truncated quadrupolar correlation <(S^i)^2 (S^i)^2> - <..><..> for
    the tilde family: S(S+1)(2S-1)(2S+3)/45 * P(E)."""
    s = two_s / 2.0
    return s * (s + 1) * (2 * s - 1) * (2 * s + 3) / 45.0 * probs.p_same.mean


def macroscopic_fraction(graph: Graph, beta: float, u: float, theta: float,
                         cfg: SamplerConfig) -> EstimateWithError:
    """Estimate E[l_0 / (beta |Lambda|)] under uniform loop weights.

    l_0 is the total vertical length of the loop through the point (0, 0).
    """
    n_sites = graph.n_vertices

    def frac(dec: LoopDecomposition) -> float:
        loop, _ = dec.loop_at_time0(0)
        l0 = float(dec.loop_total_lengths()[loop])
        return l0 / (beta * n_sites)

    spec = WeightSpec.uniform(theta)
    results, _ = run_sampler(graph, beta, u, spec, {"frac": frac}, cfg)
    return results["frac"]
