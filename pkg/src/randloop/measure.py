"""Loop weight functionals and the two samplers targeting the weighted measure.

Weights are multiplicative over loops.  Three families:

  * uniform(theta):      w(loop) = theta
  * field(S, h):         w(loop) = sum_{a=-S..S} exp(a * sum_x h_x l_x(loop))
  * field_directed(S,h): same with l+_x - l-_x in the exponent (integer S only)

The default sampler draws from the unweighted Poisson measure and reweights
(importance sampling); the Metropolis chain targets the weighted measure
directly and doubles as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .events import sample_raw
from .lattice import Graph
from .loops import LoopDecomposition, _trace_kernel, njit, trace_arrays

UNIFORM = "uniform"
FIELD = "field"
FIELD_DIRECTED = "field_directed"


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class WeightSpec:
    """Loop weight functional.  Spin S is stored as the integer 2S."""

    family: str
    theta: float = 0.0
    two_s: int = 0
    h: tuple[float, ...] | None = None  # per-site field; None means h == 0

    def __post_init__(self):
        if self.family == UNIFORM:
            if self.theta <= 0:
                raise MeasureError("uniform weights need theta > 0")
        elif self.family == FIELD:
            if self.two_s < 0:
                raise MeasureError("field weights need 2S >= 0")
        elif self.family == FIELD_DIRECTED:
            if self.two_s < 0 or self.two_s % 2 != 0:
                raise MeasureError("directed field weights need integer S")
        else:
            raise MeasureError(f"unknown weight family {self.family!r}")

    @classmethod
    def uniform(cls, theta: float) -> "WeightSpec":
        return cls(UNIFORM, theta=theta)

    @classmethod
    def field(cls, two_s: int, h=None) -> "WeightSpec":
        return cls(FIELD, two_s=two_s, h=None if h is None else tuple(h))

    @classmethod
    def field_directed(cls, two_s: int, h=None) -> "WeightSpec":
        return cls(FIELD_DIRECTED, two_s=two_s,
                   h=None if h is None else tuple(h))

    def spin_values(self) -> np.ndarray:
        """The 2S+1 values a = -S, -S+1, ..., S."""
        s = self.two_s / 2.0
        return np.arange(-s, s + 1.0)

    def h_array(self, n_sites: int) -> np.ndarray | None:
        if self.h is None:
            return None
        if len(self.h) != n_sites:
            raise MeasureError(f"field has {len(self.h)} entries for "
                               f"{n_sites} sites")
        h = np.asarray(self.h, dtype=np.float64)
        return None if not h.any() else h


def log_loop_weight(spec: WeightSpec, dec: LoopDecomposition) -> float:
    """log of the product of loop weights (stable for large systems)."""
    n = dec.n_loops
    if spec.family == UNIFORM:
        return n * math.log(spec.theta)
    h = spec.h_array(dec.n_sites)
    if h is None:
        return n * math.log(spec.two_s + 1)
    if spec.family == FIELD:
        s = dec.loop_field_sums(h)
    else:
        s = dec.loop_directed_sums(h)
    a = spec.spin_values()
    expo = np.outer(s, a)                       # (loops, 2S+1)
    peak = expo.max(axis=1, keepdims=True)
    return float(np.sum(peak[:, 0] + np.log(np.exp(expo - peak).sum(axis=1))))


def loop_weight(spec: WeightSpec, dec: LoopDecomposition) -> float:
    """Product over loops of w(loop); strictly positive."""
    if spec.family == UNIFORM:
        return spec.theta ** dec.n_loops
    h = spec.h_array(dec.n_sites)
    if h is None:
        return float(spec.two_s + 1) ** dec.n_loops
    return math.exp(log_loop_weight(spec, dec))


@njit(cache=True)
def _bulk_weight_kernel(n_sites, beta, ev_time, ev_cross, ev_x, ev_y,
                        offsets, mode, theta, h, spins, out):
    """Per-sample loop weights for many realizations packed into flat arrays.

    mode 0: theta^loops; mode 1: field sums; mode 2: directed field sums.
    A negative entry flags a sample the tracer refused (retraced by the
    caller through the scalar path).
    """
    for s in range(offsets.shape[0] - 1):
        a = offsets[s]
        b = offsets[s + 1]
        res = _trace_kernel(n_sites, beta, ev_time[a:b], ev_cross[a:b],
                            ev_x[a:b], ev_y[a:b], np.int8(1))
        n_loops = res[0]
        if not res[13]:
            out[s] = -1.0
            continue
        if mode == 0:
            out[s] = theta ** n_loops
        else:
            seg_site = res[2]
            seg_len = res[3]
            seg_loop = res[5]
            seg_dir = res[6]
            sums = np.zeros(n_loops, np.float64)
            for i in range(seg_len.shape[0]):
                v = h[seg_site[i]] * seg_len[i]
                if mode == 2:
                    v *= seg_dir[i]
                sums[seg_loop[i]] += v
            w = 1.0
            for l in range(n_loops):
                t = 0.0
                for k in range(spins.shape[0]):
                    t += np.exp(spins[k] * sums[l])
                w *= t
            out[s] = w


def _direct_weight_batch(graph: Graph, beta: float, u: float,
                         spec: WeightSpec, per: int, rng) -> np.ndarray:
    """Weights of `per` independent realizations, drawn and traced in bulk."""
    vol = graph.n_edges * beta
    counts = rng.poisson(vol, per)
    total = int(counts.sum())
    times = rng.uniform(0.0, beta, total)
    edges = rng.integers(0, graph.n_edges, total, dtype=np.int64)
    cross = (rng.random(total) < u).astype(np.uint8)
    sample_id = np.repeat(np.arange(per), counts)
    order = np.lexsort((times, sample_id))
    times = times[order]
    edges = edges[order]
    cross = cross[order]
    offsets = np.zeros(per + 1, np.int64)
    np.cumsum(counts, out=offsets[1:])
    edge_x, edge_y = graph.edge_arrays()

    h = spec.h_array(graph.n_vertices)
    if spec.family == UNIFORM:
        mode, theta = 0, spec.theta
    elif h is None:
        mode, theta = 0, float(spec.two_s + 1)
    else:
        mode, theta = (1 if spec.family == FIELD else 2), 0.0
    spins = spec.spin_values() if mode else np.zeros(0)
    hh = h if h is not None else np.zeros(0)

    out = np.empty(per, np.float64)
    _bulk_weight_kernel(graph.n_vertices, float(beta), times, cross,
                        edge_x[edges], edge_y[edges], offsets, mode, theta,
                        hh, spins, out)
    for s in np.nonzero(out < 0)[0]:  # pathological time collisions
        e, t, c = sample_raw(graph, beta, u, rng)
        out[s] = loop_weight(spec, trace_arrays(graph, beta, e, t, c))
    return out


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    stderr: float
    n_samples: int
    n_batches: int

    def __post_init__(self):
        if self.stderr < 0 or self.n_batches < 2:
            raise MeasureError("bad estimate record")


def _batch_stderr(batch_means: np.ndarray) -> float:
    b = len(batch_means)
    return float(np.std(batch_means, ddof=1) / math.sqrt(b))


def direct_estimate(graph: Graph, beta: float, u: float, spec: WeightSpec,
                    observables: dict, n_samples: int, seed,
                    n_batches: int = 50):
    """Importance sampling from the Poisson measure.

    E[f] is estimated by sum(f*W)/sum(W) and the partition function by
    mean(W); error bars come from batch means over n_batches equal batches.
    Batches are sampled from seeds spawned deterministically from `seed`, so
    results do not depend on execution order.

    Returns (dict name -> EstimateWithError, EstimateWithError for Y).
    """
    if n_samples % n_batches != 0:
        raise MeasureError("n_samples must be divisible by n_batches")
    if n_samples < 100 * n_batches:
        raise MeasureError("need n_samples >= 100 * n_batches")
    per = n_samples // n_batches
    names = list(observables)
    fw_batch = np.zeros((n_batches, len(names)))
    w_batch = np.zeros(n_batches)
    seeds = np.random.SeedSequence(seed).spawn(n_batches)
    if not names:
        # weight-only estimate: draw and trace whole batches in bulk
        for b in range(n_batches):
            rng = np.random.default_rng(seeds[b])
            w_batch[b] = _direct_weight_batch(graph, beta, u, spec, per,
                                              rng).mean()
        if w_batch.sum() == 0.0:
            raise MeasureError("total weight vanished; weights must be "
                               "positive")
        return {}, EstimateWithError(float(w_batch.mean()),
                                     _batch_stderr(w_batch),
                                     n_samples, n_batches)
    for b in range(n_batches):
        rng = np.random.default_rng(seeds[b])
        fw = np.zeros(len(names))
        wsum = 0.0
        for _ in range(per):
            edge, time, cross = sample_raw(graph, beta, u, rng)
            dec = trace_arrays(graph, beta, edge, time, cross)
            w = loop_weight(spec, dec)
            wsum += w
            for j, name in enumerate(names):
                fw[j] += observables[name](dec) * w
        fw_batch[b] = fw / per
        w_batch[b] = wsum / per
    if w_batch.sum() == 0.0:
        raise MeasureError("total weight vanished; weights must be positive")
    y_est = EstimateWithError(float(w_batch.mean()), _batch_stderr(w_batch),
                              n_samples, n_batches)
    results = {}
    for j, name in enumerate(names):
        ratios = fw_batch[:, j] / w_batch
        mean = float(fw_batch[:, j].sum() / w_batch.sum())
        results[name] = EstimateWithError(mean, _batch_stderr(ratios),
                                          n_samples, n_batches)
    return results, y_est


def metropolis_estimate(graph: Graph, beta: float, u: float, spec: WeightSpec,
                        observables: dict, n_sweeps: int, burn_in: int, seed,
                        n_batches: int = 50):
    """Metropolis chain on event lists with insert/delete/relabel moves.

    Insert: edge uniform, time uniform, kind cross w.p. u, accepted with
    min(1, (W'/W) * |E| beta / (n+1)).  Delete: event uniform, accepted with
    min(1, (W'/W) * n / (|E| beta)).  Relabel flips one event's kind
    (disabled at u in {0,1}).  The weight is recomputed by a full loop
    retrace after each proposal.  One sweep is ceil(|E| beta) proposals;
    observables are measured once per sweep after burn_in.

    Returns (dict name -> EstimateWithError, EstimateWithError for Y), where
    Y is recovered from the identity E_target[1/W] = 1/Y.
    """
    if burn_in < 0:
        raise MeasureError("burn_in must be >= 0")
    if n_sweeps % n_batches != 0:
        raise MeasureError("n_sweeps must be divisible by n_batches")
    rng = np.random.default_rng(seed)
    vol = graph.n_edges * beta
    if vol == 0:
        raise MeasureError("graph without edges has nothing to sample")
    per_sweep = max(1, math.ceil(vol))
    relabel_ok = 0.0 < u < 1.0
    n_moves = 3 if relabel_ok else 2

    ev_edge = np.zeros(0, np.int64)
    ev_time = np.zeros(0, np.float64)
    ev_cross = np.zeros(0, np.uint8)
    dec = trace_arrays(graph, beta, ev_edge, ev_time, ev_cross)
    logw = log_loop_weight(spec, dec)

    names = list(observables)
    meas = np.zeros((n_sweeps, len(names)))
    invw = np.zeros(n_sweeps)

    for sweep in range(burn_in + n_sweeps):
        for _ in range(per_sweep):
            n = len(ev_time)
            move = rng.integers(0, n_moves)
            if move == 0:  # insert
                t = rng.uniform(0.0, beta)
                while n and (ev_time == t).any():
                    t = rng.uniform(0.0, beta)
                e = rng.integers(0, graph.n_edges)
                c = np.uint8(rng.random() < u)
                pos = int(np.searchsorted(ev_time, t))
                cand = (np.insert(ev_edge, pos, e),
                        np.insert(ev_time, pos, t),
                        np.insert(ev_cross, pos, c))
                factor = vol / (n + 1)
            elif move == 1:  # delete
                if n == 0:
                    continue
                i = rng.integers(0, n)
                cand = (np.delete(ev_edge, i), np.delete(ev_time, i),
                        np.delete(ev_cross, i))
                factor = n / vol
            else:  # relabel
                if n == 0:
                    continue
                i = rng.integers(0, n)
                flipped = ev_cross.copy()
                flipped[i] ^= 1
                cand = (ev_edge, ev_time, flipped)
                factor = (1.0 - u) / u if ev_cross[i] else u / (1.0 - u)
            cand_dec = trace_arrays(graph, beta, *cand)
            cand_logw = log_loop_weight(spec, cand_dec)
            ratio = math.exp(min(0.0, cand_logw - logw + math.log(factor)))
            if rng.random() < ratio:
                ev_edge, ev_time, ev_cross = cand
                dec, logw = cand_dec, cand_logw
        if sweep >= burn_in:
            i = sweep - burn_in
            for j, name in enumerate(names):
                meas[i, j] = observables[name](dec)
            invw[i] = math.exp(-logw)

    per = n_sweeps // n_batches
    results = {}
    for j, name in enumerate(names):
        bm = meas[:, j].reshape(n_batches, per).mean(axis=1)
        results[name] = EstimateWithError(float(meas[:, j].mean()),
                                          _batch_stderr(bm),
                                          n_sweeps, n_batches)
    inv_mean = invw.mean()
    inv_bm = invw.reshape(n_batches, per).mean(axis=1)
    inv_err = _batch_stderr(inv_bm)
    # delta method for Y = 1 / E[1/W]
    y_est = EstimateWithError(float(1.0 / inv_mean),
                              float(inv_err / inv_mean ** 2),
                              n_sweeps, n_batches)
    return results, y_est
