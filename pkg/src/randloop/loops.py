"""Deterministic loop tracing for a realization of the marked point process.

The traversal rule: a trajectory moves vertically along a site line; at a
cross it jumps to the other endpoint of the edge and keeps its time
direction, at a double bar it jumps and reverses direction; time beta is
identified with time 0 on the same site.  Loops are the orbits.

Each loop is traced starting from its lowest unvisited (site, time) point
moving upward (sites scanned in index order).  The convention is an
implementation choice; everything exported from here is invariant under
reversing the tracing orientation of any loop, which the test suite checks
by re-tracing with the opposite starting direction.
"""

from __future__ import annotations

import json
from enum import Enum

import numpy as np

from .events import EventList
from .lattice import Graph

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*a, **k):
        def deco(f):
            return f
        return deco(*a) if a and callable(a[0]) else deco


class PairEvent(Enum):
    PLUS = "E+"       # same loop, identical vertical direction at (x,0),(y,0)
    MINUS = "E-"      # same loop, opposite directions
    COMPLEMENT = "Ec"  # different loops


@njit(cache=True)
def _trace_kernel(n_sites, beta, ev_time, ev_cross, ev_x, ev_y, start_dir):
    m = ev_time.shape[0]

    # per-site incident-event lists (CSR, automatically time-sorted)
    kcnt = np.zeros(n_sites, np.int64)
    for i in range(m):
        kcnt[ev_x[i]] += 1
        kcnt[ev_y[i]] += 1
    site_ptr = np.zeros(n_sites + 1, np.int64)
    for x in range(n_sites):
        site_ptr[x + 1] = site_ptr[x] + kcnt[x]
    site_ev = np.zeros(site_ptr[n_sites], np.int64)
    ev_px = np.zeros(m, np.int64)   # local position on the x endpoint line
    ev_py = np.zeros(m, np.int64)   # local position on the y endpoint line
    fill = site_ptr[:n_sites].copy()
    for i in range(m):
        x = ev_x[i]
        ev_px[i] = fill[x] - site_ptr[x]
        site_ev[fill[x]] = i
        fill[x] += 1
        y = ev_y[i]
        ev_py[i] = fill[y] - site_ptr[y]
        site_ev[fill[y]] = i
        fill[y] += 1

    # segments: site line pieces between consecutive incident events
    # (cyclically); a site with no events is one full circle
    seg_ptr = np.zeros(n_sites + 1, np.int64)
    for x in range(n_sites):
        k = kcnt[x]
        seg_ptr[x + 1] = seg_ptr[x] + (k if k > 0 else 1)
    n_segs = seg_ptr[n_sites]
    seg_site = np.zeros(n_segs, np.int64)
    seg_len = np.zeros(n_segs, np.float64)
    seg_t0 = np.zeros(n_segs, np.float64)
    site_seg0 = np.zeros(n_sites, np.int64)  # segment containing time 0
    for x in range(n_sites):
        k = kcnt[x]
        base = seg_ptr[x]
        if k == 0:
            seg_site[base] = x
            seg_len[base] = beta
            seg_t0[base] = 0.0
            site_seg0[x] = base
        else:
            for j in range(k):
                e1 = site_ev[site_ptr[x] + j]
                e2 = site_ev[site_ptr[x] + (j + 1) % k]
                dl = ev_time[e2] - ev_time[e1]
                if dl <= 0.0:
                    dl += beta
                seg_site[base + j] = x
                seg_len[base + j] = dl
                seg_t0[base + j] = ev_time[e1]
            # the wrap segment [t_last, t_first) contains time 0 unless an
            # event sits exactly at 0
            first_t = ev_time[site_ev[site_ptr[x]]]
            site_seg0[x] = base if first_t == 0.0 else base + k - 1

    seg_loop = np.full(n_segs, -1, np.int64)
    seg_dir = np.zeros(n_segs, np.int8)
    n_loops = 0
    ok = True
    for x in range(n_sites):
        k = kcnt[x]
        nloc = k if k > 0 else 1
        for jj in range(nloc):
            # wrap segment first: its interior contains the site's lowest point
            j = (k - 1 + jj) % k if k > 0 else 0
            s = seg_ptr[x] + j
            if seg_loop[s] >= 0:
                continue
            lid = n_loops
            n_loops += 1
            cur = s
            curx = x
            curj = j
            curk = k
            d = start_dir
            while True:
                seg_loop[cur] = lid
                seg_dir[cur] = d
                if curk == 0:
                    break  # isolated full-circle line closes on itself
                b = (curj + 1) % curk if d == 1 else curj
                e = site_ev[site_ptr[curx] + b]
                if ev_x[e] == curx:
                    y = ev_y[e]
                    p = ev_py[e]
                else:
                    y = ev_x[e]
                    p = ev_px[e]
                ky = kcnt[y]
                if ev_cross[e] == 1:
                    nj = p if d == 1 else (p - 1) % ky
                    nd = d
                else:
                    nj = (p - 1) % ky if d == 1 else p
                    nd = -d
                ns = seg_ptr[y] + nj
                if ns == s and nd == start_dir:
                    break
                if seg_loop[ns] >= 0:
                    ok = False  # would mean a segment visited twice: a bug
                    break
                cur = ns
                curx = y
                curj = nj
                curk = ky
                d = nd
            if not ok:
                break
        if not ok:
            break
    return (n_loops, seg_ptr, seg_site, seg_len, seg_t0, seg_loop, seg_dir,
            site_seg0, site_ptr, site_ev, ev_px, ev_py, kcnt, ok)


class LoopDecomposition:
    """The loop set of one realization, as flat segment arrays.

    Every point of Lambda x [0,beta) lies on exactly one segment and every
    segment on exactly one loop, so total segment length is beta*|Lambda|.
    """

    __slots__ = ("beta", "n_sites", "n_loops", "seg_ptr", "seg_site",
                 "seg_len", "seg_t0", "seg_loop", "seg_dir", "site_seg0",
                 "site_ptr", "site_ev", "ev_px", "ev_py", "kcnt",
                 "ev_time", "ev_cross", "ev_x", "ev_y")

    def __init__(self, beta, n_sites, kernel_out, ev_time, ev_cross, ev_x, ev_y):
        (self.n_loops, self.seg_ptr, self.seg_site, self.seg_len, self.seg_t0,
         self.seg_loop, self.seg_dir, self.site_seg0, self.site_ptr,
         self.site_ev, self.ev_px, self.ev_py, self.kcnt, ok) = kernel_out
        if not ok:
            raise RuntimeError("loop tracing revisited a segment; tracer bug")
        self.beta = beta
        self.n_sites = n_sites
        self.ev_time = ev_time
        self.ev_cross = ev_cross
        self.ev_x = ev_x
        self.ev_y = ev_y

    # -- point/loop queries ------------------------------------------------

    def loop_at_time0(self, x: int) -> tuple[int, int]:
        """(loop id, direction +1/-1) at the point (x, 0)."""
        s = self.site_seg0[x]
        return int(self.seg_loop[s]), int(self.seg_dir[s])

    def loop_total_lengths(self) -> np.ndarray:
        """Array over loops of sum_x l_x(loop)."""
        return np.bincount(self.seg_loop, weights=self.seg_len,
                           minlength=self.n_loops)

    def loop_field_sums(self, h: np.ndarray) -> np.ndarray:
        """Per loop, sum_x h_x * l_x(loop)."""
        return np.bincount(self.seg_loop,
                           weights=h[self.seg_site] * self.seg_len,
                           minlength=self.n_loops)

    def loop_directed_sums(self, h: np.ndarray) -> np.ndarray:
        """Per loop, sum_x h_x * (l+_x(loop) - l-_x(loop))."""
        w = h[self.seg_site] * self.seg_len * self.seg_dir
        return np.bincount(self.seg_loop, weights=w, minlength=self.n_loops)

    def site_lengths(self, loop_id: int) -> dict[int, tuple[float, float, float]]:
        """site -> (l_x, l+_x, l-_x) for one loop."""
        out: dict[int, list[float]] = {}
        for s in np.nonzero(self.seg_loop == loop_id)[0]:
            x = int(self.seg_site[s])
            rec = out.setdefault(x, [0.0, 0.0, 0.0])
            rec[0] += self.seg_len[s]
            rec[1 if self.seg_dir[s] == 1 else 2] += self.seg_len[s]
        return {x: tuple(v) for x, v in out.items()}

    def loop_segments(self, loop_id: int) -> list[tuple[int, float, float, int]]:
        """Segments (site, t_start, t_end, direction) of one loop.

        t_end may exceed beta for the wrap segment; reduce mod beta to place
        it on the time circle.
        """
        segs = []
        for s in np.nonzero(self.seg_loop == loop_id)[0]:
            t0 = float(self.seg_t0[s])
            segs.append((int(self.seg_site[s]), t0, t0 + float(self.seg_len[s]),
                         int(self.seg_dir[s])))
        return segs

    def to_json(self) -> str:
        """Debug dump of the decomposition."""
        return json.dumps({
            "beta": self.beta,
            "n_sites": self.n_sites,
            "n_loops": int(self.n_loops),
            "loops": [self.loop_segments(l) for l in range(self.n_loops)],
        })


def trace_arrays(graph: Graph, beta: float, ev_edge, ev_time, ev_cross,
                 start_dir: int = 1) -> LoopDecomposition:
    """Trace loops from raw event arrays (edge index, time, is-cross)."""
    edge_x, edge_y = graph.edge_arrays()
    ev_x = edge_x[ev_edge] if len(ev_edge) else np.zeros(0, np.int64)
    ev_y = edge_y[ev_edge] if len(ev_edge) else np.zeros(0, np.int64)
    out = _trace_kernel(graph.n_vertices, float(beta),
                        np.ascontiguousarray(ev_time, dtype=np.float64),
                        np.ascontiguousarray(ev_cross, dtype=np.uint8),
                        np.ascontiguousarray(ev_x), np.ascontiguousarray(ev_y),
                        np.int8(start_dir))
    return LoopDecomposition(float(beta), graph.n_vertices, out,
                             ev_time, ev_cross, ev_x, ev_y)


def build_loops(graph: Graph, omega: EventList,
                start_dir: int = 1) -> LoopDecomposition:
    """Loop decomposition of a realization.

    start_dir flips the tracing orientation of every loop; exported
    classifications must not depend on it.
    """
    edge, time, cross = omega.arrays()
    for e in edge:
        if not 0 <= e < graph.n_edges:
            raise ValueError(f"event references unknown edge {e}")
    return trace_arrays(graph, omega.beta, edge, time, cross, start_dir)


def classify_pair(dec: LoopDecomposition, x: int, y: int) -> PairEvent:
    """Classify the pair event for the points (x, 0) and (y, 0)."""
    if x == y:
        raise ValueError("pair events need two distinct sites")
    lx, dx = dec.loop_at_time0(x)
    ly, dy = dec.loop_at_time0(y)
    if lx != ly:
        return PairEvent.COMPLEMENT
    return PairEvent.PLUS if dx == dy else PairEvent.MINUS
