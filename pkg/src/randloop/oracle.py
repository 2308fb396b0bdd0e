"""Exact quantum-side computations on small Hilbert spaces.

Basis convention: product states |sigma>, sigma in {-S,...,S}^Lambda,
enumerated lexicographically with site 0 as the slowest index; on a single
site, index i corresponds to a = -S + i, so S^3 = diag(-S,...,S).

Dimensions are capped (default 4096); this is a desk-scale oracle, not a
large-scale diagonalization code.
"""

from __future__ import annotations

import itertools

import numpy as np

from .events import CROSS, EventList
from .lattice import Graph

DIM_CAP = 4096
CONFIG_CAP = 10 ** 6

Q_FAMILY = "Q"   # cross/double-bar model, Hamiltonian with Q_xy
P_FAMILY = "P"   # tilde model, Hamiltonian with P_xy


class OracleError(ValueError):
    pass


def _dim(two_s: int) -> int:
    if two_s < 0:
        raise OracleError("need 2S >= 0")
    return two_s + 1


def spin_matrices(two_s: int):
    """(S^1, S^2, S^3) on C^(2S+1); S^2 is imaginary, the others real."""
    d = _dim(two_s)
    s = two_s / 2.0
    a = np.arange(d) - s
    off = np.sqrt(s * (s + 1) - a[:-1] * (a[:-1] + 1))
    sp = np.zeros((d, d))
    sp[np.arange(1, d), np.arange(d - 1)] = off     # S+ |a> ~ |a+1>
    sm = sp.T
    s1 = 0.5 * (sp + sm)
    s2 = -0.5j * (sp - sm)
    s3 = np.diag(a)
    return s1, s2, s3


def pair_operator(kind: str, two_s: int) -> np.ndarray:
    """T (transposition), P (singlet projector times 2S+1), or Q on the
    two-site space C^((2S+1)^2); exact 0/+-1 entries."""
    d = _dim(two_s)
    m = np.zeros((d * d, d * d))
    if kind == "T":
        for a in range(d):
            for b in range(d):
                m[b * d + a, a * d + b] = 1.0
    elif kind == "Q":
        for a in range(d):
            for c in range(d):
                m[a * d + a, c * d + c] = 1.0
    elif kind == "P":
        for a in range(d):
            for c in range(d):
                # rows (a, -a), columns (c, -c), sign (-1)^(a-c)
                m[a * d + (d - 1 - a), c * d + (d - 1 - c)] = (-1.0) ** (a - c)
    else:
        raise OracleError(f"unknown pair operator {kind!r}")
    return m


def embed_two_site(op: np.ndarray, n_sites: int, x: int, y: int,
                   d: int) -> np.ndarray:
    """Extend a two-site operator (first factor = x, second = y) to the
    full product space with site 0 slowest."""
    if x == y:
        raise OracleError("two-site embedding needs distinct sites")
    t = op.reshape(d, d, d, d)
    others = [s for s in range(n_sites) if s not in (x, y)]
    for _ in others:
        t = np.multiply.outer(t, np.eye(d))
    row = {x: 0, y: 1}
    col = {x: 2, y: 3}
    for k, s in enumerate(others):
        row[s] = 4 + 2 * k
        col[s] = 5 + 2 * k
    perm = [row[s] for s in range(n_sites)] + [col[s] for s in range(n_sites)]
    dim = d ** n_sites
    return t.transpose(perm).reshape(dim, dim)


def embed_one_site(op: np.ndarray, n_sites: int, x: int, d: int) -> np.ndarray:
    left = np.eye(d ** x)
    right = np.eye(d ** (n_sites - x - 1))
    return np.kron(np.kron(left, op), right)


def _check_dim(n_sites: int, d: int, cap: int = DIM_CAP):
    if d ** n_sites > cap:
        raise OracleError(f"Hilbert dimension {d ** n_sites} exceeds cap {cap}")


def field_diagonal(graph: Graph, two_s: int, h) -> np.ndarray:
    """Diagonal of sum_x h_x S^3_x as a vector over basis states."""
    d = _dim(two_s)
    n = graph.n_vertices
    h = np.zeros(n) if h is None else np.asarray(h, dtype=np.float64)
    a = np.arange(d) - two_s / 2.0
    diag = np.zeros(d ** n)
    for x in range(n):
        reps_in = d ** (n - x - 1)
        block = np.repeat(a, reps_in)
        diag += h[x] * np.tile(block, d ** x)
    return diag


def hamiltonian(graph: Graph, two_s: int, u: float, h=None,
                family: str = Q_FAMILY) -> np.ndarray:
    """H = -sum_edges (u T_xy + (1-u) K_xy - 1) - sum_x h_x S^3_x with
    K = Q (plain family) or K = P (tilde family)."""
    d = _dim(two_s)
    n = graph.n_vertices
    _check_dim(n, d)
    if family not in (Q_FAMILY, P_FAMILY):
        raise OracleError(f"unknown family {family!r}")
    dim = d ** n
    T = pair_operator("T", two_s)
    K = pair_operator(family, two_s)
    pair = u * T + (1.0 - u) * K
    H = graph.n_edges * np.eye(dim)
    for x, y in graph.edges:
        H -= embed_two_site(pair, n, x, y, d)
    H -= np.diag(field_diagonal(graph, two_s, h))
    return H


def hamiltonian_spin_form(graph: Graph, two_s: int, u: float, h=None,
                          family: str = Q_FAMILY) -> np.ndarray:
    """The same Hamiltonians assembled from spin operators.

    Supported combinations: S=1/2 with the Q family (Heisenberg/XY
    interpolation) and S=1 with the P family (SU(2)-invariant bilinear-
    biquadratic form).  Used to cross-check the matrix-element assembly.
    """
    d = _dim(two_s)
    n = graph.n_vertices
    _check_dim(n, d)
    s1, s2, s3 = spin_matrices(two_s)
    dim = d ** n
    H = np.zeros((dim, dim), dtype=complex)
    if two_s == 1 and family == Q_FAMILY:
        for x, y in graph.edges:
            for op, coeff in ((s1, 1.0), (s2, 2 * u - 1.0), (s3, 1.0)):
                H -= 2.0 * coeff * (embed_one_site(op, n, x, d)
                                    @ embed_one_site(op, n, y, d))
            H += 0.5 * np.eye(dim)
    elif two_s == 2 and family == P_FAMILY:
        for x, y in graph.edges:
            dot = sum(embed_one_site(op, n, x, d) @ embed_one_site(op, n, y, d)
                      for op in (s1, s2, s3))
            H -= u * dot + dot @ dot - 2.0 * np.eye(dim)
    else:
        raise OracleError("spin form available for (S=1/2, Q) and (S=1, P)")
    H -= np.diag(field_diagonal(graph, two_s, h)).astype(complex)
    if np.abs(H.imag).max() > 1e-12:
        raise OracleError("spin-form Hamiltonian is not real")
    return H.real


def _check_symmetric(H: np.ndarray):
    if H.shape[0] != H.shape[1] or np.abs(H - H.T).max() > 1e-10:
        raise OracleError("operator must be real symmetric")


def partition_function(H: np.ndarray, beta: float) -> float:
    """Z = Tr exp(-beta H) via dense symmetric eigendecomposition."""
    _check_symmetric(H)
    lam = np.linalg.eigvalsh(H)
    return float(np.exp(-beta * lam).sum())


def gibbs_operator(H: np.ndarray, beta: float) -> np.ndarray:
    _check_symmetric(H)
    lam, vec = np.linalg.eigh(H)
    return (vec * np.exp(-beta * lam)) @ vec.T


def thermal_two_point(H: np.ndarray, A_full: np.ndarray, B_full: np.ndarray,
                      beta: float) -> float:
    """<A_x B_y> = Tr(A_x B_y e^{-beta H}) / Z for embedded operators."""
    _check_symmetric(H)
    if A_full.shape != H.shape or B_full.shape != H.shape:
        raise OracleError("operator dimensions must match the Hamiltonian")
    lam, vec = np.linalg.eigh(H)
    g = (vec * np.exp(-beta * lam)) @ vec.T
    z = float(np.exp(-beta * lam).sum())
    val = np.trace(A_full @ B_full @ g) / z
    return float(val.real)


def gibbs_from_events(omega: EventList, graph: Graph, two_s: int, h=None,
                      family: str = Q_FAMILY) -> np.ndarray:
    """The time-ordered operator product attached to one realization.

    Between events the diagonal field factor exp(dt * sum h_x S^3_x) acts
    (so that with no events at all the product is exp(beta sum h_x S^3_x),
    the Gibbs factor of the pure Zeeman Hamiltonian); at each event the
    transposition acts for a cross and Q (or P for the tilde family) for a
    double bar.  Averaging over realizations recovers exp(-beta H)
    entrywise.
    """
    d = _dim(two_s)
    n = graph.n_vertices
    _check_dim(n, d)
    hdiag = field_diagonal(graph, two_s, h)
    T = pair_operator("T", two_s)
    K = pair_operator(family, two_s)
    edge_ops = {}
    prev = 0.0
    M = np.eye(d ** n)
    for ev in omega.items:
        M = np.exp((ev.time - prev) * hdiag)[:, None] * M
        if ev.edge not in edge_ops:
            x, y = graph.edges[ev.edge]
            edge_ops[ev.edge] = (embed_two_site(T, n, x, y, d),
                                 embed_two_site(K, n, x, y, d))
        op = edge_ops[ev.edge][0 if ev.kind == CROSS else 1]
        M = op @ M
        prev = ev.time
    M = np.exp((omega.beta - prev) * hdiag)[:, None] * M
    return M


def count_compatible_configs(omega: EventList, graph: Graph, two_s: int,
                             mode: str = "plain",
                             cap: int = CONFIG_CAP) -> int:
    """Exact count of space-time spin configurations compatible with omega.

    One value per loop is assigned (in tilde mode the sign flips wherever
    the loop reverses its vertical direction) and every event constraint
    plus the time-0 seam is checked directly against the matrix elements of
    T and Q (or P).  The count must equal (2S+1)^{|L(omega)|}.
    """
    from .loops import build_loops

    if mode not in ("plain", "tilde"):
        raise OracleError(f"unknown mode {mode!r}")
    dec = build_loops(graph, omega)
    d = _dim(two_s)
    total = d ** dec.n_loops
    if total > cap:
        raise OracleError(f"{total} assignments exceed enumeration cap {cap}")
    a_vals = np.arange(d) - two_s / 2.0

    # spin value on a segment given its loop's value: plain keeps the value
    # along the loop, tilde negates it on downward stretches
    def seg_value(s, loop_vals):
        v = loop_vals[dec.seg_loop[s]]
        if mode == "tilde" and dec.seg_dir[s] == -1:
            return -v
        return v

    # (below, above) local segment indices around an event on one endpoint
    # line: segment ending at the event and segment starting at it
    def around(site, p):
        k = dec.kcnt[site]
        base = dec.seg_ptr[site]
        return base + (p - 1) % k, base + p

    count = 0
    for assign in itertools.product(a_vals, repeat=dec.n_loops):
        ok = True
        for e in range(len(dec.ev_time)):
            x, y = dec.ev_x[e], dec.ev_y[e]
            xb, xa = around(x, dec.ev_px[e])
            yb, ya = around(y, dec.ev_py[e])
            sxb, sxa = seg_value(xb, assign), seg_value(xa, assign)
            syb, sya = seg_value(yb, assign), seg_value(ya, assign)
            if dec.ev_cross[e] == 1:
                # transposition: values swap across the event
                ok = sxa == syb and sya == sxb
            elif mode == "plain":
                # Q: equal values below, equal values above
                ok = sxb == syb and sxa == sya
            else:
                # P: opposite values below, opposite values above
                ok = sxb == -syb and sxa == -sya
            if not ok:
                break
        if ok:
            # time-0 seam: value just below beta equals value just above 0
            # (distinct segments only when an event sits exactly at t = 0)
            for x in range(dec.n_sites):
                k = dec.kcnt[x]
                below_beta = dec.seg_ptr[x] + (k - 1 if k > 0 else 0)
                above_zero = dec.site_seg0[x]
                if seg_value(above_zero, assign) != seg_value(below_beta, assign):
                    ok = False
                    break
        if ok:
            count += 1
    return count
