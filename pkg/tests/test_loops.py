import numpy as np
import pytest

from randloop import events, lattice, loops
from randloop.events import BAR, CROSS, Event, EventList
from randloop.loops import PairEvent


def bars(times, beta=1.0):
    return EventList(beta, 0.0, tuple(Event(0, t, BAR) for t in times))


def crosses(times, beta=1.0):
    return EventList(beta, 1.0, tuple(Event(0, t, CROSS) for t in times))


def test_empty_realization():
    g = lattice.chain(3)
    dec = loops.build_loops(g, EventList(2.0, 0.5))
    assert dec.n_loops == 3
    for x in range(3):
        loop, d = dec.loop_at_time0(x)
        assert d == 1
        assert dec.site_lengths(loop) == {x: (2.0, 2.0, 0.0)}
    assert loops.classify_pair(dec, 0, 1) is PairEvent.COMPLEMENT


def test_single_cross():
    g = lattice.chain(2)
    dec = loops.build_loops(g, crosses([0.4]))
    assert dec.n_loops == 1
    assert dec.loop_total_lengths()[0] == pytest.approx(2.0)
    assert loops.classify_pair(dec, 0, 1) is PairEvent.PLUS


def test_single_bar():
    g = lattice.chain(2)
    dec = loops.build_loops(g, bars([0.4]))
    assert dec.n_loops == 1
    assert dec.loop_total_lengths()[0] == pytest.approx(2.0)
    assert loops.classify_pair(dec, 0, 1) is PairEvent.MINUS


def test_three_bars():
    g = lattice.chain(2)
    dec = loops.build_loops(g, bars([0.2, 0.5, 0.8]))
    assert dec.n_loops == 3


@pytest.mark.parametrize("n", range(7))
def test_two_site_loop_counts(n):
    # crosses only: 2 loops for even n, 1 for odd; bars only: max(n,1)
    # loops for n >= 1, 2 for n = 0
    g = lattice.chain(2)
    times = [(i + 1) / (n + 1) for i in range(n)]
    dec_c = loops.build_loops(g, crosses(times))
    assert dec_c.n_loops == (2 if n % 2 == 0 else 1)
    dec_b = loops.build_loops(g, bars(times))
    assert dec_b.n_loops == (max(n, 1) if n >= 1 else 2)


def test_length_conservation_random():
    rng = np.random.default_rng(42)
    g = lattice.torus(2, 2)
    for _ in range(50):
        ev = events.sample_events(g, 1.7, 0.5, rng)
        dec = loops.build_loops(g, ev)
        total = dec.seg_len.sum()
        assert abs(total - 1.7 * 4) <= 1e-9 * 1.7 * 4


def test_plus_minus_lengths_add_up():
    rng = np.random.default_rng(43)
    g = lattice.chain(3, periodic=True)
    for _ in range(30):
        ev = events.sample_events(g, 2.0, 0.5, rng)
        dec = loops.build_loops(g, ev)
        for loop in range(dec.n_loops):
            for x, (l, lp, lm) in dec.site_lengths(loop).items():
                assert lp + lm == pytest.approx(l)


def test_insertion_changes_loop_count_by_at_most_one():
    # a single insertion reconnects two strands, so |L| moves by -1, 0 or
    # +1; crossings between strands of one loop running in opposite time
    # directions can leave the count unchanged (see the regression below)
    rng = np.random.default_rng(44)
    g = lattice.torus(2, 2)
    deltas = set()
    for _ in range(100):
        ev = events.sample_events(g, 1.0, 0.5, rng)
        dec = loops.build_loops(g, ev)
        edge = int(rng.integers(0, g.n_edges))
        t = float(rng.uniform(0, 1.0))
        kind = CROSS if rng.random() < 0.5 else BAR
        ev2 = events.insert_event(ev, edge, t, kind)
        dec2 = loops.build_loops(g, ev2)
        deltas.add(dec2.n_loops - dec.n_loops)
    assert deltas <= {-1, 0, 1}
    assert {-1, 1} <= deltas


def test_insertion_crosses_only_changes_count_by_exactly_one():
    # with crosses only, every strand runs upward in time, so an insertion
    # always merges two loops or splits one (transposition parity)
    rng = np.random.default_rng(47)
    g = lattice.torus(2, 2)
    for _ in range(100):
        ev = events.sample_events(g, 1.0, 1.0, rng)
        dec = loops.build_loops(g, ev)
        edge = int(rng.integers(0, g.n_edges))
        ev2 = events.insert_event(ev, edge, float(rng.uniform(0, 1.0)), CROSS)
        dec2 = loops.build_loops(g, ev2)
        assert abs(dec2.n_loops - dec.n_loops) == 1


def test_insertion_can_preserve_loop_count():
    # one bar on two sites gives a single loop running up at site 0 and
    # down at site 1; a cross inserted below it rewires that loop into a
    # single longer loop, leaving the count at 1
    g = lattice.chain(2)
    ev = EventList(1.0, 0.5, (Event(0, 0.5, BAR),))
    assert loops.build_loops(g, ev).n_loops == 1
    ev2 = events.insert_event(ev, 0, 0.25, CROSS)
    assert loops.build_loops(g, ev2).n_loops == 1


def test_classification_orientation_reversal_invariant():
    rng = np.random.default_rng(45)
    g = lattice.chain(4, periodic=True)
    for _ in range(50):
        ev = events.sample_events(g, 1.5, 0.5, rng)
        up = loops.build_loops(g, ev)
        down = loops.build_loops(g, ev, start_dir=-1)
        assert up.n_loops == down.n_loops
        for x in range(g.n_vertices):
            for y in range(x + 1, g.n_vertices):
                assert loops.classify_pair(up, x, y) is \
                    loops.classify_pair(down, x, y)
                assert loops.classify_pair(up, x, y) is \
                    loops.classify_pair(up, y, x)


def test_classify_same_site_rejected():
    g = lattice.chain(2)
    dec = loops.build_loops(g, EventList(1.0, 0.5))
    with pytest.raises(ValueError):
        loops.classify_pair(dec, 1, 1)


def test_membership_segments_consistent():
    rng = np.random.default_rng(46)
    g = lattice.torus(2, 2)
    ev = events.sample_events(g, 2.0, 0.5, rng)
    dec = loops.build_loops(g, ev)
    # every segment accounted for exactly once across loops
    seen = np.zeros(len(dec.seg_len), bool)
    for loop in range(dec.n_loops):
        idx = np.nonzero(dec.seg_loop == loop)[0]
        assert not seen[idx].any()
        seen[idx] = True
    assert seen.all()


def test_debug_dump_json():
    g = lattice.chain(2)
    dec = loops.build_loops(g, crosses([0.4]))
    import json
    d = json.loads(dec.to_json())
    assert d["n_loops"] == 1
    assert len(d["loops"][0]) == 2
