import itertools
import random

import numpy as np
import pytest

from segbench.flow import BACKEND, SINK, SOURCE, FlowNetwork

BACKENDS = ["python"] + (["cython"] if BACKEND == "cython" else [])


def brute_force_min_cut(n, tlinks, nlinks):
    """Exhaustive min cut over all 2^n labelings (1 = source side)."""
    best = float("inf")
    for bits in itertools.product([0, 1], repeat=n):
        cut = 0.0
        for p, (src_cap, snk_cap) in tlinks.items():
            cut += snk_cap if bits[p] else src_cap
        for p, q, c in nlinks:
            if bits[p] != bits[q]:
                cut += c
        best = min(best, cut)
    return best


def random_network(rng, max_nodes=8):
    n = rng.randint(2, max_nodes)
    tlinks = {p: (rng.randint(0, 9), rng.randint(0, 9)) for p in range(n)}
    nlinks = []
    for _ in range(rng.randint(1, 2 * n)):
        p, q = rng.sample(range(n), 2)
        nlinks.append((p, q, rng.randint(0, 6)))
    return n, tlinks, nlinks


def build(n, tlinks, nlinks) -> FlowNetwork:
    net = FlowNetwork(n)
    for p, (src_cap, snk_cap) in tlinks.items():
        net.add_tlink(p, src_cap, snk_cap)
    for p, q, c in nlinks:
        net.add_nlink(p, q, c)
    return net


def labeling_cut_value(bits, tlinks, nlinks):
    cut = sum(snk if bits[p] else src for p, (src, snk) in tlinks.items())
    cut += sum(c for p, q, c in nlinks if bits[p] != bits[q])
    return cut


@pytest.mark.parametrize("backend", BACKENDS)
class TestMaxFlow:
    def test_single_pixel(self, backend):
        net = FlowNetwork(1)
        net.add_tlink(0, 5, 3)
        flow, side = net.max_flow(backend=backend)
        assert flow == pytest.approx(3)
        assert side[0]  # cheaper to cut the sink link: pixel stays foreground

    def test_two_pixels(self, backend):
        net = FlowNetwork(2)
        net.add_arc(SOURCE, 0, 4)
        net.add_arc(1, SINK, 4)
        net.add_nlink(0, 1, 1)
        flow, side = net.max_flow(backend=backend)
        assert flow == pytest.approx(1)
        assert side[0] and not side[1]

    def test_empty_network(self, backend):
        flow, side = FlowNetwork(3).max_flow(backend=backend)
        assert flow == 0.0
        assert not side.any()

    def test_matches_brute_force(self, backend):
        rng = random.Random(1234)
        for _ in range(20):
            n, tlinks, nlinks = random_network(rng)
            flow, side = build(n, tlinks, nlinks).max_flow(backend=backend)
            oracle = brute_force_min_cut(n, tlinks, nlinks)
            assert flow == pytest.approx(oracle, abs=1e-9)
            # the returned labeling achieves the optimal cut value
            cut = labeling_cut_value(side.astype(int), tlinks, nlinks)
            assert cut == pytest.approx(oracle, abs=1e-9)


def test_backends_agree():
    if BACKEND != "cython":
        pytest.skip("extension not built")
    rng = random.Random(99)
    for _ in range(10):
        n, tlinks, nlinks = random_network(rng, max_nodes=12)
        f1, _ = build(n, tlinks, nlinks).max_flow(backend="python")
        f2, _ = build(n, tlinks, nlinks).max_flow(backend="cython")
        assert f1 == pytest.approx(f2, abs=1e-9)


def test_rejects_negative_capacity():
    net = FlowNetwork(1)
    with pytest.raises(ValueError):
        net.add_tlink(0, -1, 0)
