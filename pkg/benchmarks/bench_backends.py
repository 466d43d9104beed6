#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-numpy fallback.

Times the GRU recurrence kernels at production sizes and a full sentence
encode (forward + backward) under each backend, and reports the numeric
deviation between the two. Run from the repository root:

    python benchmarks/bench_backends.py [--repeats 200] [--tokens 16]
"""

import argparse
import time

import numpy as np

from crossrumor import backend
from crossrumor.encoder import encode_backward, encode_with_cache, init_encoder
from crossrumor.nncore import zero_grads
from crossrumor.rng import RngState


def _time(fn, repeats):
    fn()  # warm-up (includes JIT compilation for the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_kernels(repeats, tokens):
    rng = RngState(0)
    h = 75
    xw = rng.normal(size=(tokens, 3 * h))
    u_zr = rng.normal(size=(h, 2 * h)) * 0.1
    u_c = rng.normal(size=(h, h)) * 0.1
    h0 = np.zeros(h)
    dh = rng.normal(size=(tokens, h))

    rows = []
    outputs = {}
    for name in ("numpy", "numba") if backend.numba_available() else ("numpy",):
        k = backend.make_kernels(name)
        fwd = lambda: k["gru_layer_forward"](xw, u_zr, u_c, h0)
        cache = fwd()
        bwd = lambda: k["gru_layer_backward"](dh, *cache, u_zr, u_c)
        rows.append((f"gru_layer_forward[{name}]", _time(fwd, repeats)))
        rows.append((f"gru_layer_backward[{name}]", _time(bwd, repeats)))
        outputs[name] = (cache, bwd())
    if len(outputs) == 2:
        dev = max(
            float(np.abs(np.asarray(a) - np.asarray(b)).max())
            for pair in zip(outputs["numpy"], outputs["numba"])
            for a, b in zip(*pair)
        )
        rows.append(("max |numpy - numba| deviation", dev))
    return rows


def bench_encode(repeats, tokens):
    rows = []
    rng = RngState(1)
    ids = np.asarray(rng.integers(0, 500, size=tokens))
    probe = rng.normal(size=300)
    for name in ("numpy", "numba") if backend.numba_available() else ("numpy",):
        backend.use(name)
        params = init_encoder(500, RngState(2))

        def step():
            zero_grads(params.parameters())
            vec, cache = encode_with_cache(ids, params)
            encode_backward(probe.copy(), cache, params)
            return vec

        rows.append((f"encode fwd+bwd, {tokens} tokens [{name}]", _time(step, repeats)))
    backend.use("auto")
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--tokens", type=int, default=16)
    args = parser.parse_args()

    print(f"numba available: {backend.numba_available()}")
    print(f"{'benchmark':<44} {'per call':>12}")
    print("-" * 58)
    for name, value in bench_kernels(args.repeats, args.tokens):
        if "deviation" in name:
            print(f"{name:<44} {value:>12.2e}")
        else:
            print(f"{name:<44} {value * 1e6:>10.1f} us")
    for name, value in bench_encode(max(args.repeats // 4, 10), args.tokens):
        print(f"{name:<44} {value * 1e3:>10.2f} ms")


if __name__ == "__main__":
    main()
