import time
from typing import Iterable, List, Optional

import numpy as np

from src.business.autodiff import Tensor, no_grad
from src.business.models.ssaformer import MHAParams, SSAParams, count_mixer_flops, mha_reference, ssa
from src.config import Config, logger
from src.data.schemas import BenchRow, MixerKind

bench_logger = logger.getChild("benchmark")


def time_mixer(kind: MixerKind, k: int, d: int, repeats: Optional[int] = None, seed: int = 0, heads: int = 1) -> int:
    """Best-of-repeats wall time in nanoseconds of one token-mixer forward pass."""
    kind = MixerKind(kind)
    repeats = repeats or Config.BENCH_REPEATS
    rng = np.random.default_rng(seed)
    tokens = Tensor(rng.standard_normal((k, d)))
    if kind == MixerKind.SSA:
        params = SSAParams(d, rng)

        def run():
            return ssa(tokens, params)

    else:
        params = MHAParams(d, heads, rng)

        def run():
            return mha_reference(tokens, params)

    best = None
    with no_grad():
        for _ in range(max(1, repeats)):
            start = time.perf_counter_ns()
            run()
            elapsed = time.perf_counter_ns() - start
            best = elapsed if best is None else min(best, elapsed)
    return int(best)


def bench_mixers(
    kinds: Iterable[MixerKind], k_values: Iterable[int], d: int, repeats: Optional[int] = None, seed: int = 0
) -> List[BenchRow]:
    rows = []
    for kind in kinds:
        kind = MixerKind(kind)
        for k in k_values:
            wall_ns = time_mixer(kind, k, d, repeats, seed)
            rows.append(
                BenchRow(kind=kind, k=k, d=d, flops=count_mixer_flops(kind, k, d), wall_ns=wall_ns)
            )
            bench_logger.info(f"{kind.value} k={k} d={d}: {wall_ns / 1e6:.3f} ms")
    return rows
