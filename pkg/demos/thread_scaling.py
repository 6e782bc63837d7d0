"""Pairs probed by the fork-join driver as the thread count grows."""

import sys
import time

from twocolprobe.config import Config
from twocolprobe.generators import grouped_instance
from twocolprobe.parallel import run_parallel
from twocolprobe.probing import prepare


def main(groups=1700):
    inst = grouped_instance(groups)
    cfg = Config(time_limit_seconds=600)
    ctx = prepare(inst, cfg)
    print(f"{len(ctx.cm)} candidate pairs")
    print(f"{'k':>3} {'pairs':>6} {'stop':>10} {'seconds':>8}")
    for k in (1, 2, 4, 8, 16):
        start = time.monotonic()
        m = run_parallel(inst, k, cfg, ctx=ctx).metrics
        print(f"{k:>3} {m.pairs_probed:>6} {m.terminated_by:>10} {time.monotonic() - start:>8.2f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 1700)
