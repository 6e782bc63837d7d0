"""Small model builders: the reference five-variable system and random instances."""

from __future__ import annotations

import numpy as np

from .model import EQ, GE, LE, build_instance

REFERENCE_NAMES = ("t", "w", "x", "y", "z")


def reference_system(t_integer=False):
    """``t + x + y + z >= 1``, ``w + y <= 1``, ``w - z >= 0`` with ``t`` in [-3, 3].

    Columns are ordered ``t, w, x, y, z``.  With ``t_integer=True`` the
    continuous ``t`` becomes an integer so the model can be enumerated.
    """
    t, w, x, y, z = range(5)
    return build_instance(
        rows=[{t: 1, x: 1, y: 1, z: 1}, {w: 1, y: 1}, {w: 1, z: -1}],
        sense=[GE, LE, GE],
        rhs=[1, 1, 0],
        lower=[-3, 0, 0, 0, 0],
        upper=[3, 1, 1, 1, 1],
        is_integer=[t_integer, True, True, True, True],
        row_names=["cover", "pack", "link"],
        col_names=list(REFERENCE_NAMES),
        name="reference",
    )


def random_instance(rng, n_binary=12, n_general=2, n_rows=10, max_row_len=5,
                    clique_share=0.25, general_range=3, name="random"):
    """Random bounded all-integer model mixing clique rows with general rows.

    ``rng`` is a :class:`numpy.random.Generator`.  General integer columns
    take bounds inside ``[-general_range, general_range]``.  Row
    right-hand sides are set from a planted integer point, so every instance
    is feasible; zero or small slack keeps many rows tight.
    """
    n = n_binary + n_general
    lower = [0] * n_binary
    upper = [1] * n_binary
    for _ in range(n_general):
        lo = int(rng.integers(-general_range, 1))
        lower.append(lo)
        upper.append(int(rng.integers(max(lo, 0), general_range + 1)))
    point = [int(rng.integers(lo, up + 1)) for lo, up in zip(lower, upper)]

    n_clique = int(rng.binomial(n_rows, clique_share)) if n_binary >= 2 else 0
    rows, sense, rhs = [], [], []
    for _ in range(n_clique):
        size = int(rng.integers(2, max(2, min(max_row_len, n_binary)) + 1))
        cols = [int(c) for c in rng.choice(n_binary, size=size, replace=False)]
        ones = [c for c in cols if point[c] == 1]
        for c in ones[1:]:
            point[c] = 0  # keep the planted point feasible
        rows.append({c: 1 for c in cols})
        sense.append(LE)
        rhs.append(1)
    for _ in range(n_rows - n_clique):
        size = int(rng.integers(2, max(2, min(max_row_len, n)) + 1))
        cols = rng.choice(n, size=size, replace=False)
        coefs = {int(c): int(rng.choice([-3, -2, -1, 1, 1, 2, 3])) for c in cols}
        act = sum(a * point[c] for c, a in coefs.items())
        kind = str(rng.choice([LE, GE, EQ], p=[0.6, 0.3, 0.1]))
        slack = int(rng.integers(0, 3))
        rows.append(coefs)
        sense.append(kind)
        rhs.append(act + slack if kind == LE else act - slack if kind == GE else act)
    return build_instance(
        rows=rows,
        sense=sense,
        rhs=rhs,
        lower=lower,
        upper=upper,
        objective=[float(v) for v in rng.integers(-5, 6, size=n)],
        is_integer=[True] * n,
        name=name,
    )


def random_mixed_instance(rng, n_binary=20, n_continuous=3, n_rows=30, max_row_len=6, name="mixed"):
    """Random model with binaries and bounded continuous columns (not enumerable)."""
    n = n_binary + n_continuous
    lower = [0.0] * n_binary + [float(rng.integers(-4, 1)) for _ in range(n_continuous)]
    upper = [1.0] * n_binary + [float(rng.integers(1, 5)) for _ in range(n_continuous)]
    point = [float(rng.integers(0, 2)) for _ in range(n_binary)] + [
        float(rng.uniform(lo, up)) for lo, up in zip(lower[n_binary:], upper[n_binary:])
    ]
    rows, sense, rhs = [], [], []
    for _ in range(n_rows):
        size = int(rng.integers(2, max_row_len + 1))
        if rng.random() < 0.2:
            cols = [int(c) for c in rng.choice(n_binary, size=min(size, n_binary), replace=False)]
            if sum(point[c] for c in cols) > 1:
                continue  # would cut off the planted point
            rows.append({c: 1 for c in cols})
            sense.append(LE)
            rhs.append(1)
            continue
        cols = rng.choice(n, size=size, replace=False)
        coefs = {int(c): float(rng.choice([-2, -1, 1, 2, 3])) for c in cols}
        act = sum(a * point[c] for c, a in coefs.items())
        if rng.random() < 0.6:
            rows.append(coefs)
            sense.append(LE)
            rhs.append(float(np.ceil(act)))
        else:
            rows.append(coefs)
            sense.append(GE)
            rhs.append(float(np.floor(act)))
    return build_instance(
        rows=rows,
        sense=sense,
        rhs=rhs,
        lower=lower,
        upper=upper,
        is_integer=[True] * n_binary + [False] * n_continuous,
        name=name,
    )


def grouped_instance(groups, name="grouped"):
    """``groups`` blocks of four binaries plus one continuous column each.

    Each block has a clique row over its binaries and a knapsack-like row
    coupling them with the continuous column, so every block contributes six
    candidate pairs.  Blocks are independent; probing them finds little,
    which keeps the effort score flat and lets the pair caps bind.
    """
    rows, sense, rhs = [], [], []
    n = 5 * groups
    for g in range(groups):
        b = [5 * g + q for q in range(4)]
        c = 5 * g + 4
        rows.append({v: 1 for v in b})
        sense.append(LE)
        rhs.append(1)
        rows.append({b[0]: 2, b[1]: 3, b[2]: 4, b[3]: 5, c: -1})
        sense.append(LE)
        rhs.append(6)
    lower = [0.0] * n
    upper = [1.0 if q % 5 != 4 else 10.0 for q in range(n)]
    is_int = [q % 5 != 4 for q in range(n)]
    return build_instance(rows=rows, sense=sense, rhs=rhs, lower=lower, upper=upper,
                          is_integer=is_int, name=name)
