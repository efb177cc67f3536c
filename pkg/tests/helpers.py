import random

from baut.linalg import identity, matmul


def random_unimodular(n, rng: random.Random, steps=8, spread=2):
    """Product of random elementary integer operations (determinant +-1)."""
    p = [list(r) for r in identity(n)]
    for _ in range(steps):
        kind = rng.random()
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if kind < 0.15 or n == 1:
            p = [[-x if c == i else x for c, x in enumerate(row)] for row in p]
        elif kind < 0.3:
            for row in p:
                row[i], row[j] = row[j], row[i]
        else:
            c = rng.choice([k for k in range(-spread, spread + 1) if k])
            for row in p:
                row[j] += c * row[i]
    return tuple(map(tuple, p))


def conj(p, a):
    from baut.linalg import transpose

    return matmul(matmul(transpose(p), a), p)
