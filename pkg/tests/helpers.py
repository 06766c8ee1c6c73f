"""Random channel generators shared by the test modules."""
import numpy as np

from singdmc.channel import validate


def random_channel(rng, max_x=5, max_y=6, zero_prob=0.3):
    """Dirichlet rows with a random zero pattern (almost surely nonsingular unless sparse)."""
    nx = int(rng.integers(1, max_x + 1))
    ny = int(rng.integers(1, max_y + 1))
    w = rng.dirichlet(np.ones(ny), size=nx)
    w[rng.random((nx, ny)) < zero_prob] = 0.0
    for x in range(nx):
        if w[x].sum() == 0:
            w[x, rng.integers(ny)] = 1.0
    w /= w.sum(axis=1, keepdims=True)
    return validate(w)


def random_singular_channel(rng, max_x=5, max_y=6):
    """Rows share some constant-valued columns and finish with a private column.

    Every column then carries a single positive value, so the result is singular.
    """
    nx = int(rng.integers(1, max_x + 1))
    shared = int(rng.integers(0, max(1, max_y - nx) + 1))
    consts = rng.uniform(0.02, 0.9 / max(shared, 1), size=shared)
    w = np.zeros((nx, shared + nx))
    for x in range(nx):
        use = rng.random(shared) < 0.6
        w[x, :shared] = np.where(use, consts, 0.0)
        w[x, shared + x] = 1.0 - w[x, :shared].sum()
    return validate(w)


def perturb_one(ch, rng, size=1e-3):
    """Shift ``size`` between two positive entries of one row so that a column with
    at least two positive entries loses its common value; ``None`` if impossible."""
    w = np.array(ch.w)
    cols = [y for y in range(w.shape[1]) if np.count_nonzero(w[:, y]) >= 2]
    for y in rng.permutation(cols):
        for x in np.flatnonzero(w[:, y]):
            others = [z for z in np.flatnonzero(w[x]) if z != y]
            if others and w[x, y] > size:
                w[x, y] -= size
                w[x, others[0]] += size
                return validate(w)
    return None
