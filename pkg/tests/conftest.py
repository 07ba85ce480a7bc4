"""Shared fixtures and independent oracles used across the test suite.

The oracles here deliberately avoid the package's own code paths: exact
joint distributions come from brute-force enumeration of small Markov
chains, closed forms are spelled out inline, and sampled data is drawn
with plain multinomial draws.
"""

from __future__ import annotations

import numpy as np
import pytest


def h2(p: float) -> float:
    """Binary entropy in bits."""
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def random_stochastic(rng: np.random.Generator, n_rows: int, n_cols: int,
                      concentration: float = 1.0) -> np.ndarray:
    """Row-stochastic matrix with Dirichlet rows."""
    return rng.dirichlet(np.full(n_cols, concentration), size=n_rows)


def random_tensor_entries(rng: np.random.Generator, g: int, i: int, j: int,
                          concentration: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(j, concentration), size=(g, i))


class ExactChain:
    """Brute-force enumeration of the stationary law of a coupled chain.

    Dynamics per step: x' ~ qx[x], y' ~ a0[x, y], z' ~ b0[y, z].  Setting
    ``z_memoryless=True`` replaces b0[y, z] with b0[y] so the last variable
    depends only on its driver.  All lag joints are computed by explicit
    summation over the full state space (cards are tiny).
    """

    def __init__(self, qx, a0, b0, z_memoryless=False):
        self.qx = np.asarray(qx, float)       # (nx, nx)
        self.a0 = np.asarray(a0, float)       # (nx, ny, ny)
        self.nx = self.qx.shape[0]
        self.ny = self.a0.shape[1]
        if z_memoryless:
            b0 = np.asarray(b0, float)        # (ny, nz)
            self.nz = b0.shape[1]
            self.b0 = np.broadcast_to(b0[:, None, :],
                                      (self.ny, self.nz, self.nz)).copy()
        else:
            self.b0 = np.asarray(b0, float)   # (ny, nz, nz)
            self.nz = self.b0.shape[1]
        n = self.nx * self.ny * self.nz
        t = np.zeros((n, n))
        for x in range(self.nx):
            for y in range(self.ny):
                for z in range(self.nz):
                    s = (x * self.ny + y) * self.nz + z
                    for x2 in range(self.nx):
                        for y2 in range(self.ny):
                            for z2 in range(self.nz):
                                s2 = (x2 * self.ny + y2) * self.nz + z2
                                t[s, s2] = (self.qx[x, x2] * self.a0[x, y, y2]
                                            * self.b0[y, z, z2])
        self.transition = t
        pi = np.full(n, 1.0 / n)
        for _ in range(20_000):
            nxt = pi @ t
            if np.abs(nxt - pi).max() < 1e-15:
                pi = nxt
                break
            pi = nxt
        self.stationary = pi

    def lag_joint(self, n_steps: int) -> np.ndarray:
        """Joint over (s_0, ..., s_n) reshaped to per-variable axes.

        Axis order: (x0, y0, z0, x1, y1, z1, ...), oldest first.
        """
        n = self.stationary.size
        if n_steps == 0:
            joint = self.stationary
        elif n_steps == 1:
            joint = self.stationary[:, None] * self.transition
        elif n_steps == 2:
            joint = (self.stationary[:, None, None]
                     * self.transition[:, :, None]
                     * self.transition[None, :, :])
        else:
            raise ValueError("only up to two steps needed")
        shape = (self.nx, self.ny, self.nz) * (n_steps + 1)
        return joint.reshape(shape)

    def marginal(self, coords: list[str]) -> np.ndarray:
        """Marginal joint over named coordinates, in the order given.

        Names are like 'x0', 'y2': variable letter plus time offset
        (0 = two steps back when two steps are enumerated).
        """
        steps = max(int(c[1]) for c in coords)
        joint = self.lag_joint(steps)
        axis_of = {}
        for t in range(steps + 1):
            for k, letter in enumerate("xyz"):
                axis_of[f"{letter}{t}"] = 3 * t + k
        keep = [axis_of[c] for c in coords]
        drop = tuple(a for a in range(joint.ndim) if a not in keep)
        reduced = joint.sum(axis=drop)
        # reorder remaining axes to the requested order
        current = sorted(keep)
        perm = [current.index(a) for a in keep]
        return np.transpose(reduced, perm)

    def conditional(self, targets: list[str], given: list[str]) -> np.ndarray:
        """p(targets | given), axes ordered given-then-targets."""
        joint = self.marginal(given + targets)
        denom = joint.sum(axis=tuple(range(len(given), joint.ndim)),
                          keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = joint / denom
        n_t = joint.ndim - len(given)
        flat_t = int(np.prod(joint.shape[len(given):]))
        uniform = 1.0 / flat_t
        out = np.where(np.isfinite(out), out, uniform)
        return out


@pytest.fixture
def example_matrices():
    """The worked 2x2 relay example: A, B, the composition C, the Bayes
    inverse of A under input (2/5, 3/5), and the reconstruction product."""
    a = np.array([[0.5, 0.5], [1.0, 0.0]])
    b = np.array([[1 / 3, 2 / 3], [0.0, 1.0]])
    px = np.array([0.4, 0.6])
    c = a @ b
    py = px @ a
    a_dag = (a * px[:, None]).T / py[:, None]
    return {"a": a, "b": b, "c": c, "px": px, "py": py, "a_dag": a_dag,
            "a_dag_c": a_dag @ c}


def sample_joint_counts(rng: np.random.Generator, joint: np.ndarray,
                        n: int) -> np.ndarray:
    """Multinomial counts from an exact joint pmf (oracle sampler)."""
    flat = joint.ravel()
    flat = flat / flat.sum()
    return rng.multinomial(n, flat).reshape(joint.shape)
