"""Fixed-capacity experience buffer with uniform minibatch sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Transition", "ReplayBuffer"]


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    terminated: bool
    truncated: bool


class ReplayBuffer:
    """Ring buffer; once full, each push overwrites the oldest entry.

    Sampling is uniform with replacement, so the batch size is independent
    of how full the buffer is.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, t: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._cursor] = t
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch: int, rng: np.random.Generator) -> list[Transition]:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        if batch < 1:
            raise ValueError("batch must be positive")
        idx = rng.integers(0, len(self._items), size=batch)
        return [self._items[i] for i in idx]

    def sample_arrays(self, batch: int, rng: np.random.Generator):
        """Batch as stacked arrays: (obs, action, reward, next_obs, done).

        done marks terminated only; truncation still bootstraps.
        """
        items = self.sample(batch, rng)
        obs = np.stack([t.obs for t in items])
        act = np.stack([t.action for t in items])
        rew = np.array([t.reward for t in items])
        nxt = np.stack([t.next_obs for t in items])
        done = np.array([float(t.terminated) for t in items])
        return obs, act, rew, nxt, done
