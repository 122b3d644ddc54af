"""Fixed-capacity FIFO replay buffer with uniform minibatch sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BufferError(RuntimeError):
    pass


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool  # bootstrap mask: true terminal only


class ReplayBuffer:
    """Ring of transitions; oldest entries are overwritten past capacity.

    Stored column-wise so sampled minibatches come out as ready arrays.
    """

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.size = 0
        self.write_head = 0
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)

    def push(self, t: Transition):
        if not (
            np.all(np.isfinite(t.state))
            and np.all(np.isfinite(t.action))
            and np.isfinite(t.reward)
            and np.all(np.isfinite(t.next_state))
        ):
            raise BufferError("refusing to store non-finite transition")
        i = self.write_head
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.dones[i] = 1.0 if t.done else 0.0
        self.write_head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng):
        """Uniform with replacement; returns (S, A, R, S2, D) arrays."""
        if self.size == 0:
            raise BufferError("cannot sample from an empty buffer")
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        idx = rng.integers(0, self.size, size=batch_size)
        return (
            self.states[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx],
            self.dones[idx],
        )

    def get(self, i: int) -> Transition:
        if not 0 <= i < self.size:
            raise IndexError("transition index out of range")
        return Transition(
            self.states[i].copy(),
            self.actions[i].copy(),
            float(self.rewards[i]),
            self.next_states[i].copy(),
            bool(self.dones[i]),
        )
