"""Deep Q-learning agent: replay buffer, one-step targets, per-decision training."""

from __future__ import annotations

import numpy as np

from .config import RlConfig
from .exploration import epsilon_greedy
from .mdp import NetworkSnapshot, Transition, encode_state
from .nnet import AdamState, MlpNetwork, adam_step, forward, init_mlp, loss_and_grads


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.items: list[Transition] = []
        self.cursor = 0

    def push(self, t: Transition) -> None:
        if len(self.items) < self.capacity:
            self.items.append(t)
        else:
            self.items[self.cursor] = t
        self.cursor = (self.cursor + 1) % self.capacity

    def sample(self, n: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform sample without replacement."""
        if n > len(self.items):
            raise ValueError(f"cannot sample {n} from buffer of {len(self.items)}")
        idx = rng.choice(len(self.items), size=n, replace=False)
        return [self.items[i] for i in idx]

    def __len__(self) -> int:
        return len(self.items)


def dql_act(net: MlpNetwork, state: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    return epsilon_greedy(forward(net, state), epsilon, rng)


def train_batch(
    net: MlpNetwork,
    adam: AdamState,
    batch: list,
    gamma: float,
    target_net: MlpNetwork | None = None,
) -> float:
    """One gradient step on a batch of transitions; returns the pre-step loss.

    Targets: r + gamma * max_a Q(s', a), zero bootstrap on terminals.  The
    bootstrap uses ``target_net`` when given, else the online network.
    """
    states = np.stack([t.state for t in batch])
    next_states = np.stack([t.next_state for t in batch])
    actions = np.array([t.action for t in batch], dtype=np.intp)
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    live = np.array([0.0 if t.terminal else 1.0 for t in batch], dtype=np.float64)

    bootstrap_net = target_net if target_net is not None else net
    next_q = forward(bootstrap_net, next_states)
    targets = rewards + gamma * live * next_q.max(axis=1)

    loss, grads = loss_and_grads(net, states, actions, targets)
    adam_step(adam, net.parameters(), grads)
    return loss


class DqlAgent:
    """One UAV's deep learner.

    Ingests finalized transitions into replay and trains one batch per
    ingested decision once the buffer can fill a batch.  The optional target
    network is synced every ``target_sync_every`` training steps.
    """

    wants_transitions = True

    def __init__(
        self,
        state_width: int,
        num_actions: int,
        rl: RlConfig,
        rng: np.random.Generator,
        state_layout: str = "paper10",
    ):
        self.state_layout = state_layout
        self.rng = rng
        self.gamma = rl.discount
        self.batch_size = rl.batch_size
        dims = [state_width, *rl.hidden_sizes, num_actions]
        self.net = init_mlp(dims, rng)
        self.adam = AdamState(
            self.net.parameters(), lr=rl.adam_lr, beta1=rl.adam_beta1,
            beta2=rl.adam_beta2, eps=rl.adam_eps,
        )
        self.buffer = ReplayBuffer(rl.replay_capacity)
        self.target_net = self.net.copy() if rl.target_network else None
        self.target_sync_every = rl.target_sync_every
        self.train_steps = 0
        self.epsilon = 0.0
        self.last_loss: float | None = None

    def select(self, snap: NetworkSnapshot) -> int:
        state = encode_state(snap, self.state_layout)
        return dql_act(self.net, state, self.epsilon, self.rng)

    def ingest(self, t: Transition) -> None:
        self.buffer.push(t)
        if len(self.buffer) < self.batch_size:
            return
        batch = self.buffer.sample(self.batch_size, self.rng)
        self.last_loss = train_batch(self.net, self.adam, batch, self.gamma, self.target_net)
        self.train_steps += 1
        if self.target_net is not None and self.train_steps % self.target_sync_every == 0:
            self.target_net.copy_from(self.net)
