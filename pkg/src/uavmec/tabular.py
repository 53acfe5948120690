"""Tabular Q-learning over a discretized snapshot state.

The table is a dict from discrete state keys to one Q-value per unit; absent
keys read as all-zero rows.  Delay entries use geometric bin edges (finer
resolution near zero, where deadlines live), battery entries uniform bins,
and the task type stays exact.
"""

from __future__ import annotations

import numpy as np

from .config import RlConfig
from .exploration import epsilon_greedy
from .mdp import NetworkSnapshot, Transition, encode_state

QTABLE_MAGIC = "uavmec-qtable v1"


class DiscretizationGrid:
    """Maps a base-layout state vector to a hashable integer key."""

    def __init__(
        self,
        num_uavs: int,
        num_units: int,
        num_types: int,
        max_deadline: float,
        delay_bins: int = 8,
        delay_floor: float = 0.01,
        battery_bins: int = 10,
    ):
        if delay_bins < 2:
            raise ValueError("delay_bins must be >= 2")
        self.num_uavs = num_uavs
        self.num_units = num_units
        self.num_types = num_types
        self.delay_bins = delay_bins
        self.battery_bins = battery_bins
        # Edges span (floor, 2 * max deadline]; anything above the last edge
        # lands in the top bin, anything below the floor in bin 0.
        self.delay_edges = np.geomspace(delay_floor, 2.0 * max_deadline, delay_bins - 1)

    @classmethod
    def from_config(cls, num_uavs, num_mecs, num_types, max_deadline, rl: RlConfig):
        return cls(
            num_uavs,
            num_uavs + num_mecs,
            num_types,
            max_deadline,
            delay_bins=rl.delay_bins,
            delay_floor=rl.delay_bin_floor,
            battery_bins=rl.battery_bins,
        )

    def delay_bin(self, delay: float) -> int:
        return int(np.searchsorted(self.delay_edges, delay, side="right"))

    def battery_bin(self, fraction: float) -> int:
        clamped = min(max(fraction, 0.0), 1.0)
        return min(int(clamped * self.battery_bins), self.battery_bins - 1)

    def key(self, state: np.ndarray) -> tuple:
        """Discretize a base-layout vector [type, J+ delays, J batteries]."""
        expected = 1 + self.num_units + self.num_uavs
        if len(state) != expected:
            raise ValueError(f"expected base-layout state of width {expected}, got {len(state)}")
        type_idx = int(round(state[0] * (self.num_types - 1))) if self.num_types > 1 else 0
        delays = tuple(self.delay_bin(d) for d in state[1 : 1 + self.num_units])
        batteries = tuple(
            self.battery_bin(b) for b in state[1 + self.num_units : 1 + self.num_units + self.num_uavs]
        )
        return (type_idx, *delays, *batteries)


def q_update(
    table: dict, key: tuple, action: int, reward: float, next_key: tuple, num_actions: int,
    alpha: float, gamma: float, terminal: bool = False,
) -> float:
    """One temporal-difference step; returns the updated Q(key, action)."""
    row = table.get(key)
    if row is None:
        row = np.zeros(num_actions, dtype=np.float64)
        table[key] = row
    bootstrap = 0.0
    if not terminal:
        next_row = table.get(next_key)
        bootstrap = float(next_row.max()) if next_row is not None else 0.0
    row[action] += alpha * (reward + gamma * bootstrap - row[action])
    return float(row[action])


class QlAgent:
    """One UAV's tabular learner.

    Always encodes the base state layout: the discretized key space is what
    the table indexes, and transfer-delay features would square it for no
    coverage gain at this fleet size.
    """

    wants_transitions = True
    state_layout = "paper10"

    def __init__(self, grid: DiscretizationGrid, rl: RlConfig, rng: np.random.Generator):
        self.grid = grid
        self.num_actions = grid.num_units
        self.alpha = rl.learning_rate_tabular
        self.gamma = rl.discount
        self.rng = rng
        self.epsilon = 0.0
        self.table: dict[tuple, np.ndarray] = {}

    def q_values(self, key: tuple) -> np.ndarray:
        row = self.table.get(key)
        return row if row is not None else np.zeros(self.num_actions, dtype=np.float64)

    def select(self, snap: NetworkSnapshot) -> int:
        key = self.grid.key(encode_state(snap, self.state_layout))
        return epsilon_greedy(self.q_values(key), self.epsilon, self.rng)

    def ingest(self, t: Transition) -> None:
        q_update(
            self.table,
            self.grid.key(t.state),
            t.action,
            t.reward,
            self.grid.key(t.next_state),
            self.num_actions,
            self.alpha,
            self.gamma,
            terminal=t.terminal,
        )


def dump_qtable(agents: list[QlAgent], path: str, metadata: dict | None = None) -> None:
    """Write all agents' tables as sorted text: one state key and its Q-row per line."""
    lines = [QTABLE_MAGIC]
    for k, v in sorted((metadata or {}).items()):
        lines.append(f"meta {k}={v}")
    lines.append(f"agents {len(agents)}")
    for i, agent in enumerate(agents):
        lines.append(f"agent {i} actions {agent.num_actions} states {len(agent.table)}")
        for key in sorted(agent.table):
            key_txt = ",".join(str(x) for x in key)
            q_txt = " ".join(format(x, ".17g") for x in agent.table[key])
            lines.append(f"{key_txt} | {q_txt}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_qtable(path: str) -> tuple[list[dict], dict]:
    """Read a table dump; returns (per-agent dicts, metadata)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != QTABLE_MAGIC:
        raise ValueError(f"not a q-table checkpoint: {path}")
    meta: dict = {}
    i = 1
    while i < len(lines) and lines[i].startswith("meta "):
        k, v = lines[i][5:].split("=", 1)
        meta[k] = v
        i += 1
    if i >= len(lines) or not lines[i].startswith("agents "):
        raise ValueError(f"malformed q-table checkpoint: {path}")
    num_agents = int(lines[i].split()[1])
    i += 1
    tables: list[dict] = []
    for _ in range(num_agents):
        header = lines[i].split()
        if header[0] != "agent":
            raise ValueError(f"malformed q-table checkpoint: {path}")
        num_actions, num_states = int(header[3]), int(header[5])
        i += 1
        table: dict = {}
        for _ in range(num_states):
            key_txt, q_txt = lines[i].split(" | ")
            key = tuple(int(x) for x in key_txt.split(","))
            row = np.array([float(x) for x in q_txt.split()], dtype=np.float64)
            if row.size != num_actions:
                raise ValueError(f"malformed q-table row in {path}")
            table[key] = row
            i += 1
        tables.append(table)
    return tables, meta
