"""Typing interface logic: decision windows, command aggregation and the
3-level, 27-character selection tree.

Per half-second window the server receives 64 per-sample intent labels,
collapses them to one decision by mode vote, and emits a command only
after three consecutive identical decisions; the pending run resets
after every emission and restarts whenever a differing decision arrives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

WINDOW_SAMPLES = 64
WINDOW_SECONDS = 0.5
CONSISTENT_RUN = 3


class Command(IntEnum):
    LEFT = 0
    UP = 1
    RIGHT = 2
    CANCEL = 3
    CONFIRM = 4


_COMMAND_NAMES = {"left": Command.LEFT, "up": Command.UP, "right": Command.RIGHT,
                  "cancel": Command.CANCEL, "confirm": Command.CONFIRM}


def window_decide(labels):
    """Mode of one decision window; ties break to the lowest label."""
    labels = list(labels)
    if len(labels) != WINDOW_SAMPLES:
        raise ValueError(f"decision window needs exactly {WINDOW_SAMPLES} labels, "
                         f"got {len(labels)}")
    counts = [0] * 5
    for lab in labels:
        if not 0 <= lab <= 4:
            raise ValueError(f"intent label {lab} outside 0..4")
        counts[int(lab)] += 1
    return max(range(5), key=lambda c: (counts[c], -c))


class CommandMap:
    """Bijective intent-label -> command mapping."""

    def __init__(self, mapping=None):
        mapping = mapping or {0: "left", 1: "up", 2: "right", 3: "cancel",
                              4: "confirm"}
        resolved = {}
        for label, cmd in mapping.items():
            label = int(label)
            if not 0 <= label <= 4:
                raise ValueError(f"intent label {label} outside 0..4")
            if isinstance(cmd, str):
                cmd = _COMMAND_NAMES[cmd.lower()]
            resolved[label] = Command(cmd)
        if len(resolved) != 5 or len(set(resolved.values())) != 5:
            raise ValueError("label->command map must be a bijection over 0..4")
        self._map = resolved

    def __call__(self, label):
        return self._map[int(label)]

    def inverse(self, command):
        for label, cmd in self._map.items():
            if cmd == command:
                return label
        raise KeyError(command)

    def to_dict(self):
        return {label: cmd.name.lower() for label, cmd in self._map.items()}


def label_to_command(label, cmap=None):
    return (cmap or CommandMap())(label)


class DecisionAggregator:
    """Pending-decision list implementing the 3-consecutive-consistent rule."""

    def __init__(self, cmap=None):
        self.cmap = cmap or CommandMap()
        self.pending = []

    def feed(self, decision):
        """Returns the emitted Command, or None."""
        decision = int(decision)
        if not 0 <= decision <= 4:
            raise ValueError(f"decision {decision} outside 0..4")
        if self.pending and self.pending[-1] != decision:
            self.pending = [decision]
        else:
            self.pending.append(decision)
        if len(self.pending) >= CONSISTENT_RUN:
            self.pending = []
            return self.cmap(decision)
        return None


def aggregate(state, decision):
    command = state.feed(decision)
    return state, command


# ---------------------------------------------------------------------------
# character tree and typing state machine


class CharacterTree:
    """3 top blocks x 3 sub blocks x 3 leaves covering A..Z plus space."""

    BLOCKS = ("ABCDEFGHI", "JKLMNOPQR", "STUVWXYZ ")

    def __init__(self):
        chars = "".join(self.BLOCKS)
        if len(chars) != 27 or len(set(chars)) != 27:
            raise ValueError("character tree must cover 27 distinct characters")

    def block_labels(self, path):
        """The three selectable block labels at the level reached via path."""
        if len(path) == 0:
            return list(self.BLOCKS)
        if len(path) == 1:
            block = self.BLOCKS[path[0]]
            return [block[0:3], block[3:6], block[6:9]]
        if len(path) == 2:
            block = self.BLOCKS[path[0]]
            sub = block[3 * path[1]:3 * path[1] + 3]
            return list(sub)
        raise ValueError("path deeper than the bottom level")

    def leaf(self, path):
        """Character addressed by a 3-element block path."""
        if len(path) != 3:
            raise ValueError("leaf path must have 3 selections")
        return self.BLOCKS[path[0]][3 * path[1] + path[2]]


LEVEL_NAMES = ("initial", "sub", "bottom")
HISTORY_DEPTH = 32

# direction index of each block position
_BLOCK_COMMANDS = {Command.LEFT: 0, Command.UP: 1, Command.RIGHT: 2}


@dataclass
class TypingState:
    level: int = 0                       # 0 initial, 1 sub, 2 bottom
    path: tuple = ()
    highlight: int | None = None
    typed: str = ""
    history: list = field(default_factory=list)

    @property
    def level_name(self):
        return LEVEL_NAMES[self.level]

    def snapshot(self):
        return (self.level, self.path, self.highlight, self.typed)

    def _restore(self, snap):
        self.level, self.path, self.highlight, self.typed = snap


def apply_command(state, command, tree=None):
    """Advance the typing state machine by one command (total function).

    Every non-Cancel command pushes an undo snapshot, so Cancel always
    reverts exactly the previous command, including no-ops.
    """
    tree = tree or CharacterTree()
    command = Command(command)
    if command == Command.CANCEL:
        if state.history:
            state._restore(state.history.pop())
        return state
    state.history.append(state.snapshot())
    if len(state.history) > HISTORY_DEPTH:
        state.history.pop(0)
    if command in _BLOCK_COMMANDS:
        state.highlight = _BLOCK_COMMANDS[command]
    elif command == Command.CONFIRM and state.highlight is not None:
        new_path = state.path + (state.highlight,)
        if state.level < 2:
            state.level += 1
            state.path = new_path
            state.highlight = None
        else:
            state.typed += tree.leaf(new_path)
            state.level = 0
            state.path = ()
            state.highlight = None
    return state
