"""Type a word by replaying binary EEG frames through the typing engine.

Every half-second the server receives one frame of 64 samples.  Each
frame collapses to one decision (the mode of its per-sample intents); a
command fires only after three consecutive identical decisions; six
commands select one of 27 characters from the 3x3x3 character tree:

    level 0: ABCDEFGHI | JKLMNOPQR | STUVWXYZ<space>
    level 1: e.g. GHI -> G | H | I
    level 2: confirm the single character

So each character costs 18 half-second windows = 9 seconds, bounding the
typing rate at 60/9 = 6.67 characters per minute.
"""

import numpy as np

from neurotype.server import encode_frame, simulate, stub_classifier
from neurotype.typing_engine import Command, CommandMap

WORD = "HELLO WORLD"


def command_sequence(char):
    """The 6 commands that type one character of the 27-character tree."""
    flat = "ABCDEFGHIJKLMNOPQRSTUVWXYZ "
    index = flat.index(char)
    path = (index // 9, index % 9 // 3, index % 3)
    select = {0: Command.LEFT, 1: Command.UP, 2: Command.RIGHT}
    commands = []
    for block in path:
        commands += [select[block], Command.CONFIRM]
    return commands


# Build the frame stream: for each command, three windows whose stub
# classification yields the matching intent (the stub classifier reads the
# intent from the first channel of every sample).
cmap = CommandMap()
frames = []
for char in WORD:
    for command in command_sequence(char):
        intent = cmap.inverse(command)
        samples = np.full((64, 8), float(intent), dtype=np.float32)
        frames += [encode_frame(samples)] * 3

print(f"replaying {len(frames)} frames "
      f"({len(frames) / 2:.0f} s of simulated stream time)\n")


def show(event):
    if event["command"] is not None:
        print(f"t={event['stream_time']:6.1f}s  command={event['command']:<8}"
              f"level={event['level']:<8}typed={event['typed']!r}")


session = simulate(frames, stub_classifier, on_event=show)
print(f"\nfinal typed text: {session.state.typed!r}")
assert session.state.typed == WORD
