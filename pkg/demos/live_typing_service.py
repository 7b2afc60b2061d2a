"""Run the live typing service and drive it over its own wire protocols.

Three clients connect to the TCP port, each announcing a role with its
first four bytes:

  "EEGW..."  a data client that streams binary frames,
  "CMDS"     a subscriber receiving binary command messages,
  "EVTS"     a subscriber receiving the JSON event feed.

The same session is also reachable for browsers through the HTTP bridge
(GET /events as server-sent events, POST /frames).  This demo starts the
service in-process, types "HI" through a raw socket, and prints what the
two subscriber channels observed.
"""

import json
import socket
import time

import numpy as np

from neurotype.server import (TypingServer, TypingSession, decode_command,
                              encode_frame, stub_classifier)

server = TypingServer(TypingSession(stub_classifier), port=0, http_port=0)
server.start()
host, port = server.address
print(f"TCP service on {host}:{port}, "
      f"HTTP bridge on port {server.http_address[1]}\n")

events = socket.create_connection((host, port))
events.sendall(b"EVTS")
commands = socket.create_connection((host, port))
commands.sendall(b"CMDS")
time.sleep(0.2)  # let the subscriptions register

# "HI": H = Left,Confirm,Right,Confirm,Up,Confirm; I ends Right,Confirm
data_client = socket.create_connection((host, port))
for intent in (0, 4, 2, 4, 1, 4,    # H
               0, 4, 2, 4, 2, 4):   # I
    frame = encode_frame(np.full((64, 8), float(intent), dtype=np.float32))
    for _ in range(3):               # three consistent windows per command
        data_client.sendall(frame)

# read the event feed until the word is complete
feed = events.makefile("rb")
while True:
    event = json.loads(feed.readline())
    if event["command"] is not None:
        print(f"event: command={event['command']:<8} typed={event['typed']!r}")
    if event["typed"] == "HI":
        break

# the command channel carried the same emissions as binary messages
commands.settimeout(2)
print()
for _ in range(6):
    blob = b""
    while len(blob) < 14:
        blob += commands.recv(14 - len(blob))
    command, seq = decode_command(blob)
    print(f"command message {seq}: {command.name}")

for sock in (events, commands, data_client):
    sock.close()
server.stop()
print("\ndone — the same flow works against `neurotype serve --stub`")
