"""Live typing service: binary frame ingestion, decision aggregation and
event fan-out.

Wire formats
  frame   (client 1 -> server): "EEGW" ver u8=1, channels u16 LE,
          samples u16 LE (= 64), then samples x channels float32 LE,
          sample-major.
  command (server -> client 2): "CMDF" ver u8=1, command code u8, seq u64 LE.
  events  (server -> UI): newline-delimited JSON records carrying the full
          typing state.

TCP clients announce their role with the first 4 bytes: data clients just
start sending "EEGW" frames; "CMDS" subscribes to binary command
messages; "EVTS" subscribes to the JSON event feed.  An HTTP bridge
exposes the same session to browsers (SSE event feed + frame POSTs).
"""

from __future__ import annotations

import json
import queue
import socket
import socketserver
import struct
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .typing_engine import (WINDOW_SAMPLES, WINDOW_SECONDS, CharacterTree,
                            Command, CommandMap, DecisionAggregator,
                            TypingState, apply_command, window_decide)

FRAME_MAGIC = b"EEGW"
COMMAND_MAGIC = b"CMDF"
PROTOCOL_VERSION = 1
_HEADER = struct.Struct("<4sBHH")


class ProtocolError(ValueError):
    pass


def encode_frame(samples):
    """Pack a (64, channels) sample block into one wire frame."""
    samples = np.atleast_2d(np.asarray(samples, dtype="<f4"))
    n, k = samples.shape
    return _HEADER.pack(FRAME_MAGIC, PROTOCOL_VERSION, k, n) + samples.tobytes()


def decode_frame(blob):
    """Inverse of encode_frame; validates magic, version and sample count."""
    if len(blob) < _HEADER.size:
        raise ProtocolError("frame shorter than header")
    magic, version, k, n = _HEADER.unpack_from(blob)
    if magic != FRAME_MAGIC:
        raise ProtocolError("bad frame magic")
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported frame version {version}")
    if n != WINDOW_SAMPLES:
        raise ProtocolError(f"frame must carry {WINDOW_SAMPLES} samples, got {n}")
    expected = _HEADER.size + 4 * n * k
    if len(blob) != expected:
        raise ProtocolError(f"frame length {len(blob)} != expected {expected}")
    payload = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return payload.reshape(n, k).astype(np.float64)


def encode_command(command, seq):
    return COMMAND_MAGIC + struct.pack("<BBQ", PROTOCOL_VERSION, int(command), seq)


def decode_command(blob):
    if blob[:4] != COMMAND_MAGIC or len(blob) != 14:
        raise ProtocolError("bad command message")
    version, code, seq = struct.unpack_from("<BBQ", blob, 4)
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported command version {version}")
    return Command(code), seq


def stub_classifier(samples):
    """Maps each sample to the intent encoded in its first channel."""
    return np.clip(np.rint(samples[:, 0]), 0, 4).astype(int)


def model_classifier(model):
    return lambda samples: np.asarray(model.predict(samples))


def frames_for_intent(intent, n_windows, channels=14):
    """Synthetic frames whose stub classification yields the given intent."""
    samples = np.full((WINDOW_SAMPLES, channels), float(intent), dtype=np.float32)
    return [encode_frame(samples)] * n_windows


class TypingSession:
    """One ingest stream: classification -> window vote -> aggregation ->
    typing state machine.  Stream time advances half a second per frame."""

    def __init__(self, classifier, command_map=None):
        self.classifier = classifier
        self.cmap = command_map or CommandMap()
        self.tree = CharacterTree()
        self.aggregator = DecisionAggregator(self.cmap)
        self.state = TypingState()
        self.last_command = None
        self.seq = 0
        self.frames = 0
        self._lock = threading.Lock()

    @property
    def stream_time(self):
        return self.frames * WINDOW_SECONDS

    def state_event(self, decision=None, command=None):
        return {
            "kind": "state",
            "level": self.state.level_name,
            "blocks": self.tree.block_labels(self.state.path),
            "highlight": self.state.highlight,
            "typed": self.state.typed,
            "last_command": self.last_command.name.lower() if self.last_command else None,
            "command": command.name.lower() if command is not None else None,
            "decision": decision,
            "pending": len(self.aggregator.pending),
            "seq": self.seq,
            "stream_time": self.stream_time,
        }

    def feed_frame_bytes(self, blob):
        return self.feed_samples(decode_frame(blob))

    def feed_samples(self, samples):
        """Process one 64-sample window; returns the resulting events."""
        with self._lock:
            labels = np.asarray(self.classifier(samples)).reshape(-1)
            decision = window_decide(labels.tolist())
            command = self.aggregator.feed(decision)
            self.frames += 1
            events = []
            if command is not None:
                self.seq += 1
                self.last_command = command
                apply_command(self.state, command, self.tree)
            events.append(self.state_event(decision=decision, command=command))
            return events


class TypingServer:
    """TCP service plus optional HTTP/SSE bridge around one TypingSession."""

    def __init__(self, session, host="127.0.0.1", port=0, http_port=None):
        self.session = session
        self._subscribers = []      # (queue, kind) pairs; kind in {cmd, event}
        self._sub_lock = threading.Lock()
        self._tcp = _TcpServer((host, port), _TcpHandler)
        self._tcp.service = self
        self.address = self._tcp.server_address
        self._http = None
        if http_port is not None:
            self._http = ThreadingHTTPServer((host, http_port), _HttpHandler)
            self._http.service = self
            self.http_address = self._http.server_address
        self._threads = []

    # -- lifecycle ---------------------------------------------------------

    def start(self):
        for srv in filter(None, (self._tcp, self._http)):
            t = threading.Thread(target=srv.serve_forever, daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self):
        for srv in filter(None, (self._tcp, self._http)):
            srv.shutdown()
            srv.server_close()

    def serve_forever(self):
        self.start()
        try:
            while True:
                time.sleep(1)
        except KeyboardInterrupt:
            self.stop()

    # -- fan-out -----------------------------------------------------------

    def subscribe(self, kind):
        # bounded queue; publisher drops the oldest record when full so
        # that slow subscribers can never block ingest
        q = queue.Queue(maxsize=256)
        with self._sub_lock:
            self._subscribers.append((q, kind))
        return q

    def unsubscribe(self, q):
        with self._sub_lock:
            self._subscribers = [(s, k) for s, k in self._subscribers if s is not q]

    def _publish(self, events):
        with self._sub_lock:
            subs = list(self._subscribers)
        for event in events:
            for q, kind in subs:
                if kind == "event":
                    item = (json.dumps(event) + "\n").encode()
                elif kind == "cmd" and event.get("command") is not None:
                    item = encode_command(Command[event["command"].upper()],
                                          event["seq"])
                else:
                    continue
                try:
                    q.put_nowait(item)
                except queue.Full:
                    try:
                        q.get_nowait()
                    except queue.Empty:
                        pass
                    q.put_nowait(item)

    def ingest(self, frame_bytes):
        events = self.session.feed_frame_bytes(frame_bytes)
        self._publish(events)
        return events


class _TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def _read_exact(sock, n):
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


class _TcpHandler(socketserver.BaseRequestHandler):
    def handle(self):
        sock = self.request
        service = self.server.service
        role = _read_exact(sock, 4)
        if role is None:
            return
        if role == b"EVTS":
            self._stream(service.subscribe("event"), service)
        elif role == b"CMDS":
            self._stream(service.subscribe("cmd"), service)
        elif role == FRAME_MAGIC:
            self._ingest(sock, service, first_magic=role)
        else:
            sock.sendall(b'{"error": "unknown client role"}\n')

    def _ingest(self, sock, service, first_magic=b""):
        try:
            while True:
                rest = _read_exact(sock, _HEADER.size - len(first_magic))
                if rest is None:
                    return
                header = first_magic + rest
                first_magic = b""
                try:
                    magic, version, k, n = _HEADER.unpack(header)
                    if magic != FRAME_MAGIC:
                        raise ProtocolError("bad frame magic")
                    body = _read_exact(sock, 4 * n * k)
                    if body is None:
                        return
                    service.ingest(header + body)
                except ProtocolError as exc:
                    # connection-scoped: report and drop this client only
                    sock.sendall(json.dumps({"error": str(exc)}).encode() + b"\n")
                    return
        except ConnectionError:
            return

    def _stream(self, q, service):
        try:
            while True:
                item = q.get()
                self.request.sendall(item)
        except (ConnectionError, OSError):
            pass
        finally:
            service.unsubscribe(q)


class _HttpHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):
        pass

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        service = self.server.service
        if self.path != "/events":
            self.send_response(404)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        self.send_response(200)
        self._cors()
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.end_headers()
        q = service.subscribe("event")
        try:
            snapshot = json.dumps(service.session.state_event()).encode()
            self.wfile.write(b"data: " + snapshot + b"\n\n")
            self.wfile.flush()
            while True:
                item = q.get().rstrip(b"\n")
                self.wfile.write(b"data: " + item + b"\n\n")
                self.wfile.flush()
        except (ConnectionError, OSError, BrokenPipeError):
            pass
        finally:
            service.unsubscribe(q)

    def do_POST(self):
        service = self.server.service
        if self.path != "/frames":
            self.send_response(404)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        try:
            events = service.ingest(body)
            payload = json.dumps({"events": events}).encode()
            self.send_response(200)
        except ProtocolError as exc:
            payload = json.dumps({"error": str(exc)}).encode()
            self.send_response(400)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


def read_frames(path):
    """Split a file of concatenated frames into individual frame blobs."""
    with open(path, "rb") as fh:
        blob = fh.read()
    frames = []
    off = 0
    while off < len(blob):
        if len(blob) - off < _HEADER.size:
            raise ProtocolError("trailing bytes do not form a frame header")
        _, _, k, n = _HEADER.unpack_from(blob, off)
        size = _HEADER.size + 4 * n * k
        frames.append(blob[off:off + size])
        off += size
    return frames


def simulate(frames, classifier, command_map=None, speed=0.0, on_event=None):
    """Replay frames through a session with a simulated half-second clock.

    speed > 0 also sleeps wall-clock window/speed per frame; the stream
    clock is always simulated so results are deterministic.
    """
    session = TypingSession(classifier, command_map)
    for frame in frames:
        events = session.feed_frame_bytes(frame)
        if on_event:
            for event in events:
                on_event(event)
        if speed > 0:
            time.sleep(WINDOW_SECONDS / speed)
    return session
