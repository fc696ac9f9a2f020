"""Framed session transport between services and remote engines.

Frame layout: a 4-byte big-endian body length, one ASCII header line
``UBI/1.0 <TYPE> <session-id>``, a blank line, then the UTF-8 body. The
protocol cores (ClientSession, ServerSession) are sans-IO: they consume
decoded frames and return frames to send, so the same logic drives TCP
sockets, the in-process loopback, and the browser channel.

Handshake: the engine opens with HELLO (body: ``engine=<type>`` plus
optional ``form=`` and ``detail=`` lines); the service answers WELCOME
whose body is the flattened customization form the engine should apply.
A ``stop`` response or BYE ends the session.
"""

from __future__ import annotations

import socketserver
import struct
import time
import uuid
from dataclasses import dataclass, field

from .acts import ActKind, UpstreamResponse
from .codec import parse_downstream, serialize_downstream, parse_upstream, \
    serialize_upstream
from .engine import Session
from .forms import CustomizationForm, EMPTY_FORM, flatten, parent_chain, \
    parse_form, serialize_form
from .renderers import actionable_index, render_html, render_text
from .services.base import Service, ServiceUpdate

PROTOCOL = "UBI/1.0"
FRAME_TYPES = ("HELLO", "WELCOME", "PRESENT", "REMOVE", "ACTION", "PING",
               "BYE")
ENGINE_TYPES = ("text", "html", "web")

DEFAULT_BODY_LIMIT = 1 << 20
DEFAULT_PORT = 9000
DEFAULT_TIMEOUT = 300.0
_MAGIC = (PROTOCOL + " ").encode("ascii")
_MAX_HEADER = 256


class WireError(Exception):
    pass


class BadMagic(WireError):
    """The bytes are not a well-formed frame of this protocol."""


class TruncatedFrame(WireError):
    """The buffer ends before the frame does."""


class OversizeFrame(WireError):
    pass


class TrailingData(WireError):
    pass


class ProtocolViolation(WireError):
    pass


class SessionTimeout(WireError):
    pass


@dataclass(frozen=True)
class Frame:
    type: str
    session_id: str
    body: str = ""


def _check_token(token: str, what: str) -> None:
    if not token or any(c.isspace() for c in token) or not token.isascii():
        raise ValueError(f"{what} must be a non-empty ASCII token: {token!r}")


def encode_frame(frame: Frame, limit: int = DEFAULT_BODY_LIMIT) -> bytes:
    if frame.type not in FRAME_TYPES:
        raise ValueError(f"unknown frame type {frame.type!r}")
    _check_token(frame.session_id, "session id")
    body = frame.body.encode("utf-8")
    if len(body) > limit:
        raise OversizeFrame(f"{len(body)} byte body exceeds {limit}")
    header = f"{PROTOCOL} {frame.type} {frame.session_id}\n\n".encode("ascii")
    return struct.pack(">I", len(body)) + header + body


def split_frame(data: bytes,
                limit: int = DEFAULT_BODY_LIMIT) -> tuple[Frame, bytes]:
    """Decode the first frame; returns it with the unconsumed remainder."""
    if len(data) < 4:
        raise TruncatedFrame("no length prefix yet")
    (length,) = struct.unpack(">I", data[:4])
    if length > limit:
        raise OversizeFrame(f"{length} byte body exceeds {limit}")
    rest = data[4:]
    probe = rest[:len(_MAGIC)]
    if probe != _MAGIC[:len(probe)]:
        raise BadMagic(f"expected {PROTOCOL} tag")
    newline = rest.find(b"\n")
    if newline == -1:
        if len(rest) > _MAX_HEADER:
            raise BadMagic("unterminated header")
        raise TruncatedFrame("header incomplete")
    parts = rest[:newline].decode("ascii").split(" ")
    if len(parts) != 3:
        raise BadMagic("header needs tag, type, and session id")
    _, frame_type, session_id = parts
    if frame_type not in FRAME_TYPES:
        raise BadMagic(f"unknown frame type {frame_type!r}")
    if not session_id:
        raise BadMagic("empty session id")
    if len(rest) < newline + 2:
        raise TruncatedFrame("blank line incomplete")
    if rest[newline + 1:newline + 2] != b"\n":
        raise BadMagic("missing blank line after header")
    start = newline + 2
    if len(rest) < start + length:
        raise TruncatedFrame("body incomplete")
    try:
        body = rest[start:start + length].decode("utf-8")
    except UnicodeDecodeError:
        raise BadMagic("body is not UTF-8") from None
    return Frame(frame_type, session_id, body), bytes(rest[start + length:])


def decode_frame(data: bytes, limit: int = DEFAULT_BODY_LIMIT) -> Frame:
    frame, rest = split_frame(data, limit)
    if rest:
        raise TrailingData(f"{len(rest)} bytes after the frame")
    return frame


def encode_message(frame: Frame) -> str:
    """Frame as one text message: the grammar minus the length prefix.

    Used on channels that preserve message boundaries (the browser
    WebSocket), where a byte count would be redundant.
    """
    if frame.type not in FRAME_TYPES:
        raise ValueError(f"unknown frame type {frame.type!r}")
    _check_token(frame.session_id, "session id")
    return f"{PROTOCOL} {frame.type} {frame.session_id}\n\n{frame.body}"


def decode_message(text: str) -> Frame:
    header, sep, body = text.partition("\n\n")
    if not sep:
        raise BadMagic("missing blank line after header")
    parts = header.split(" ")
    if len(parts) != 3 or parts[0] != PROTOCOL:
        raise BadMagic(f"expected a {PROTOCOL} header line")
    _, frame_type, session_id = parts
    if frame_type not in FRAME_TYPES:
        raise BadMagic(f"unknown frame type {frame_type!r}")
    if not session_id or not session_id.isascii() \
            or any(c.isspace() for c in session_id):
        raise BadMagic("malformed session id")
    return Frame(frame_type, session_id, body)


class FrameReader:
    """Incremental decoder for byte-stream transports."""

    def __init__(self, limit: int = DEFAULT_BODY_LIMIT):
        self.limit = limit
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[Frame]:
        self._buffer.extend(data)
        frames = []
        while True:
            try:
                frame, rest = split_frame(bytes(self._buffer), self.limit)
            except TruncatedFrame:
                return frames
            self._buffer = bytearray(rest)
            frames.append(frame)


# -- engine descriptor -------------------------------------------------------

_DESCRIPTOR_KEYS = ("engine", "form", "detail")


def format_descriptor(engine: str, form: str | None = None,
                      detail: str | None = None) -> str:
    if engine not in ENGINE_TYPES:
        raise ValueError(f"engine must be one of {ENGINE_TYPES}")
    lines = [f"engine={engine}"]
    if form is not None:
        lines.append(f"form={form}")
    if detail is not None:
        lines.append(f"detail={detail}")
    return "".join(line + "\n" for line in lines)


def parse_descriptor(body: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for raw in body.splitlines():
        line = raw.strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or key not in _DESCRIPTOR_KEYS or key in fields:
            raise ProtocolViolation(f"bad descriptor line {raw!r}")
        fields[key] = value
    if fields.get("engine") not in ENGINE_TYPES:
        raise ProtocolViolation("descriptor must name a known engine type")
    return fields


# -- transcripts ---------------------------------------------------------------

@dataclass(frozen=True)
class TranscriptEntry:
    direction: str  # "up" engine->service, "down" service->engine
    frame: Frame
    at: float


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, direction: str, frame: Frame, at: float) -> None:
        self.entries.append(TranscriptEntry(direction, frame, at))

    def dump(self) -> str:
        """Timestamp-free rendering used for determinism comparisons."""
        lines = []
        for n, entry in enumerate(self.entries):
            frame = entry.frame
            lines.append(f"{n:04d} {entry.direction:>4} {frame.type} "
                         f"{len(frame.body)}B")
            for line in frame.body.splitlines():
                lines.append("     | " + line)
        return "".join(line + "\n" for line in lines)


def _subtree_ids(node) -> set[str]:
    ids = {node.id}
    for alt in getattr(node, "alternatives", ()):
        ids.add(alt.id)
    for child in getattr(node, "children", ()):
        ids |= _subtree_ids(child)
    return ids


def validate_transcript(transcript: Transcript) -> list[str]:
    """Session-rule violations found in a recorded transcript."""
    problems = []
    entries = transcript.entries
    if not entries:
        return ["empty transcript"]
    if entries[0].direction != "up" or entries[0].frame.type != "HELLO":
        problems.append("first frame must be an engine HELLO")
    if len(entries) > 1 and (entries[1].direction != "down"
                             or entries[1].frame.type != "WELCOME"):
        problems.append("second frame must be the service WELCOME")

    session_ids = {e.frame.session_id for e in entries}
    if len(session_ids) > 1:
        problems.append(f"mixed session ids {sorted(session_ids)}")

    live: dict[str, set[str]] = {}
    for n, entry in enumerate(entries):
        frame = entry.frame
        if frame.type == "PRESENT":
            try:
                tree = parse_downstream(frame.body)
            except Exception as err:
                problems.append(f"frame {n}: PRESENT body rejected: {err}")
                continue
            live[tree.id] = _subtree_ids(tree)
        elif frame.type == "REMOVE":
            for root in frame.body.split():
                live.pop(root, None)
        elif frame.type == "ACTION":
            try:
                responses = parse_upstream(frame.body)
            except Exception as err:
                problems.append(f"frame {n}: ACTION body rejected: {err}")
                continue
            known = set().union(*live.values()) if live else set()
            for response in responses:
                if response.kind in (ActKind.START, ActKind.STOP):
                    continue  # session control carries the session id
                if response.act_id not in known:
                    problems.append(
                        f"frame {n}: action on unknown id "
                        f"{response.act_id!r}")
    return problems


# -- protocol cores ------------------------------------------------------------

def update_frames(session_id: str, update: ServiceUpdate) -> list[Frame]:
    frames = []
    if update.remove:
        body = "".join(act_id + "\n" for act_id in update.remove)
        frames.append(Frame("REMOVE", session_id, body))
    for document in update.present:
        frames.append(Frame("PRESENT", session_id,
                            serialize_downstream(document)))
    return frames


class ServerSession:
    """Service side of one session; sans-IO."""

    def __init__(self, service: Service,
                 forms: dict[str, CustomizationForm] | None = None,
                 clock=time.monotonic, timeout: float = DEFAULT_TIMEOUT,
                 sim_rate: float = 1.0):
        self.service = service
        self.forms = dict(forms or {})
        self.clock = clock
        self.timeout = timeout
        self.sim_rate = sim_rate  # simulated seconds per wall second
        self.session_id: str | None = None
        self.engine: dict[str, str] = {}
        self.closed = False
        self._last_activity: float | None = None
        self._last_advance: float | None = None
        self._sim_debt = 0.0

    def on_frame(self, frame: Frame) -> list[Frame]:
        now = self.clock()
        self._last_activity = now
        if self.closed:
            raise ProtocolViolation("session already closed")
        if self.session_id is None:
            if frame.type != "HELLO":
                raise ProtocolViolation(
                    f"first frame must be HELLO, not {frame.type}")
            self.session_id = frame.session_id
            self.engine = parse_descriptor(frame.body)
            self.service.configure(self.engine)
            self._last_advance = now
            welcome = Frame("WELCOME", self.session_id, self._form_body())
            return [welcome] + update_frames(self.session_id,
                                             self.service.attach())
        if frame.session_id != self.session_id:
            raise ProtocolViolation(
                f"frame for {frame.session_id!r} on session "
                f"{self.session_id!r}")
        if frame.type == "HELLO":
            raise ProtocolViolation("handshake already completed")
        if frame.type in ("WELCOME", "PRESENT", "REMOVE"):
            raise ProtocolViolation(f"{frame.type} flows service to engine")
        if frame.type == "PING":
            return [Frame("PING", self.session_id)]
        if frame.type == "BYE":
            self.closed = True
            return []

        frames: list[Frame] = []
        for response in parse_upstream(frame.body):
            if response.kind is ActKind.STOP:
                self.closed = True
                frames.append(Frame("BYE", self.session_id))
                break
            if response.kind is ActKind.START:
                continue
            frames.extend(update_frames(self.session_id,
                                        self.service.handle(response)))
        return frames

    def on_tick(self, now: float | None = None) -> list[Frame]:
        """Idle-timeout check plus service clock advance."""
        now = self.clock() if now is None else now
        if self.closed or self.session_id is None:
            return []
        if self._last_activity is not None and self.timeout is not None \
                and now - self._last_activity > self.timeout:
            self.closed = True
            raise SessionTimeout(
                f"idle for more than {self.timeout} seconds")
        self._sim_debt += (now - self._last_advance) * self.sim_rate
        self._last_advance = now
        elapsed = int(self._sim_debt)
        if elapsed <= 0:
            return []
        self._sim_debt -= elapsed
        update = self.service.advance(elapsed)
        return update_frames(self.session_id, update)

    def _form_body(self) -> str:
        requested = self.engine.get("form")
        if not requested or requested not in self.forms:
            return ""
        chain = parent_chain(self.forms[requested], self.forms)
        return serialize_form(flatten(chain))


class ClientSession:
    """Engine side of one session; owns the live-act state machine."""

    def __init__(self, engine: str = "text", form_id: str | None = None,
                 detail: str | None = None, session_id: str | None = None,
                 clock=time.monotonic):
        if engine not in ENGINE_TYPES:
            raise ValueError(f"engine must be one of {ENGINE_TYPES}")
        self.engine = engine
        self.form_id = form_id
        self.detail = detail
        self.session_id = session_id or uuid.uuid4().hex
        self.session = Session(self.session_id, clock=clock)
        self.form = EMPTY_FORM
        self.state = "new"

    def hello(self) -> Frame:
        if self.state != "new":
            raise ProtocolViolation("HELLO already sent")
        self.state = "hello-sent"
        return Frame("HELLO", self.session_id,
                     format_descriptor(self.engine, self.form_id,
                                       self.detail))

    def on_frame(self, frame: Frame) -> None:
        if frame.session_id != self.session_id:
            raise ProtocolViolation(
                f"frame for {frame.session_id!r} on session "
                f"{self.session_id!r}")
        if self.state == "closed":
            if frame.type == "BYE":  # goodbye acknowledgments may cross
                return
            raise ProtocolViolation("session already closed")
        if frame.type == "WELCOME":
            if self.state != "hello-sent":
                raise ProtocolViolation("WELCOME before HELLO")
            self.form = parse_form(frame.body) if frame.body else EMPTY_FORM
            self.state = "open"
            return
        if self.state != "open":
            raise ProtocolViolation(f"{frame.type} before WELCOME")
        if frame.type == "PRESENT":
            self.session.apply_document(parse_downstream(frame.body))
        elif frame.type == "REMOVE":
            ids = frame.body.split()
            if ids:
                self.session.service_remove(ids)
        elif frame.type == "PING":
            pass
        elif frame.type == "BYE":
            self.state = "closed"
        else:
            raise ProtocolViolation(f"{frame.type} flows engine to service")

    def action(self, component_id: str, payload: str | None = None) -> Frame:
        if self.state != "open":
            raise ProtocolViolation("session is not open")
        responses, _ = self.session.handle_action(component_id, payload)
        return Frame("ACTION", self.session_id, serialize_upstream(responses))

    def stop(self) -> Frame:
        """End the session from the engine side with a stop response."""
        if self.state != "open":
            raise ProtocolViolation("session is not open")
        response, _ = self.session.end()
        self.state = "closed"
        return Frame("ACTION", self.session_id,
                     serialize_upstream([response]))

    def bye(self) -> Frame:
        self.state = "closed"
        return Frame("BYE", self.session_id)

    def render(self):
        if self.engine == "html":
            return render_html(self.session, self.form)
        return render_text(self.session, self.form)

    def actionables(self) -> dict[int, str]:
        return actionable_index(self.session, self.engine, self.form)


class LoopbackChannel:
    """Client and server joined in process; every frame crosses as bytes."""

    def __init__(self, service: Service, engine: str = "text",
                 form_id: str | None = None, detail: str | None = None,
                 forms: dict[str, CustomizationForm] | None = None,
                 session_id: str | None = None):
        self._now = 0.0
        tick = lambda: self._now
        self.client = ClientSession(engine, form_id, detail,
                                    session_id=session_id, clock=tick)
        self.server = ServerSession(service, forms=forms, clock=tick,
                                    timeout=None)
        self.transcript = Transcript()

    def open(self) -> None:
        self._send_up(self.client.hello())

    def act(self, component_id: str, payload: str | None = None) -> None:
        self._send_up(self.client.action(component_id, payload))

    def act_ordinal(self, ordinal: int, payload: str | None = None) -> None:
        index = self.client.actionables()
        if ordinal not in index:
            raise LookupError(f"no actionable number {ordinal}")
        self.act(index[ordinal], payload)

    def advance(self, seconds: float) -> None:
        """Move the shared loopback clock; pushes reach the client."""
        self._now += seconds
        self.client.session.tick()
        for frame in self.server.on_tick(self._now):
            self._deliver_down(frame)

    def stop(self) -> None:
        self._send_up(self.client.stop())

    def close(self) -> None:
        self._send_up(self.client.bye())

    def _send_up(self, frame: Frame) -> None:
        frame = decode_frame(encode_frame(frame))
        self.transcript.record("up", frame, self._now)
        for reply in self.server.on_frame(frame):
            self._deliver_down(reply)

    def _deliver_down(self, frame: Frame) -> None:
        frame = decode_frame(encode_frame(frame))
        self.transcript.record("down", frame, self._now)
        self.client.on_frame(frame)


# -- TCP transport -------------------------------------------------------------

def run_session(connection, service: Service,
                forms: dict[str, CustomizationForm] | None = None,
                clock=time.monotonic, timeout: float = DEFAULT_TIMEOUT,
                poll: float = 0.5, sim_rate: float = 1.0) -> Transcript:
    """Serve one socket connection until BYE, stop, timeout, or EOF."""
    server = ServerSession(service, forms=forms, clock=clock, timeout=timeout,
                           sim_rate=sim_rate)
    transcript = Transcript()
    reader = FrameReader()
    connection.settimeout(poll)

    def send(frame: Frame) -> None:
        transcript.record("down", frame, clock())
        connection.sendall(encode_frame(frame))

    while not server.closed:
        try:
            data = connection.recv(65536)
        except TimeoutError:
            try:
                for frame in server.on_tick():
                    send(frame)
            except SessionTimeout:
                break
            continue
        if not data:
            break
        for frame in reader.feed(data):
            transcript.record("up", frame, clock())
            for reply in server.on_frame(frame):
                send(reply)
    return transcript


class _SessionHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        run_session(self.request, self.server.service_factory(),
                    forms=self.server.forms, timeout=self.server.timeout,
                    sim_rate=self.server.sim_rate)


class WireServer(socketserver.ThreadingTCPServer):
    """One service instance per connection, each on its own thread."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, service_factory, host: str = "127.0.0.1",
                 port: int = DEFAULT_PORT,
                 forms: dict[str, CustomizationForm] | None = None,
                 timeout: float = DEFAULT_TIMEOUT, sim_rate: float = 1.0):
        self.service_factory = service_factory
        self.forms = dict(forms or {})
        self.timeout = timeout
        self.sim_rate = sim_rate
        super().__init__((host, port), _SessionHandler)
