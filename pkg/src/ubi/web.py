"""Browser transport: static assets plus a WebSocket session channel.

The endpoint ``/ubi`` upgrades to a WebSocket; each text message is one
protocol frame in the length-prefix-free grammar (wire.encode_message).
Every other path serves files from the configured assets directory.

The WebSocket layer implements the RFC 6455 subset browsers use: text
messages with client masking, fragmentation, ping/pong, and close.
"""

from __future__ import annotations

import base64
import hashlib
import http.server
import pathlib
import struct

from .wire import (
    DEFAULT_TIMEOUT,
    ServerSession,
    SessionTimeout,
    WireError,
    decode_message,
    encode_message,
)

ACCEPT_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT, OP_TEXT, OP_BINARY, OP_CLOSE, OP_PING, OP_PONG = 0, 1, 2, 8, 9, 10

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class WebSocketError(Exception):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + ACCEPT_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def encode_ws(payload: bytes, opcode: int = OP_TEXT, fin: bool = True,
              mask: bytes | None = None) -> bytes:
    head = bytearray([(0x80 if fin else 0) | opcode])
    mask_bit = 0x80 if mask is not None else 0
    n = len(payload)
    if n < 126:
        head.append(mask_bit | n)
    elif n < 1 << 16:
        head.append(mask_bit | 126)
        head.extend(struct.pack(">H", n))
    else:
        head.append(mask_bit | 127)
        head.extend(struct.pack(">Q", n))
    if mask is not None:
        if len(mask) != 4:
            raise ValueError("masking key must be 4 bytes")
        head.extend(mask)
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return bytes(head) + payload


def _split_ws(data: bytes) -> tuple[bool, int, bytes, int] | None:
    """One raw frame from the buffer front, or None while incomplete."""
    if len(data) < 2:
        return None
    fin = bool(data[0] & 0x80)
    if data[0] & 0x70:
        raise WebSocketError("reserved bits set")
    opcode = data[0] & 0x0F
    masked = bool(data[1] & 0x80)
    length = data[1] & 0x7F
    offset = 2
    if length == 126:
        if len(data) < 4:
            return None
        (length,) = struct.unpack(">H", data[2:4])
        offset = 4
    elif length == 127:
        if len(data) < 10:
            return None
        (length,) = struct.unpack(">Q", data[2:10])
        offset = 10
    if masked:
        if len(data) < offset + 4:
            return None
        mask = data[offset:offset + 4]
        offset += 4
    if len(data) < offset + length:
        return None
    payload = data[offset:offset + length]
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return fin, opcode, payload, offset + length


class WsParser:
    """Reassembles messages, fragments included; client frames only."""

    def __init__(self, require_mask: bool = True):
        self.require_mask = require_mask
        self._buffer = bytearray()
        self._parts: list[bytes] = []
        self._opcode: int | None = None

    def feed(self, data: bytes) -> list[tuple[int, bytes]]:
        self._buffer.extend(data)
        messages = []
        while True:
            if self.require_mask and len(self._buffer) >= 2 \
                    and not self._buffer[1] & 0x80:
                raise WebSocketError("client frames must be masked")
            split = _split_ws(bytes(self._buffer))
            if split is None:
                return messages
            fin, opcode, payload, consumed = split
            del self._buffer[:consumed]
            if opcode in (OP_CLOSE, OP_PING, OP_PONG):
                if not fin:
                    raise WebSocketError("fragmented control frame")
                messages.append((opcode, payload))
                continue
            if opcode == OP_CONT:
                if self._opcode is None:
                    raise WebSocketError("continuation without a start")
            else:
                if self._opcode is not None:
                    raise WebSocketError("interleaved message start")
                self._opcode = opcode
            self._parts.append(payload)
            if fin:
                messages.append((self._opcode, b"".join(self._parts)))
                self._parts, self._opcode = [], None


class UbiRequestHandler(http.server.BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args) -> None:  # tests want quiet servers
        pass

    def do_GET(self) -> None:
        if self.path == "/ubi" or self.path.startswith("/ubi?"):
            self._upgrade()
            return
        self._static()

    # -- WebSocket side ------------------------------------------------------

    def _upgrade(self) -> None:
        key = self.headers.get("Sec-WebSocket-Key")
        upgrade = (self.headers.get("Upgrade") or "").lower()
        if upgrade != "websocket" or not key:
            self.send_error(400, "WebSocket upgrade required")
            return
        self.send_response(101, "Switching Protocols")
        self.send_header("Upgrade", "websocket")
        self.send_header("Connection", "Upgrade")
        self.send_header("Sec-WebSocket-Accept", accept_key(key))
        self.end_headers()
        self.close_connection = True
        try:
            self._session_loop()
        except (WireError, WebSocketError, OSError):
            pass

    def _send_text(self, text: str) -> None:
        self.connection.sendall(encode_ws(text.encode("utf-8")))

    def _session_loop(self) -> None:
        server = ServerSession(self.server.service_factory(),
                               forms=self.server.forms,
                               timeout=self.server.session_timeout,
                               sim_rate=self.server.sim_rate)
        parser = WsParser()
        self.connection.settimeout(self.server.poll)
        while not server.closed:
            try:
                data = self.connection.recv(65536)
            except TimeoutError:
                try:
                    for frame in server.on_tick():
                        self._send_text(encode_message(frame))
                except SessionTimeout:
                    self.connection.sendall(encode_ws(b"", OP_CLOSE))
                    return
                continue
            if not data:
                return
            for opcode, payload in parser.feed(data):
                if opcode == OP_CLOSE:
                    self.connection.sendall(encode_ws(payload, OP_CLOSE))
                    return
                if opcode == OP_PING:
                    self.connection.sendall(encode_ws(payload, OP_PONG))
                    continue
                if opcode != OP_TEXT:
                    continue
                frame = decode_message(payload.decode("utf-8"))
                for reply in server.on_frame(frame):
                    self._send_text(encode_message(reply))

    # -- static assets ---------------------------------------------------------

    def _static(self) -> None:
        root = self.server.assets_dir
        if root is None:
            self.send_error(404, "no assets directory configured")
            return
        name = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (root / name).resolve()
        if not str(target).startswith(str(root.resolve())) \
                or not target.is_file():
            self.send_error(404)
            return
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", _CONTENT_TYPES.get(
            target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class WebServer(http.server.ThreadingHTTPServer):
    """Serves the browser engine's assets and its session channel."""

    daemon_threads = True

    def __init__(self, service_factory, host: str = "127.0.0.1",
                 port: int = 8000, assets_dir=None, forms=None,
                 session_timeout: float = DEFAULT_TIMEOUT, poll: float = 0.5,
                 sim_rate: float = 1.0):
        self.service_factory = service_factory
        self.assets_dir = pathlib.Path(assets_dir) if assets_dir else None
        self.forms = dict(forms or {})
        self.session_timeout = session_timeout
        self.poll = poll
        self.sim_rate = sim_rate
        super().__init__((host, port), UbiRequestHandler)
