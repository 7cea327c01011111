"""Minimal JSON-RPC client for the tool server."""

from __future__ import annotations

import itertools
import json
import socket
import subprocess
import time
from typing import Sequence

from . import rpc
from .rpc import RpcError


class TransportError(RuntimeError):
    pass


class LoopbackTransport:
    """Talks to an in-process :class:`ToolServer` through encoded lines."""

    def __init__(self, server):
        self.server = server
        self._pending: list[str] = []

    def send(self, line: str):
        out = self.server.handle_line(line)
        if out is not None:
            self._pending.append(out)

    def receive(self) -> str:
        if not self._pending:
            raise TransportError("no response from loopback server")
        return self._pending.pop(0)

    def close(self):
        pass


class StdioTransport:
    """Spawns ``argv`` (e.g. ``swarm-tuner serve``) and speaks over its pipes."""

    def __init__(self, argv: Sequence[str], env=None, cwd=None):
        try:
            self.proc = subprocess.Popen(list(argv), stdin=subprocess.PIPE,
                                         stdout=subprocess.PIPE, env=env, cwd=cwd)
        except OSError as exc:
            raise TransportError(f"cannot start server {argv[0]!r}: {exc}") from None

    def send(self, line: str):
        try:
            self.proc.stdin.write(line.encode("utf-8") + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"server pipe closed: {exc}") from None

    def receive(self) -> str:
        raw = self.proc.stdout.readline()
        if not raw:
            raise TransportError(f"server exited (code {self.proc.poll()})")
        return raw.decode("utf-8")

    def close(self):
        if self.proc.stdin and not self.proc.stdin.closed:
            self.proc.stdin.close()
        try:
            self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


class TcpTransport:
    def __init__(self, host: str, port: int, retries: int = 3, backoff: float = 0.5,
                 timeout: float | None = None):
        last = None
        for attempt in range(retries):
            try:
                self.sock = socket.create_connection((host, port), timeout=5.0)
                self.sock.settimeout(timeout)
                self.file = self.sock.makefile("rwb")
                return
            except OSError as exc:
                last = exc
                time.sleep(backoff * (2 ** attempt))
        raise TransportError(f"cannot reach {host}:{port} after {retries} attempts: {last}")

    def send(self, line: str):
        try:
            self.file.write(line.encode("utf-8") + b"\n")
            self.file.flush()
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from None

    def receive(self) -> str:
        try:
            raw = self.file.readline()
        except OSError as exc:
            raise TransportError(f"receive failed: {exc}") from None
        if not raw:
            raise TransportError("connection closed by server")
        return raw.decode("utf-8")

    def close(self):
        try:
            self.file.close()
            self.sock.close()
        except OSError:
            pass


class ToolClient:
    """Sequential request/response client.

    ``RATE_LIMITED`` and ``BUSY`` answers are retried after waiting, up to
    ``max_wait`` seconds in total; other errors raise :class:`RpcError`.
    """

    def __init__(self, transport, max_wait: float = 300.0, sleep=time.sleep):
        self.transport = transport
        self.max_wait = max_wait
        self.sleep = sleep
        self._ids = itertools.count(1)

    def request(self, method: str, params=None):
        waited = 0.0
        while True:
            req_id = next(self._ids)
            self.transport.send(rpc.encode(rpc.request(method, params, req_id)))
            while True:
                try:
                    resp = json.loads(self.transport.receive())
                except ValueError as exc:
                    raise TransportError(f"malformed response: {exc}") from None
                if resp.get("id") == req_id:
                    break
            if "error" not in resp:
                return resp["result"]
            err = resp["error"]
            code = err.get("code")
            if code in (rpc.RATE_LIMITED, rpc.BUSY) and waited < self.max_wait:
                delay = 1.0
                if isinstance(err.get("data"), dict):
                    delay = float(err["data"].get("retry_after", delay))
                delay = min(max(delay, 0.05), self.max_wait - waited)
                self.sleep(delay)
                waited += delay
                continue
            raise RpcError(code, err.get("message", ""), err.get("data"))

    def initialize(self) -> dict:
        info = self.request("initialize", {"clientInfo": {"name": "swarm-tuner-agent"}})
        self.transport.send(rpc.encode(rpc.request("notifications/initialized")))
        return info

    def list_tools(self) -> list[dict]:
        return self.request("tools/list")["tools"]

    def call_tool(self, name: str, arguments: dict | None = None) -> dict:
        result = self.request("tools/call", {"name": name, "arguments": arguments or {}})
        return result["structuredContent"]

    def close(self):
        self.transport.close()
