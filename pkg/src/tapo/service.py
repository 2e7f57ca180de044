"""HTTP session service: one scenario execution per session, advanced by the
client answering pending guard and oracle questions.

Each session runs its scenario on a worker thread; the thread blocks on a
one-slot answer queue whenever an interactive question comes up. Sessions are
independent; within a session, execution is strictly sequential and at most
one question is outstanding.
"""
from __future__ import annotations

import json
import queue
import secrets
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .guards import ChannelClosedError
from .scenario import (EXIT_ABORTED, RunResult, ScenarioRun, parse_scenario)
from .syntax import assertion_str

ANSWER_TIMEOUT = 120.0


class SessionAborted(Exception):
    pass


class _SessionChannel:
    """Blocking bridge between the worker thread and the HTTP handlers."""

    def __init__(self, session: "Session"):
        self.session = session
        self.answers: queue.Queue = queue.Queue(maxsize=1)

    def _ask(self, question: dict):
        with self.session.cond:
            self.session.pending = question
            self.session.cond.notify_all()
        answer = self.answers.get()
        if answer is SessionAborted:
            raise ChannelClosedError("session aborted")
        return answer

    def ask_guard(self, atom_text: str) -> str:
        return self._ask({"kind": "guard", "atom": atom_text})

    def ask_oracle(self, question: dict) -> dict:
        return self._ask(question)


@dataclass
class Session:
    id: str
    scenario_name: str = ""
    status: str = "running"  # running | waiting | completed | failed | aborted
    pending: Optional[dict] = None
    result: Optional[RunResult] = None
    error: str = ""
    cond: threading.Condition = field(default_factory=threading.Condition)
    channel: Optional[_SessionChannel] = None
    runner: Optional[ScenarioRun] = None
    thread: Optional[threading.Thread] = None

    def snapshot(self) -> dict:
        with self.cond:
            abox: dict[str, list[str]] = {}
            trace = []
            answers = []
            if self.runner is not None:
                for ctx in sorted(self.runner.states):
                    abox[ctx] = sorted(assertion_str(a)
                                       for a in self.runner.states[ctx].abox)
                trace = [e.to_json() for e in self.runner.trace.events]
                answers = list(self.runner.trace.answers)
            out = {
                "id": self.id,
                "scenario": self.scenario_name,
                "status": self.status if self.pending is None else "waiting",
                "abox": abox,
                "trace": trace,
                "answers": answers,
                "pending": self.pending,
            }
            if self.result is not None:
                out["exit_status"] = self.result.exit_status
                out["failures"] = self.result.failures
            if self.error:
                out["error"] = self.error
            return out


class SessionStore:
    def __init__(self, fuel: Optional[int] = None):
        self.fuel = fuel
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()

    def create(self, scenario_text: str) -> Session:
        scenario = parse_scenario(scenario_text)
        session = Session(id=secrets.token_hex(8), scenario_name=scenario.name)
        session.channel = _SessionChannel(session)
        session.runner = ScenarioRun(scenario, self.fuel, answerer=session.channel)

        def work():
            try:
                result = session.runner.run()
                with session.cond:
                    session.result = result
                    session.status = ("aborted" if result.exit_status == EXIT_ABORTED
                                      else "completed")
                    session.pending = None
                    session.cond.notify_all()
            except Exception as err:  # surface worker crashes to the client
                with session.cond:
                    session.error = str(err)
                    session.status = "failed"
                    session.pending = None
                    session.cond.notify_all()

        session.thread = threading.Thread(target=work, daemon=True)
        with self.lock:
            self.sessions[session.id] = session
        session.thread.start()
        self._wait_for_progress(session)
        return session

    def get(self, session_id: str) -> Optional[Session]:
        with self.lock:
            return self.sessions.get(session_id)

    def answer(self, session: Session, payload) -> bool:
        with session.cond:
            if session.pending is None:
                return False
            session.pending = None
        session.channel.answers.put(payload)
        self._wait_for_progress(session)
        return True

    def delete(self, session_id: str) -> bool:
        with self.lock:
            session = self.sessions.pop(session_id, None)
        if session is None:
            return False
        with session.cond:
            session.status = "aborted"
            had_pending = session.pending is not None
            session.pending = None
        if had_pending:
            session.channel.answers.put(SessionAborted)
        return True

    @staticmethod
    def _wait_for_progress(session: Session, timeout: float = ANSWER_TIMEOUT) -> None:
        """Block until the worker surfaces a new question or finishes."""
        with session.cond:
            session.cond.wait_for(
                lambda: session.pending is not None
                or session.status in ("completed", "failed", "aborted"),
                timeout=timeout)


def make_handler(store: SessionStore):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send(self, code: int, payload=None) -> None:
            body = b"" if payload is None else json.dumps(payload).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods",
                             "GET, POST, DELETE, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()
            if body:
                self.wfile.write(body)

        def _read_json(self):
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b"{}"
            try:
                return json.loads(raw or b"{}")
            except json.JSONDecodeError:
                return None

        def _route(self):
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            return parts

        def do_OPTIONS(self):
            self._send(204)

        def do_POST(self):
            parts = self._route()
            if parts == ["sessions"]:
                body = self._read_json()
                if body is None or "scenario" not in body:
                    self._send(400, {"error": "body must carry a scenario field"})
                    return
                try:
                    session = store.create(body["scenario"])
                except Exception as err:
                    self._send(422, {"error": str(err)})
                    return
                self._send(201, session.snapshot())
                return
            if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "answer":
                session = store.get(parts[1])
                if session is None:
                    self._send(404, {"error": "session not found"})
                    return
                body = self._read_json()
                if body is None or "answer" not in body:
                    self._send(400, {"error": "body must carry an answer field"})
                    return
                if not store.answer(session, body["answer"]):
                    self._send(409, {"error": "no question is pending"})
                    return
                self._send(200, session.snapshot())
                return
            self._send(404, {"error": "no such endpoint"})

        def do_GET(self):
            parts = self._route()
            if len(parts) == 2 and parts[0] == "sessions":
                session = store.get(parts[1])
                if session is None:
                    self._send(404, {"error": "session not found"})
                    return
                self._send(200, session.snapshot())
                return
            if len(parts) == 3 and parts[0] == "sessions" and parts[2] == "pending":
                session = store.get(parts[1])
                if session is None:
                    self._send(404, {"error": "session not found"})
                    return
                with session.cond:
                    pending = session.pending
                self._send(200, {"pending": pending})
                return
            self._send(404, {"error": "no such endpoint"})

        def do_DELETE(self):
            parts = self._route()
            if len(parts) == 2 and parts[0] == "sessions":
                if store.delete(parts[1]):
                    self._send(204)
                else:
                    self._send(404, {"error": "session not found"})
                return
            self._send(404, {"error": "no such endpoint"})

    return Handler


def make_server(host: str, port: int, fuel: Optional[int] = None
                ) -> ThreadingHTTPServer:
    store = SessionStore(fuel)
    server = ThreadingHTTPServer((host, port), make_handler(store))
    server.store = store
    return server


def serve(bind: str, fuel: Optional[int] = None) -> None:
    """Run the session service until interrupted."""
    host, _, port = bind.rpartition(":")
    server = make_server(host or "127.0.0.1", int(port), fuel)
    print(f"session service listening on {server.server_address[0]}:"
          f"{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
