"""External SMT solver driver: one script per subprocess, wall-clock timeout by kill."""

from __future__ import annotations

import enum
import os
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass

ENV_VAR = "CICHECK_SOLVER"
_POLL_S = 0.02


class SolverConfigError(RuntimeError):
    pass


class SolverProtocolError(RuntimeError):
    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}: {raw[:500]!r}")
        self.raw = raw


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolverOutcome:
    status: Status
    wall_ms: float
    raw: str = ""
    reason: str = ""  # for UNKNOWN: "timeout", "cancelled" or "solver"


def resolve_solver(path: str | None = None) -> str:
    """Explicit path, else ``$CICHECK_SOLVER``, else ``z3`` on ``PATH``."""
    candidate = path or os.environ.get(ENV_VAR) or "z3"
    found = shutil.which(candidate)
    if not found:
        raise SolverConfigError(f"SMT solver executable {candidate!r} not found "
                                f"(use --solver or ${ENV_VAR})")
    return found


def parse_status(raw: str) -> Status:
    for token in raw.split():
        token = token.strip("()").lower()
        if token in ("sat", "unsat", "unknown"):
            return Status(token)
        if token == "error":
            break
    raise SolverProtocolError("no sat/unsat/unknown in solver output", raw)


def _kill(proc: subprocess.Popen):
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def solve_external(script: str, timeout_ms: int, solver: str | None = None,
                   cancel: threading.Event | None = None) -> SolverOutcome:
    """Run ``solver <script-file>`` and return the first status token.

    Expiry of ``timeout_ms`` or setting ``cancel`` kills the process and yields
    UNKNOWN.
    """
    exe = resolve_solver(solver)
    start = time.perf_counter()
    deadline = start + max(timeout_ms, 0) / 1000.0
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(script)
        path = fh.name
    try:
        # own process group, so wrapper scripts die together with their children
        proc = subprocess.Popen([exe, path], stdin=subprocess.DEVNULL, stdout=subprocess.PIPE,
                                stderr=subprocess.STDOUT, text=True, start_new_session=True)
        reason = ""
        while True:
            remaining = deadline - time.perf_counter()
            if remaining <= 0:
                reason = "timeout"
            elif cancel is not None and cancel.is_set():
                reason = "cancelled"
            if reason:
                _kill(proc)
                out, _ = proc.communicate()
                return SolverOutcome(Status.UNKNOWN, (time.perf_counter() - start) * 1000, out or "", reason)
            try:
                out, _ = proc.communicate(timeout=min(remaining, _POLL_S))
                break
            except subprocess.TimeoutExpired:
                continue
    finally:
        os.unlink(path)
    wall = (time.perf_counter() - start) * 1000
    status = parse_status(out)
    return SolverOutcome(status, wall, out, "solver" if status is Status.UNKNOWN else "")
