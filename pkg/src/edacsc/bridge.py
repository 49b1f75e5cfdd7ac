"""Bridge to external corrector processes, plus a deterministic mock.

Wire protocol, version 1: the corrector is a child process speaking
line-delimited JSON over stdin/stdout, UTF-8, LF line endings.  Each side
sends ``{"protocol":"edacsc-corrector","version":1}`` as its first line.
After the handshake the parent writes request lines
``{"id":"...","text":"..."}`` and the child answers one response line of
the same shape per request, in any order; ids tie responses back to
requests.  Corrections are substitution-only, so a response text must have
exactly the request text's character count.
"""

import hashlib
import json
import queue
import random
import shlex
import subprocess
import sys
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .errors import (
    CorrectorTimeoutError,
    ProtocolError,
    TransportError,
    ValidationError,
)

PROTOCOL_NAME = "edacsc-corrector"
PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 60.0

# Emitted lines are canonical: compact separators, raw (non-escaped) UTF-8.
_COMPACT = {"separators": (",", ":"), "ensure_ascii": False}


def handshake_line() -> str:
    return json.dumps({"protocol": PROTOCOL_NAME, "version": PROTOCOL_VERSION}, **_COMPACT)


def request_line(id_: str, text: str) -> str:
    return json.dumps({"id": id_, "text": text}, **_COMPACT)


def _parse_message(line: str, what: str) -> dict:
    try:
        obj = json.loads(line)
    except ValueError as exc:
        raise ProtocolError(f"invalid {what} line: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolError(f"invalid {what} line: not a JSON object")
    return obj


def check_handshake(line: str) -> None:
    obj = _parse_message(line, "handshake")
    if obj.get("protocol") != PROTOCOL_NAME:
        raise ProtocolError(f"peer speaks {obj.get('protocol')!r}, expected {PROTOCOL_NAME!r}")
    if obj.get("version") != PROTOCOL_VERSION:
        raise ProtocolError(
            f"peer speaks protocol version {obj.get('version')!r}, "
            f"expected {PROTOCOL_VERSION}"
        )


def parse_exchange(line: str, what: str) -> tuple[str, str]:
    obj = _parse_message(line, what)
    id_ = obj.get("id")
    text = obj.get("text")
    if not isinstance(id_, str) or not isinstance(text, str):
        raise ProtocolError(f"invalid {what} line: 'id' and 'text' must be strings")
    return id_, text


class MockCorrector:
    """Deterministic fake corrector for tests and calibration.

    Applies a fixed single-character substitution map, then flips each
    remaining character found in ``overcorrection_pool`` with probability
    ``overcorrection_rate`` to a different pool character.  Randomness is
    derived from (seed, sentence text), so a given sentence is corrected
    identically regardless of batch order or process restarts.
    """

    def __init__(
        self,
        substitutions: Optional[dict] = None,
        overcorrection_rate: float = 0.0,
        seed: int = 0,
        overcorrection_pool: str = "",
    ):
        substitutions = dict(substitutions or {})
        for k, v in substitutions.items():
            if not (isinstance(k, str) and len(k) == 1 and isinstance(v, str) and len(v) == 1):
                raise ValidationError(
                    f"substitution {k!r} -> {v!r}: keys and values must be single characters"
                )
        if not 0.0 <= overcorrection_rate <= 1.0:
            raise ValidationError("overcorrection_rate must be within [0, 1]")
        self.substitutions = substitutions
        self.overcorrection_rate = float(overcorrection_rate)
        self.seed = int(seed)
        # Deduplicate but keep order so rng.choice stays reproducible.
        self.overcorrection_pool = "".join(dict.fromkeys(overcorrection_pool))

    @classmethod
    def from_spec(cls, spec: dict) -> "MockCorrector":
        known = {"substitutions", "overcorrection_rate", "seed", "overcorrection_pool"}
        unknown = set(spec) - known
        if unknown:
            raise ValidationError(f"unknown mock spec key(s): {', '.join(sorted(unknown))}")
        return cls(**spec)

    @classmethod
    def load_spec(cls, path: str) -> "MockCorrector":
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        if not isinstance(spec, dict):
            raise ValidationError(f"{path}: mock spec must be a JSON object")
        return cls.from_spec(spec)

    def _rng(self, text: str) -> random.Random:
        h = hashlib.blake2b(digest_size=8)
        h.update(self.seed.to_bytes(8, "big", signed=True))
        h.update(text.encode("utf-8"))
        return random.Random(int.from_bytes(h.digest(), "big"))

    def correct(self, text: str) -> str:
        rng = self._rng(text) if self.overcorrection_rate > 0.0 else None
        out = []
        for ch in text:
            if ch in self.substitutions:
                out.append(self.substitutions[ch])
            elif (
                rng is not None
                and ch in self.overcorrection_pool
                and rng.random() < self.overcorrection_rate
            ):
                candidates = [c for c in self.overcorrection_pool if c != ch]
                out.append(rng.choice(candidates) if candidates else ("x" if ch != "x" else "y"))
            else:
                out.append(ch)
        return "".join(out)

    def correct_batch(self, texts: Sequence[str]) -> list[str]:
        return [self.correct(t) for t in texts]


def serve_stdio(corrector, stdin=None, stdout=None) -> int:
    """Run the child side of the protocol until EOF; returns an exit code.

    Sends the handshake first, requires the peer's handshake as the first
    incoming line, then answers each request.  Protocol violations print
    one line to stderr and return 4.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    stdout.write(handshake_line() + "\n")
    stdout.flush()
    lines = iter(stdin)
    try:
        first = next(lines, None)
        if first is None:
            return 0
        check_handshake(first.rstrip("\n"))
        for raw in lines:
            line = raw.rstrip("\n")
            if not line:
                raise ProtocolError("empty request line")
            id_, text = parse_exchange(line, "request")
            stdout.write(request_line(id_, corrector.correct(text)) + "\n")
            stdout.flush()
    except ProtocolError as exc:
        print(f"edacsc mock-corrector: {exc}", file=sys.stderr)
        return 4
    return 0


_EOF = object()


class SubprocessCorrector:
    """Parent side of the corrector protocol.

    Usable as a context manager; the child is started lazily on first use.
    A background thread drains the child's stdout so a child that answers
    out of order or in bursts can never deadlock against our writes.
    """

    def __init__(self, cmd: Union[str, Sequence[str]], timeout: float = DEFAULT_TIMEOUT):
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        if not self.cmd:
            raise ValidationError("corrector command is empty")
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None
        self._lines: "queue.Queue" = queue.Queue()
        self._reader: Optional[threading.Thread] = None

    def __enter__(self) -> "SubprocessCorrector":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def start(self) -> None:
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot start corrector {self.cmd[0]!r}: {exc}") from None
        self._reader = threading.Thread(target=self._drain, daemon=True)
        self._reader.start()
        self._send(handshake_line())
        check_handshake(self._next_line(time.monotonic() + self.timeout))

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if proc.stdin is not None:
                proc.stdin.close()
            proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def _drain(self) -> None:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        try:
            for line in proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(_EOF)

    def _send(self, line: str) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise TransportError(f"corrector closed its stdin: {exc}") from None

    def _next_line(self, deadline: float) -> str:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise CorrectorTimeoutError(f"corrector did not answer within {self.timeout:g}s")
        try:
            line = self._lines.get(timeout=remaining)
        except queue.Empty:
            raise CorrectorTimeoutError(
                f"corrector did not answer within {self.timeout:g}s"
            ) from None
        if line is _EOF:
            code = self._proc.poll() if self._proc is not None else None
            raise TransportError(f"corrector closed its output (exit code {code})")
        return line.rstrip("\n")

    def request_batch(self, items: Sequence[tuple[str, str]]) -> list[str]:
        """Send (id, text) requests; return the texts in request order.

        Enforces the protocol: every response id must match an outstanding
        request (duplicate ids are matched in arrival order), the response
        multiset must equal the request multiset, and each response must
        preserve its request's character count.
        """
        if self._proc is None:
            self.start()
        if not items:
            return []
        pending: dict[str, deque] = {}
        for slot, (id_, text) in enumerate(items):
            pending.setdefault(id_, deque()).append((slot, len(text)))
            self._send(request_line(id_, text))
        out: list[Optional[str]] = [None] * len(items)
        deadline = time.monotonic() + self.timeout
        for _ in range(len(items)):
            id_, text = parse_exchange(self._next_line(deadline), "response")
            slots = pending.get(id_)
            if not slots:
                raise ProtocolError(f"response for unknown or already answered id {id_!r}")
            slot, want = slots.popleft()
            if len(text) != want:
                raise ProtocolError(
                    f"response {id_!r} has {len(text)} characters, request had {want}"
                )
            out[slot] = text
        return out  # type: ignore[return-value]

    def correct_batch(self, texts: Sequence[str]) -> list[str]:
        return self.request_batch([(f"q{i}", t) for i, t in enumerate(texts)])


@dataclass(frozen=True)
class CicIteration:
    """Edit bookkeeping for one correction pass."""

    proposed: tuple[int, ...]
    accepted: tuple[int, ...]
    deferred: tuple[int, ...]


@dataclass(frozen=True)
class CicResult:
    text: str
    iterations: tuple[CicIteration, ...]
    converged: bool
    cycle_detected: bool

    @property
    def stopped_at_max(self) -> bool:
        return not self.converged


def _accept_leftmost(positions: Sequence[int], window: int) -> tuple[list[int], list[int]]:
    """Greedy left-to-right acceptance: defer edits within ``window`` of the
    last accepted one."""
    accepted: list[int] = []
    deferred: list[int] = []
    for p in positions:
        if accepted and p - accepted[-1] <= window:
            deferred.append(p)
        else:
            accepted.append(p)
    return accepted, deferred


ON_NONCONVERGENCE = ("accept_last", "revert_cycle")


def cic_apply(
    corrector,
    text: str,
    max_iters: int = 3,
    adjacency_window: int = 1,
    on_nonconvergence: str = "accept_last",
) -> CicResult:
    """Constrained iterative correction of one sentence.

    Each pass asks the corrector for a full correction of the current text
    but only applies a conservative subset: among proposed edits within
    ``adjacency_window`` of an already accepted edit (left to right), only
    the leftmost is accepted and the rest wait for a later pass.  Iteration
    stops when a pass proposes nothing (converged) or after ``max_iters``
    passes.  If the text revisits an earlier state it will never converge;
    ``accept_last`` returns the final text anyway, ``revert_cycle`` falls
    back to the state that first repeated.

    With ``max_iters=1`` and ``adjacency_window=0`` every proposed edit is
    accepted in the single pass, which is exactly one plain
    ``correct_batch`` call.
    """
    if max_iters < 1:
        raise ValidationError("max_iters must be >= 1")
    if adjacency_window < 0:
        raise ValidationError("adjacency_window must be >= 0")
    if on_nonconvergence not in ON_NONCONVERGENCE:
        raise ValidationError(
            f"unknown on_nonconvergence policy {on_nonconvergence!r} "
            f"(expected one of {ON_NONCONVERGENCE})"
        )
    current = text
    seen = {text}
    iterations: list[CicIteration] = []
    converged = False
    cycle_detected = False
    cycle_entry: Optional[str] = None
    for _ in range(max_iters):
        candidate = corrector.correct_batch([current])[0]
        if len(candidate) != len(current):
            raise ProtocolError(
                f"corrector changed the character count ({len(current)} -> {len(candidate)})"
            )
        proposed = [j for j, (a, b) in enumerate(zip(current, candidate)) if a != b]
        if not proposed:
            iterations.append(CicIteration((), (), ()))
            converged = True
            break
        accepted, deferred = _accept_leftmost(proposed, adjacency_window)
        chars = list(current)
        for p in accepted:
            chars[p] = candidate[p]
        current = "".join(chars)
        iterations.append(
            CicIteration(tuple(proposed), tuple(accepted), tuple(deferred))
        )
        if current in seen and not cycle_detected:
            cycle_detected = True
            cycle_entry = current
        seen.add(current)
    final = current
    if not converged and cycle_detected and on_nonconvergence == "revert_cycle":
        final = cycle_entry if cycle_entry is not None else text
    return CicResult(
        text=final,
        iterations=tuple(iterations),
        converged=converged,
        cycle_detected=cycle_detected,
    )
