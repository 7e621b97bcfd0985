"""Stateful code sandboxes for the analytics tools.

Two interchangeable backends sit behind the same session interface: a
subprocess runner that shells out to a real interpreter (python3, Rscript,
optionally julia), and a deterministic stub interpreter that the test suite
uses so nothing depends on what happens to be installed.

Neither backend is a security boundary; isolation here means state
isolation between sessions, not protection from hostile code.
"""

from __future__ import annotations

import re
import struct
import subprocess
import threading
import uuid
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional

DEFAULT_TIMEOUT = 120.0

_MEDIA_TYPES = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".svg": "image/svg+xml",
}
_IMAGE_GLOBS = ("*.png", "*.jpg", "*.jpeg", "*.svg")


class SandboxError(Exception):
    pass


@dataclass(frozen=True)
class ImageBlob:
    name: str
    media_type: str
    data: bytes

    def __post_init__(self):
        if not self.data:
            raise ValueError("image blob must carry bytes")


@dataclass(frozen=True)
class ExecOutcome:
    ok: bool
    stdout: str = ""
    stderr: str = ""
    images: tuple[ImageBlob, ...] = ()
    error: Optional[str] = None

    def __post_init__(self):
        if self.ok and self.error is not None:
            raise ValueError("successful outcomes carry no error")
        if not self.ok and not self.error:
            raise ValueError("failed outcomes must explain themselves")


def media_type_for(name: str) -> str:
    return _MEDIA_TYPES.get(Path(name).suffix.lower(), "application/octet-stream")


def _tiny_png() -> bytes:
    """A valid 1x1 transparent PNG, identical on every call."""
    def chunk(tag: bytes, data: bytes) -> bytes:
        return (
            struct.pack(">I", len(data)) + tag + data
            + struct.pack(">I", zlib.crc32(tag + data))
        )

    ihdr = struct.pack(">IIBBBBB", 1, 1, 8, 6, 0, 0, 0)
    idat = zlib.compress(b"\x00\x00\x00\x00\x00")
    return b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"IDAT", idat) + chunk(b"IEND", b"")


STUB_PNG = _tiny_png()

_ASSIGN_RE = re.compile(r"^([A-Za-z_]\w*)\s*=(?!=)\s*(.+)$")
_PRINT_RE = re.compile(r"^print\((.*)\)$")
_FIGURE_RE = re.compile(r"^save_figure\((.*)\)$")

_STUB_BUILTINS = {
    "abs": abs, "dict": dict, "enumerate": enumerate, "float": float,
    "int": int, "len": len, "list": list, "max": max, "min": min,
    "range": range, "round": round, "sorted": sorted, "str": str,
    "sum": sum, "zip": zip,
}


class StubRunner:
    """Line-oriented toy interpreter: assignments, print, save_figure.

    State is a plain namespace dict that persists across calls, which is
    all the statefulness contract asks for. ``save_figure("f.png")`` emits
    a constant one-pixel image so figure plumbing can be exercised without
    a plotting stack.
    """

    def __init__(self):
        self._env: dict = {}

    def _eval(self, expression: str):
        return eval(  # noqa: S307 - deliberately tiny, test-only interpreter
            expression,
            {"__builtins__": {}, **_STUB_BUILTINS},
            self._env,
        )

    def run(self, code: str) -> ExecOutcome:
        out_lines: list[str] = []
        images: list[ImageBlob] = []
        for line in code.splitlines():
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                figure = _FIGURE_RE.match(stripped)
                if figure:
                    name = self._eval(figure.group(1))
                    if not isinstance(name, str) or not name:
                        raise ValueError("save_figure expects a file name")
                    images.append(ImageBlob(name, media_type_for(name), STUB_PNG))
                    continue
                printed = _PRINT_RE.match(stripped)
                if printed:
                    inner = printed.group(1).strip()
                    if inner:
                        values = self._eval(f"({inner},)")
                        out_lines.append(" ".join(str(v) for v in values))
                    else:
                        out_lines.append("")
                    continue
                assign = _ASSIGN_RE.match(stripped)
                if assign:
                    self._env[assign.group(1)] = self._eval(assign.group(2))
                    continue
                self._eval(stripped)
            except Exception as exc:
                message = f"{type(exc).__name__}: {exc}"
                return ExecOutcome(
                    ok=False,
                    stdout="\n".join(out_lines),
                    stderr=message,
                    images=tuple(images),
                    error=message,
                )
        stdout = "\n".join(out_lines)
        if out_lines:
            stdout += "\n"
        return ExecOutcome(ok=True, stdout=stdout, images=tuple(images))


class SubprocessRunner:
    """Replays accumulated source through a real interpreter per call.

    Persistence trick: every call re-executes the full history plus the new
    snippet and returns only the output past what earlier runs produced.
    Failed snippets are not added to the history. Deterministic code is
    assumed; code that prints wall-clock time will confuse the slicing.
    """

    def __init__(self, argv: list, workdir, timeout: float = DEFAULT_TIMEOUT):
        self.argv = list(argv)
        self.workdir = Path(workdir)
        self.timeout = timeout
        self._history: list[str] = []
        self._stdout_seen = 0
        self._stderr_seen = 0

    def _image_snapshot(self) -> set:
        if not self.workdir.exists():
            return set()
        found = set()
        for pattern in _IMAGE_GLOBS:
            found.update(p.name for p in self.workdir.glob(pattern))
        return found

    def _new_images(self, before: set) -> tuple[ImageBlob, ...]:
        blobs = []
        for name in sorted(self._image_snapshot() - before):
            path = self.workdir / name
            data = path.read_bytes()
            if data:
                blobs.append(ImageBlob(name, media_type_for(name), data))
        return tuple(blobs)

    def run(self, code: str) -> ExecOutcome:
        self.workdir.mkdir(parents=True, exist_ok=True)
        program = "\n".join([*self._history, code])
        before = self._image_snapshot()
        try:
            proc = subprocess.run(
                [*self.argv, program],
                cwd=self.workdir,
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except FileNotFoundError:
            return ExecOutcome(
                ok=False,
                error=f"runtime unavailable: {self.argv[0]} not found",
            )
        except subprocess.TimeoutExpired:
            return ExecOutcome(
                ok=False,
                error=f"execution timed out after {self.timeout:g} s",
            )

        stdout_new = proc.stdout[self._stdout_seen:]
        stderr_new = proc.stderr[self._stderr_seen:]
        images = self._new_images(before)
        if proc.returncode != 0:
            return ExecOutcome(
                ok=False,
                stdout=stdout_new,
                stderr=stderr_new,
                images=images,
                error=stderr_new.strip() or f"exit status {proc.returncode}",
            )
        self._history.append(code)
        self._stdout_seen = len(proc.stdout)
        self._stderr_seen = len(proc.stderr)
        return ExecOutcome(ok=True, stdout=stdout_new, stderr=stderr_new, images=images)


class SandboxSession:
    """One stateful interpreter bound to one specialist task.

    Calls are serialized: the contract wants strict in-session ordering
    while distinct sessions may run concurrently.
    """

    def __init__(self, runtime: str, runner, session_id: Optional[str] = None):
        self.runtime = runtime
        self.session_id = session_id or uuid.uuid4().hex
        self._runner = runner
        self._lock = threading.Lock()

    def exec(self, code: str) -> ExecOutcome:
        with self._lock:
            return self._runner.run(code)


class Sandbox:
    """Factory for per-task sessions over the configured runtimes."""

    def __init__(self, backends: Mapping[str, Callable[[], object]]):
        self._backends = dict(backends)

    @property
    def runtimes(self) -> tuple[str, ...]:
        return tuple(sorted(self._backends))

    def open(self, runtime: str) -> SandboxSession:
        if runtime not in self._backends:
            raise SandboxError(f"runtime unavailable: {runtime!r}")
        return SandboxSession(runtime, self._backends[runtime]())


def stub_backends(runtimes: tuple = ("python", "r")) -> dict:
    return {runtime: StubRunner for runtime in runtimes}


def subprocess_backends(
    workdir,
    timeout: float = DEFAULT_TIMEOUT,
    include_julia: bool = False,
) -> dict:
    commands = {
        "python": ["python3", "-c"],
        "r": ["Rscript", "-e"],
    }
    if include_julia:
        commands["julia"] = ["julia", "-e"]
    return {
        runtime: (lambda argv=argv: SubprocessRunner(argv, workdir, timeout))
        for runtime, argv in commands.items()
    }
