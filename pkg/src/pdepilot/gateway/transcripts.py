"""On-disk transcript store: every request/response pair, replayable."""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path

from ..errors import ReplayMissError
from .types import AgentRequest, AgentResponse, AgentRole

_STEP_FILE = re.compile(r"step-(\d{4})-([a-z_]+)-(\d+)\.txt$")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


@dataclass(frozen=True)
class TranscriptEntry:
    step: int
    role: AgentRole
    attempt: int
    request_text: str
    response_text: str


class TranscriptStore:
    """One directory per run; request/response per step as flat text files."""

    def __init__(self, run_dir: Path):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self._step = self._next_step()

    def _next_step(self) -> int:
        highest = 0
        for p in self.run_dir.glob("step-*.txt"):
            m = _STEP_FILE.search(p.name)
            if m:
                highest = max(highest, int(m.group(1)))
        return highest + 1

    def record(self, request: AgentRequest, response: AgentResponse, attempt: int) -> None:
        stem = f"step-{self._step:04d}-{request.role.value}-{attempt}"
        _atomic_write(self.run_dir / f"{stem}.txt", request.prompt)
        _atomic_write(self.run_dir / f"{stem}.out.txt", response.text)
        self._step += 1

    def entries(self) -> list[TranscriptEntry]:
        out = []
        for p in sorted(self.run_dir.glob("step-*.txt")):
            m = _STEP_FILE.search(p.name)
            if not m:
                continue
            step, role, attempt = int(m.group(1)), m.group(2), int(m.group(3))
            reply = p.with_name(p.name[:-4] + ".out.txt")
            if not reply.exists():
                raise ReplayMissError(f"{p.name} has no recorded response")
            out.append(TranscriptEntry(
                step, AgentRole(role), attempt, p.read_text(), reply.read_text()
            ))
        return out

    def write_meta(self, meta: dict) -> None:
        _atomic_write(self.run_dir / "meta.json",
                      json.dumps({"created": time.time(), **meta}, indent=2, sort_keys=True))
