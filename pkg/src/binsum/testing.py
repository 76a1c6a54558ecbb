"""Deterministic stand-ins for offline runs and tests.

The mock transport answers any chat-completion payload with text derived
from a content hash, so whole-pipeline runs are reproducible without a
live endpoint. A request whose body contains :data:`FAIL_MARKER` fails
deterministically, which is how partial-failure behavior is exercised
end to end.
"""

from __future__ import annotations

import hashlib
import threading
import time

from .errors import GatewayError
from .gateway import COT_PHRASE
from .model import Arch, FunctionRecord, OptLevel, RepresentationKind

FAIL_MARKER = "MOCK_FAIL"

_WORDS = (
    "reads", "writes", "parses", "copies", "checks", "buffer", "input",
    "table", "stream", "record", "index", "state", "header", "field",
)


def _digest_words(seed: bytes, count: int) -> str:
    digest = hashlib.sha256(seed).digest()
    picked = [_WORDS[digest[i] % len(_WORDS)] for i in range(count)]
    return " ".join(picked)


class MockTransport:
    """Scriptable offline transport with concurrency observation.

    Responses are pure functions of the payload. ``max_concurrent`` records
    the highest number of overlapping ``send`` calls, which is how the
    gateway's dispatch bound is verified.
    """

    def __init__(self, latency: float = 0.0, include_usage: bool = True):
        self.latency = latency
        self.include_usage = include_usage
        self.calls: list[dict] = []
        self.max_concurrent = 0
        self._active = 0
        self._lock = threading.Lock()

    def send(self, payload: dict) -> dict:
        with self._lock:
            self.calls.append(payload)
            self._active += 1
            self.max_concurrent = max(self.max_concurrent, self._active)
        try:
            if self.latency:
                time.sleep(self.latency)
            return self._respond(payload)
        finally:
            with self._lock:
                self._active -= 1

    def _respond(self, payload: dict) -> dict:
        body = ""
        for message in payload.get("messages", []):
            if message.get("role") == "user":
                body = message.get("content", "")
        if FAIL_MARKER in body:
            raise GatewayError("scripted mock failure")
        seed = "\n".join(
            m.get("content", "") for m in payload.get("messages", [])
        ).encode("utf-8")
        if COT_PHRASE in body:
            text = "analyzed stepwise: " + _digest_words(seed, 6)
        else:
            text = _digest_words(seed, 5)
        out = {"choices": [{"message": {"content": text}}]}
        if self.include_usage:
            out["usage"] = {
                "prompt_tokens": sum(len(m.get("content", "").split()) for m in payload["messages"]),
                "completion_tokens": len(text.split()),
            }
        return out


def make_demo_records(count: int = 5, fail_indexes: tuple[int, ...] = ()) -> list[FunctionRecord]:
    """Small synthetic dataset with source and assembly representations."""
    comments = [
        "Parse one configuration line into a key and value.",
        "Flush the output buffer to the underlying stream.",
        "Compute a checksum over the record header.",
        "Advance the cursor past blank input lines.",
        "Release the lookup table and its entries.",
    ]
    records = []
    for i in range(count):
        name = f"demo_fn_{i}"
        source = (
            f"int {name}(int arg)\n{{\n    return arg + {i};\n}}\n"
        )
        assembly = f"0x{0x1000 + 16 * i:x}: lea eax, [rdi+{i}]\n0x{0x1003 + 16 * i:x}: ret"
        if i in fail_indexes:
            source += f"/* {FAIL_MARKER} */\n"
        records.append(
            FunctionRecord(
                id=f"demo:lib:{name}:{0x1000 + 16 * i:#x}",
                project="demo",
                binary_path="lib_demo.so",
                arch=Arch.X64,
                opt_level=OptLevel.O2,
                stripped=False,
                name=name,
                low_pc=0x1000 + 16 * i,
                high_pc=0x1000 + 16 * i + 8,
                comment=comments[i % len(comments)],
                reps={
                    RepresentationKind.SOURCE: source,
                    RepresentationKind.ASSEMBLY: assembly,
                },
            )
        )
    return records
