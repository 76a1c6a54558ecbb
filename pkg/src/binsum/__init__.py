"""binsum: benchmark toolkit for LLM binary code summarization.

Builds ground-truth datasets from C projects and their compiled ELF
binaries, drives chat-model summarization through synthesized and
task-selected prompts, and scores outputs with a semantic embedding
metric plus BLEU-1, METEOR, and ROUGE-L.
"""

from .model import (
    Arch,
    FunctionRecord,
    OptLevel,
    RepresentationKind,
    ScoreSet,
    decode_record,
    encode_record,
    read_records,
    write_records,
)

__version__ = "0.1.0"

__all__ = [
    "Arch",
    "FunctionRecord",
    "OptLevel",
    "RepresentationKind",
    "ScoreSet",
    "decode_record",
    "encode_record",
    "read_records",
    "write_records",
    "__version__",
]
