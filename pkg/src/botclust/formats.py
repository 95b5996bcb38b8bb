"""Line-delimited text formats shared by the library and the CLI.

message file     one JSON object per line:
                 {"node_id": int, "address_id": str, "campaign_id": str, "timestamp": int}
truth file       {"node_id": int, "botnet": int}
sample file      {"sweep": int, "labels": [int, ...]}   (cluster label per node)
prediction file  {"address_id": str, "campaign_id": str, "probability": float}
                 grouped by address (sorted), probability descending within an address
ROC file         CSV, header "fpr,tpr,threshold", one point per line
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataIntegrityError
from .evidence import MessageRecord
from .gibbs import ChainSample

MESSAGE_FIELDS = ("node_id", "address_id", "campaign_id", "timestamp")


def _dump(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "), ensure_ascii=True)


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataIntegrityError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None


def write_messages(path, messages: Iterable[MessageRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in messages:
            fh.write(_dump({k: getattr(m, k) for k in MESSAGE_FIELDS}) + "\n")


def read_messages(path) -> list[MessageRecord]:
    out = []
    for lineno, rec in _lines(path):
        missing = [k for k in MESSAGE_FIELDS if k not in rec]
        if missing:
            raise DataIntegrityError(f"{path}:{lineno}: missing fields {missing}")
        try:
            out.append(MessageRecord(int(rec["node_id"]), str(rec["address_id"]), str(rec["campaign_id"]), int(rec["timestamp"])))
        except (TypeError, ValueError) as exc:
            raise DataIntegrityError(f"{path}:{lineno}: {exc}") from None
    return out


def write_truth(path, botnets: Sequence[int]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, b in enumerate(botnets):
            fh.write(_dump({"node_id": i, "botnet": int(b)}) + "\n")


def read_truth(path) -> list[int]:
    recs = sorted((int(r["node_id"]), int(r["botnet"])) for _, r in _lines(path))
    return [b for _, b in recs]


def write_samples(path, samples: Iterable[ChainSample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(_dump({"sweep": s.sweep_index, "labels": list(s.labels)}) + "\n")


def read_samples(path) -> list[ChainSample]:
    out = [ChainSample(tuple(int(x) for x in r["labels"]), int(r["sweep"])) for _, r in _lines(path)]
    if not out:
        raise DataIntegrityError(f"{path}: no samples")
    return out


def write_predictions(path, predictions: Mapping[str, Mapping[str, float]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in sorted(predictions):
            for s, p in sorted(predictions[a].items(), key=lambda kv: (-kv[1], kv[0])):
                fh.write(_dump({"address_id": a, "campaign_id": s, "probability": p}) + "\n")


def read_predictions(path) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    for _, r in _lines(path):
        out.setdefault(str(r["address_id"]), {})[str(r["campaign_id"])] = float(r["probability"])
    return out


def write_roc(path, points) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("fpr,tpr,threshold\n")
        for fpr, tpr, th in points:
            fh.write(f"{fpr!r},{tpr!r},{th!r}\n")


def read_roc(path) -> list[tuple[float, float, float]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "fpr,tpr,threshold":
        raise DataIntegrityError(f"{path}: missing ROC header")
    return [tuple(float(x) for x in line.split(",")) for line in lines[1:] if line]
