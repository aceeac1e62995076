"""JSONL helpers. Input files are opened read-only and never rewritten;
outputs are flushed batch by batch so partial runs leave whole records."""
from __future__ import annotations

import json
import sys


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if line:
                yield line_no, json.loads(line)


def read_unique(path, key):
    """Read records, erroring on a duplicate value of `key`."""
    seen = set()
    records = []
    for line_no, rec in read_jsonl(path):
        value = rec.get(key)
        if value is None:
            raise ValueError(f"{path}:{line_no}: missing {key!r}")
        if value in seen:
            raise ValueError(f"{path}:{line_no}: duplicate {key} {value!r}")
        seen.add(value)
        records.append(rec)
    return records


class BatchWriter:
    def __init__(self, path):
        self.path = path
        self._f = open(path, "w", encoding="utf-8")
        self.count = 0

    def write_batch(self, records):
        for rec in records:
            self._f.write(json.dumps(rec, ensure_ascii=False) + "\n")
            self.count += 1
        self._f.flush()

    def close(self):
        self._f.close()


def warn(message):
    print(f"warning: {message}", file=sys.stderr)


def fail(message, code=2):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)
