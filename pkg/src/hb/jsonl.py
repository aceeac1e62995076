"""Streaming JSONL helpers used by every pipeline stage."""
from __future__ import annotations

import json

from .errors import SchemaError


def read_jsonl(path):
    """Yield (line_number, record) for each non-blank line of a JSONL file."""
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", path=path,
                                  line=line_no) from None
            if not isinstance(rec, dict):
                raise SchemaError("record is not a JSON object", path=path,
                                  line=line_no)
            yield line_no, rec


def write_jsonl(path, records):
    """Write records one per line; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
            count += 1
    return count


def dump_record(record):
    return json.dumps(record, ensure_ascii=False)
