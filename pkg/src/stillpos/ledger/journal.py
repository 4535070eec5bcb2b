"""Append-only journal with periodic snapshots.

Byte layout (all integers big-endian):

    file header: 8 bytes magic ``STILLJL1``
    record:      u32 payload_len | u64 seq | u8 record_type
                 | payload (utf-8 JSON) | u32 crc32(seq_bytes + type_byte + payload)

Snapshots live next to the journal as ``snapshot.json`` (written to a temp
file, fsynced, renamed): ``{"version": 1, "last_seq": N, "state": {...}}``.
Recovery loads the snapshot, then replays journal records with seq >
last_seq; replay stops at the first truncated or corrupt record and
reports it, so a crash mid-append recovers to the last complete record.
Compaction rewrites the journal only after the snapshot is durable, and
the seq filter makes the overlap window harmless.
"""

from __future__ import annotations

import json
import os
import struct
import zlib

from stillpos.errors import StoreError

MAGIC = b"STILLJL1"
JOURNAL_FILE = "journal.log"
SNAPSHOT_FILE = "snapshot.json"

_HEADER = struct.Struct(">IQB")
_CRC = struct.Struct(">I")


class Journal:
    def __init__(self, directory: str, *, fsync: bool = False):
        self.directory = directory
        self.fsync = fsync
        os.makedirs(directory, exist_ok=True)
        self._journal_path = os.path.join(directory, JOURNAL_FILE)
        self._snapshot_path = os.path.join(directory, SNAPSHOT_FILE)
        if not os.path.exists(self._journal_path):
            with open(self._journal_path, "wb") as fh:
                fh.write(MAGIC)
                fh.flush()
                os.fsync(fh.fileno())
        self._fh = open(self._journal_path, "ab")
        self.next_seq = 1  # recover() adjusts

    def close(self) -> None:
        self._fh.close()

    # --- writing ---

    def append(self, record_type: int, payload: dict) -> int:
        seq = self.next_seq
        body = json.dumps(payload, separators=(",", ":"), sort_keys=True).encode()
        seq_bytes = struct.pack(">Q", seq)
        crc = zlib.crc32(seq_bytes + bytes([record_type]) + body)
        frame = _HEADER.pack(len(body), seq, record_type) + body + _CRC.pack(crc)
        self._fh.write(frame)
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())
        self.next_seq = seq + 1
        return seq

    def byte_length(self) -> int:
        self._fh.flush()
        return os.path.getsize(self._journal_path)

    # --- reading ---

    def replay(self) -> tuple[list[tuple[int, int, dict]], bool]:
        """All valid records as (seq, type, payload); True if a trailing
        truncated/corrupt record was dropped."""
        with open(self._journal_path, "rb") as fh:
            raw = fh.read()
        if raw[: len(MAGIC)] != MAGIC:
            raise StoreError("not a stillpos journal (bad magic)")
        records: list[tuple[int, int, dict]] = []
        offset = len(MAGIC)
        truncated = False
        while offset < len(raw):
            if offset + _HEADER.size > len(raw):
                truncated = True
                break
            length, seq, record_type = _HEADER.unpack_from(raw, offset)
            end = offset + _HEADER.size + length + _CRC.size
            if end > len(raw):
                truncated = True
                break
            body = raw[offset + _HEADER.size : offset + _HEADER.size + length]
            (crc,) = _CRC.unpack_from(raw, offset + _HEADER.size + length)
            if crc != zlib.crc32(struct.pack(">Q", seq) + bytes([record_type]) + body):
                truncated = True
                break
            try:
                payload = json.loads(body)
            except json.JSONDecodeError:
                truncated = True
                break
            records.append((seq, record_type, payload))
            offset = end
        return records, truncated

    # --- snapshots ---

    def load_snapshot(self) -> tuple[dict, int] | None:
        if not os.path.exists(self._snapshot_path):
            return None
        with open(self._snapshot_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if data.get("version") != 1:
            raise StoreError(f"unsupported snapshot version {data.get('version')!r}")
        return data["state"], data["last_seq"]

    def write_snapshot(self, state: dict, last_seq: int) -> None:
        tmp = self._snapshot_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"version": 1, "last_seq": last_seq, "state": state}, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._snapshot_path)

    def compact(self, state: dict, last_seq: int) -> None:
        """Durable snapshot, then a fresh journal. Safe at any crash point:
        stale journal records are skipped by the seq filter on recovery."""
        self.write_snapshot(state, last_seq)
        self._fh.close()
        tmp = self._journal_path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._journal_path)
        self._fh = open(self._journal_path, "ab")
