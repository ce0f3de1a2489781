"""Durable result repository: one XML file per task.

Each record lives at ``<data_dir>/<task_id>.xml`` in the stored-record
format, so the index is just a directory scan and survives process
restarts. Records are append-only once terminal: the only legal overwrite
is PENDING to DONE or PENDING to FAILED. Writes go through a temp file and
an atomic rename, serialized by one lock; terminal records are immutable so
reads after fetch need no locking.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from .errors import ConflictError, IoError, UnknownTaskError
from .model import ResultStatus, TestResultRecord, UUID_V4_RE
from .protocol import decode_record, encode_record


class ResultStore:
    def __init__(self, data_dir: Path | str) -> None:
        self.data_dir = Path(data_dir)
        try:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create data dir {self.data_dir}: {exc}") from exc
        self._lock = threading.Lock()
        self._status: dict[str, ResultStatus] = {}
        self._scan()

    def _path(self, task_id: str) -> Path:
        return self.data_dir / f"{task_id}.xml"

    def _scan(self) -> None:
        for path in sorted(self.data_dir.glob("*.xml")):
            task_id = path.stem
            if not UUID_V4_RE.match(task_id):
                continue
            record, _ = decode_record(path.read_bytes())
            self._status[task_id] = record.status

    def store(self, record: TestResultRecord) -> str:
        """Persist ``record``; returns its task id.

        Overwriting is allowed only for the PENDING-to-terminal transition.
        """
        with self._lock:
            previous = self._status.get(record.task_id)
            if previous is not None:
                legal = previous is ResultStatus.PENDING and record.status in (
                    ResultStatus.DONE,
                    ResultStatus.FAILED,
                )
                if not legal:
                    raise ConflictError(
                        f"task {record.task_id}: illegal transition "
                        f"{previous.value} -> {record.status.value}"
                    )
            path = self._path(record.task_id)
            tmp = path.with_suffix(".xml.tmp")
            try:
                tmp.write_text(encode_record(record), encoding="utf-8")
                os.replace(tmp, path)
            except OSError as exc:
                raise IoError(f"cannot persist {path}: {exc}") from exc
            self._status[record.task_id] = record.status
        return record.task_id

    def fetch(self, task_id: str) -> TestResultRecord:
        record, _ = decode_record(self.fetch_raw(task_id))
        return record

    def fetch_raw(self, task_id: str) -> bytes:
        """The stored document byte-for-byte, as served over HTTP."""
        with self._lock:
            if task_id not in self._status:
                raise UnknownTaskError(f"no record for task {task_id}")
        try:
            return self._path(task_id).read_bytes()
        except OSError as exc:
            raise IoError(f"cannot read record for {task_id}: {exc}") from exc

    def status_of(self, task_id: str) -> ResultStatus:
        with self._lock:
            try:
                return self._status[task_id]
            except KeyError:
                raise UnknownTaskError(f"no record for task {task_id}") from None

    def task_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._status)

    def __len__(self) -> int:
        with self._lock:
            return len(self._status)

    def __contains__(self, task_id: str) -> bool:
        with self._lock:
            return task_id in self._status
