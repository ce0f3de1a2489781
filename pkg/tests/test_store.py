import random
import threading
from dataclasses import replace

import pytest

import support
from tfpaas.errors import ConflictError, UnknownTaskError
from tfpaas.model import ResultStatus
from tfpaas.store import ResultStore


def pending_record(rng):
    record = support.gen_record(rng)
    while record.status is not ResultStatus.PENDING:
        record = support.gen_record(rng)
    return record


def done_version(record, rng):
    return replace(
        record,
        status=ResultStatus.DONE,
        summary=support.gen_summary(rng),
        verdict=support.gen_verdict(rng),
        traces=(),
        finished_at=support.gen_datetime(rng),
        error=None,
    )


class TestRoundTrip:
    def test_store_then_fetch(self, tmp_path):
        rng = random.Random(0)
        store = ResultStore(tmp_path)
        record = support.gen_record(rng)
        store.store(record)
        assert store.fetch(record.task_id) == record
        assert store.status_of(record.task_id) is record.status
        assert record.task_id in store
        assert len(store) == 1

    def test_raw_bytes_are_the_stored_document(self, tmp_path):
        rng = random.Random(1)
        store = ResultStore(tmp_path)
        record = support.gen_record(rng)
        store.store(record)
        raw = store.fetch_raw(record.task_id)
        assert raw == (tmp_path / f"{record.task_id}.xml").read_bytes()
        assert raw.startswith(b"<?xml")

    def test_unknown_task(self, tmp_path):
        store = ResultStore(tmp_path)
        with pytest.raises(UnknownTaskError):
            store.fetch("123e4567-e89b-42d3-a456-426614174000")
        with pytest.raises(UnknownTaskError):
            store.status_of("123e4567-e89b-42d3-a456-426614174000")


class TestDurability:
    def test_restart_rebuilds_index(self, tmp_path):
        rng = random.Random(2)
        first = ResultStore(tmp_path)
        records = [support.gen_record(rng) for _ in range(8)]
        for record in records:
            first.store(record)

        second = ResultStore(tmp_path)
        assert second.task_ids() == sorted(r.task_id for r in records)
        for record in records:
            assert second.fetch(record.task_id) == record

    def test_foreign_files_are_ignored(self, tmp_path):
        (tmp_path / "README.xml").write_text("<not-a-task/>", encoding="utf-8")
        (tmp_path / "notes.txt").write_text("hi", encoding="utf-8")
        store = ResultStore(tmp_path)
        assert len(store) == 0


class TestTransitions:
    def test_pending_to_done(self, tmp_path):
        rng = random.Random(3)
        store = ResultStore(tmp_path)
        record = pending_record(rng)
        store.store(record)
        finished = done_version(record, rng)
        store.store(finished)
        assert store.fetch(record.task_id) == finished

    def test_pending_to_failed(self, tmp_path):
        rng = random.Random(4)
        store = ResultStore(tmp_path)
        record = pending_record(rng)
        store.store(record)
        failed = replace(record, status=ResultStatus.FAILED, error="target down")
        store.store(failed)
        assert store.status_of(record.task_id) is ResultStatus.FAILED

    def test_terminal_records_are_immutable(self, tmp_path):
        rng = random.Random(5)
        store = ResultStore(tmp_path)
        record = pending_record(rng)
        store.store(record)
        finished = done_version(record, rng)
        store.store(finished)
        with pytest.raises(ConflictError):
            store.store(finished)
        with pytest.raises(ConflictError):
            store.store(record)  # no going back to PENDING either

    def test_transition_guard_survives_restart(self, tmp_path):
        rng = random.Random(6)
        record = done_version(pending_record(rng), rng)
        ResultStore(tmp_path).store(record)
        reopened = ResultStore(tmp_path)
        with pytest.raises(ConflictError):
            reopened.store(record)


class TestConcurrency:
    def test_parallel_writers_with_distinct_ids(self, tmp_path):
        store = ResultStore(tmp_path)
        records = [support.gen_record(random.Random(seed)) for seed in range(16)]
        errors = []

        def work(record):
            try:
                store.store(record)
            except Exception as exc:  # pragma: no cover - failure path
                errors.append(exc)

        threads = [threading.Thread(target=work, args=(r,)) for r in records]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        assert len(store) == len({r.task_id for r in records})
        for record in records:
            assert store.fetch(record.task_id) == record
