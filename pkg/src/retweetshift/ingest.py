"""Parse line-delimited interaction-event files and slice them by time window.

Input format: UTF-8 text, one JSON object per line with fields
``tweet_id``, ``author_id``, ``author_handle``, ``timestamp`` (integer epoch
seconds, UTC), ``text``, and for retweets ``retweeted_author_id`` plus
optional ``retweeted_author_handle``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import DataError

REQUIRED_FIELDS = ("tweet_id", "author_id", "author_handle", "timestamp", "text")


@dataclass(frozen=True)
class TweetRecord:
    """One interaction event: an original tweet or a retweet."""

    tweet_id: str
    author_id: str
    author_handle: str
    timestamp: int
    text: str
    retweeted_author_id: str | None = None
    retweeted_author_handle: str | None = None

    @property
    def is_retweet(self) -> bool:
        return self.retweeted_author_id is not None


@dataclass(frozen=True)
class TimeWindow:
    """Half-open interval [start, end) of UTC epoch seconds."""

    name: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise DataError(f"window {self.name!r}: start {self.start} >= end {self.end}")

    def contains(self, ts: int) -> bool:
        return self.start <= ts < self.end


@dataclass
class ParseReport:
    """Counts of parsed records and dropped lines by reason.

    Reports merge associatively, so parsing may be partitioned across
    workers and the counts summed afterwards.
    """

    parsed: int = 0
    malformed: int = 0
    missing_field: int = 0
    self_retweet: int = 0
    duplicate_id: int = 0

    @property
    def dropped(self) -> int:
        return self.malformed + self.missing_field + self.self_retweet + self.duplicate_id

    def merge(self, other: "ParseReport") -> "ParseReport":
        return ParseReport(
            parsed=self.parsed + other.parsed,
            malformed=self.malformed + other.malformed,
            missing_field=self.missing_field + other.missing_field,
            self_retweet=self.self_retweet + other.self_retweet,
            duplicate_id=self.duplicate_id + other.duplicate_id,
        )

    def to_dict(self) -> dict[str, int]:
        return {
            "parsed": self.parsed,
            "malformed": self.malformed,
            "missing_field": self.missing_field,
            "self_retweet": self.self_retweet,
            "duplicate_id": self.duplicate_id,
        }


def _coerce_id(value: object) -> str | None:
    # ids may arrive as JSON strings or integers; both key the same user
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str) and value:
        return value
    return None


def _record_from_obj(obj: dict) -> TweetRecord | str:
    """Build a TweetRecord, or return the drop reason.

    Reasons: "missing_field" for absent/null required keys, "malformed" for
    present keys of the wrong type, "self_retweet" when a record retweets
    its own author.
    """
    for key in REQUIRED_FIELDS:
        if obj.get(key) is None:
            return "missing_field"
    tweet_id = _coerce_id(obj["tweet_id"])
    author_id = _coerce_id(obj["author_id"])
    if tweet_id is None or author_id is None:
        return "malformed"
    handle = obj["author_handle"]
    text = obj["text"]
    ts = obj["timestamp"]
    if not isinstance(handle, str) or not isinstance(text, str):
        return "malformed"
    if isinstance(ts, bool) or not isinstance(ts, int):
        return "malformed"
    rt_id = None
    rt_handle = None
    if obj.get("retweeted_author_id") is not None:
        rt_id = _coerce_id(obj["retweeted_author_id"])
        if rt_id is None:
            return "malformed"
        if rt_id == author_id:
            return "self_retweet"
        raw_handle = obj.get("retweeted_author_handle")
        if raw_handle is not None:
            if not isinstance(raw_handle, str):
                return "malformed"
            rt_handle = raw_handle
    return TweetRecord(
        tweet_id=tweet_id,
        author_id=author_id,
        author_handle=handle,
        timestamp=ts,
        text=text,
        retweeted_author_id=rt_id,
        retweeted_author_handle=rt_handle,
    )


def parse_records(
    stream: IO[bytes] | IO[str] | Iterable[bytes] | Iterable[str],
    strict: bool = False,
) -> tuple[list[TweetRecord], ParseReport]:
    """Parse a newline-delimited record stream.

    In lenient mode invalid lines are skipped and counted in the report; in
    strict mode the first invalid line raises DataError with its line number.
    Self-retweets are always dropped and counted, never fatal.  Blank lines
    are ignored.  Duplicate tweet_ids keep the first occurrence.
    """
    records: list[TweetRecord] = []
    report = ParseReport()
    seen_ids: set[str] = set()
    for lineno, raw in enumerate(stream, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            obj = None
        if not isinstance(obj, dict):
            if strict:
                raise DataError(f"line {lineno}: malformed record")
            report.malformed += 1
            continue
        result = _record_from_obj(obj)
        if isinstance(result, str):
            if result == "self_retweet":
                report.self_retweet += 1
                continue
            if strict:
                raise DataError(f"line {lineno}: {result}")
            setattr(report, result, getattr(report, result) + 1)
            continue
        if result.tweet_id in seen_ids:
            if strict:
                raise DataError(f"line {lineno}: duplicate tweet_id {result.tweet_id!r}")
            report.duplicate_id += 1
            continue
        seen_ids.add(result.tweet_id)
        records.append(result)
        report.parsed += 1
    return records, report


def write_records(records: Iterable[TweetRecord], fp: IO[str]) -> None:
    """Serialize records in the documented one-object-per-line format."""
    for rec in records:
        obj = {
            "tweet_id": rec.tweet_id,
            "author_id": rec.author_id,
            "author_handle": rec.author_handle,
            "timestamp": rec.timestamp,
            "text": rec.text,
        }
        if rec.retweeted_author_id is not None:
            obj["retweeted_author_id"] = rec.retweeted_author_id
            if rec.retweeted_author_handle is not None:
                obj["retweeted_author_handle"] = rec.retweeted_author_handle
        fp.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
        fp.write("\n")


def window_slice(records: Iterable[TweetRecord], window: TimeWindow) -> list[TweetRecord]:
    """Records with start <= timestamp < end, input order preserved."""
    return [r for r in records if window.contains(r.timestamp)]
