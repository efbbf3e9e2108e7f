"""First-token probability sources.

``RemoteBackend`` talks to any completion endpoint that reports per-token
log-probability alternatives (OpenAI-style ``/completions`` with
``logprobs=k``). The mock backends are deterministic scripts for tests and
offline runs. All of them expose ``score_first_token(prompt, candidates)``.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import re
import threading
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import httpx

from .scoring import TokenDistribution

log = logging.getLogger(__name__)

MOCK_SCRIPTS = ("position-biased", "content-keyword", "fixed-table")


class BackendError(RuntimeError):
    """A query that could not be answered (transport failure or malformed reply)."""


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "mock"
    # remote
    base_url: str = "http://localhost:8000/v1"
    model: str = ""
    auth_env: Optional[str] = None
    top_k: int = 20
    timeout: float = 30.0
    retries: int = 2
    requests_per_second: Optional[float] = None
    max_in_flight: int = 8
    # mock
    script: str = "position-biased"
    weights: tuple[tuple[str, float], ...] = ()  # position-biased
    keyword: str = ""  # content-keyword
    keyword_prob: float = 0.9
    table: tuple[tuple[tuple[str, float], ...], ...] = ()  # fixed-table, replayed in order

    def __post_init__(self):
        if self.kind not in ("remote", "mock"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "mock" and self.script not in MOCK_SCRIPTS:
            raise ValueError(f"unknown mock script {self.script!r}")
        if self.kind == "remote" and not self.model:
            raise ValueError("remote backend needs a model identifier")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


@dataclass(frozen=True)
class QueryRecord:
    prompt_hash: str
    candidates: tuple[str, ...]
    distribution: TokenDistribution
    latency_ms: float
    retries: int


def prompt_hash(prompt: str) -> str:
    """64-bit stable hash of the exact prompt bytes, as 16 hex digits."""
    return hashlib.blake2b(prompt.encode("utf-8"), digest_size=8).hexdigest()


def _check_candidates(candidates: Sequence[str]) -> tuple[str, ...]:
    candidates = tuple(candidates)
    if not candidates:
        raise ValueError("no candidate tokens")
    if len(set(candidates)) != len(candidates):
        raise ValueError(f"duplicate candidate tokens: {candidates}")
    return candidates


class _Recorder:
    def __init__(self, keep_records: bool):
        self.keep_records = keep_records
        self.records: list[QueryRecord] = []
        self.calls = 0
        self._lock = threading.Lock()

    def _record(self, prompt, candidates, dist, latency_ms=0.0, retries=0):
        with self._lock:
            self.calls += 1
            if self.keep_records:
                self.records.append(QueryRecord(prompt_hash(prompt), candidates, dist, latency_ms, retries))


class PositionBiasedMock(_Recorder):
    """Probability depends only on the candidate token, never on the prompt.

    Tokens named in ``weights`` get that mass; the remainder is shared
    equally by the other candidates.
    """

    def __init__(self, weights, keep_records: bool = False):
        super().__init__(keep_records)
        self.weights = dict(weights)

    def score_first_token(self, prompt: str, candidates) -> TokenDistribution:
        candidates = _check_candidates(candidates)
        fixed = {c: self.weights[c] for c in candidates if c in self.weights}
        rest = [c for c in candidates if c not in fixed]
        share = max(0.0, 1.0 - sum(fixed.values())) / len(rest) if rest else 0.0
        dist = TokenDistribution({c: fixed.get(c, share) for c in candidates})
        self._record(prompt, candidates, dist)
        return dist


_LEGAL_LINE = re.compile(r"^Legal Actions: (.*)$", re.MULTILINE)
_PROPOSED_LINE = re.compile(r"^Proposed Action: (.*)$", re.MULTILINE)


class ContentKeywordMock(_Recorder):
    """Favors whatever option text contains ``keyword``.

    Cloze prompts: letters whose option contains the keyword share ``prob``,
    the other letters share the rest. Counterfactual prompts: "good" gets
    ``prob`` when the proposed action contains the keyword, else ``1 - prob``,
    and "bad" gets the complement.
    """

    def __init__(self, keyword: str, prob: float = 0.9, keep_records: bool = False):
        super().__init__(keep_records)
        self.keyword = keyword
        self.prob = prob

    def score_first_token(self, prompt: str, candidates) -> TokenDistribution:
        candidates = _check_candidates(candidates)
        probs = dict.fromkeys(candidates, 0.0)
        proposed = _PROPOSED_LINE.search(prompt)
        if proposed:
            hit = self.keyword in proposed.group(1)
            if "good" in probs:
                probs["good"] = self.prob if hit else 1.0 - self.prob
            if "bad" in probs:
                probs["bad"] = 1.0 - self.prob if hit else self.prob
        else:
            legal = _LEGAL_LINE.search(prompt)
            options = {}
            if legal:
                for item in legal.group(1).split(", "):
                    letter, _, text = item.partition(": ")
                    options[letter] = text
            hits = [c for c in candidates if self.keyword in options.get(c, "")]
            misses = [c for c in candidates if c not in hits]
            for c in hits:
                probs[c] = self.prob / len(hits)
            for c in misses:
                probs[c] = (1.0 - self.prob if hits else 1.0) / len(misses)
        dist = TokenDistribution(probs)
        self._record(prompt, candidates, dist)
        return dist


class FixedTableMock(_Recorder):
    """Replays ``table`` entries in order, one per query, cycling at the end."""

    def __init__(self, table, keep_records: bool = False):
        super().__init__(keep_records)
        self.table = [dict(entry) for entry in table]
        if not self.table:
            raise ValueError("fixed-table mock needs at least one entry")

    def score_first_token(self, prompt: str, candidates) -> TokenDistribution:
        candidates = _check_candidates(candidates)
        entry = self.table[self.calls % len(self.table)]
        missing = tuple(c for c in candidates if c not in entry)
        dist = TokenDistribution({c: entry[c] for c in candidates if c in entry}, missing)
        self._record(prompt, candidates, dist)
        return dist


class TokenBucket:
    def __init__(self, rate: float, capacity: Optional[float] = None, clock=time.monotonic, sleep=time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.last) * self.rate)
                self.last = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self.sleep(wait)


class RemoteBackend(_Recorder):
    """Client for a completion endpoint with top-k log-probability alternatives.

    A candidate's probability is ``exp(logprob)`` of the first-position
    alternative whose text equals the candidate once surrounding whitespace
    is stripped (so " A" counts for "A"). Candidates absent from the
    alternatives get 0 and are listed in ``TokenDistribution.missing``.
    """

    def __init__(self, spec: BackendSpec, client: Optional[httpx.Client] = None,
                 keep_records: bool = True, sleep=time.sleep):
        super().__init__(keep_records)
        self.spec = spec
        headers = {}
        if spec.auth_env:
            token = os.environ.get(spec.auth_env)
            if token is None:
                raise BackendError(f"environment variable {spec.auth_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        self.client = client or httpx.Client(base_url=spec.base_url, timeout=spec.timeout)
        self.client.headers.update(headers)
        self.sleep = sleep
        self.bucket = TokenBucket(spec.requests_per_second, sleep=sleep) if spec.requests_per_second else None
        self._slots = threading.BoundedSemaphore(spec.max_in_flight)

    def request_body(self, prompt: str) -> dict:
        return {
            "model": self.spec.model,
            "prompt": prompt,
            "max_tokens": 1,
            "logprobs": self.spec.top_k,
            "temperature": 0,
        }

    def score_first_token(self, prompt: str, candidates) -> TokenDistribution:
        candidates = _check_candidates(candidates)
        if self.spec.top_k < len(candidates):
            raise ValueError(f"top_k={self.spec.top_k} is smaller than the {len(candidates)} candidates")
        start = time.perf_counter()
        attempt = 0
        while True:
            try:
                with self._slots:
                    if self.bucket:
                        self.bucket.acquire()
                    resp = self.client.post("/completions", json=self.request_body(prompt))
                if resp.status_code == 429 or resp.status_code >= 500:
                    raise httpx.HTTPStatusError(f"server returned {resp.status_code}",
                                                request=resp.request, response=resp)
                resp.raise_for_status()
                break
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                retryable = isinstance(exc, httpx.TransportError) or exc.response.status_code == 429 \
                    or exc.response.status_code >= 500
                if not retryable or attempt >= self.spec.retries:
                    raise BackendError(f"query failed after {attempt + 1} attempt(s): {exc}") from exc
                attempt += 1
                log.warning("retrying completion request (%d/%d): %s", attempt, self.spec.retries, exc)
                self.sleep(min(2.0 ** (attempt - 1) * 0.5, 8.0))
        dist = parse_top_logprobs(resp, candidates)
        self._record(prompt, candidates, dist, (time.perf_counter() - start) * 1000.0, attempt)
        return dist


def parse_top_logprobs(resp: httpx.Response, candidates: tuple[str, ...]) -> TokenDistribution:
    try:
        top = resp.json()["choices"][0]["logprobs"]["top_logprobs"][0]
        items = list(top.items())
    except (ValueError, KeyError, IndexError, TypeError, AttributeError) as exc:
        raise BackendError(f"malformed completion reply: {exc!r}") from exc
    probs = dict.fromkeys(candidates, 0.0)
    seen = set()
    for token, logprob in items:
        key = token.strip()
        if key in probs:
            try:
                probs[key] += math.exp(float(logprob))
            except (TypeError, ValueError) as exc:
                raise BackendError(f"malformed logprob for {token!r}: {logprob!r}") from exc
            seen.add(key)
    probs = {c: min(p, 1.0) for c, p in probs.items()}
    return TokenDistribution(probs, tuple(c for c in candidates if c not in seen))


def make_backend(spec: BackendSpec, keep_records: bool = False):
    if spec.kind == "remote":
        return RemoteBackend(spec, keep_records=keep_records)
    if spec.script == "position-biased":
        return PositionBiasedMock(spec.weights, keep_records)
    if spec.script == "content-keyword":
        return ContentKeywordMock(spec.keyword, spec.keyword_prob, keep_records)
    return FixedTableMock(spec.table, keep_records)


def score_first_token(prompt: str, candidates, spec: BackendSpec) -> TokenDistribution:
    """One-off query; builds a fresh backend from ``spec``."""
    return make_backend(spec).score_first_token(prompt, candidates)
