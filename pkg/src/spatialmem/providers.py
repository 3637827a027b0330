"""External-intelligence providers (language model, embeddings, scene
captioning, web search) behind small protocols, plus deterministic offline
stubs so the whole engine runs and tests without network access.

Stub behavior is pure: identical inputs give byte-identical outputs across
processes. Nothing in this module reads a clock; the stub search result
carries a fixed instant so replay logs stay stable.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional, Protocol

import requests

from .domain import (
    AUX_VERBS,
    REMEMBRANCE_HINT_WORDS,
    REMEMBRANCE_TRIGGERS,
    REMOVAL_TRIGGERS,
    STOPWORDS,
    WH_WORDS,
    tokenize,
)
from .errors import (
    InvalidArgumentError,
    MalformedOutputError,
    ProviderTransportError,
    UnsupportedInputError,
)

logger = logging.getLogger(__name__)

DEFAULT_DIM = 256

# Instant stamped on every stub search result; fixed so replays never drift.
STUB_FETCH_INSTANT = datetime(2025, 1, 1, 0, 0, 0, tzinfo=timezone.utc)


class LMTask(str, Enum):
    CLASSIFY = "classify"
    COMPOSE_ANSWER = "compose_answer"
    VALIDATE = "validate"
    REVISE_INTENT = "revise_intent"
    SUMMARIZE = "summarize"


@dataclass(frozen=True)
class SearchResult:
    title: str
    snippet: str
    fetched_at: datetime


class LanguageModel(Protocol):
    def complete_structured(self, task: LMTask, inputs: dict) -> dict: ...


class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> list[float]: ...


class SceneDescriber(Protocol):
    def describe_scene(self, image_bytes: bytes) -> str: ...


class WebSearch(Protocol):
    def search(self, query: str) -> list[SearchResult]: ...


# ---------------------------------------------------------------------------
# Deterministic stubs
# ---------------------------------------------------------------------------


class StubEmbedder:
    """Token feature-hashing into a fixed number of signed buckets, L2-normed.

    Stopwords are dropped first so overlap on content words dominates the
    cosine; if nothing survives the drop, all tokens are used, and a text
    with no tokens at all is hashed whole.
    """

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 2:
            raise InvalidArgumentError("embedding dim must be >= 2")
        self.dim = dim

    def embed(self, text: str) -> list[float]:
        if not text or not text.strip():
            raise InvalidArgumentError("cannot embed empty text")
        tokens = tokenize(text)
        content = [t for t in tokens if t not in STOPWORDS]
        if not content:
            content = tokens if tokens else [text.strip().lower()]
        vec = [0.0] * self.dim
        for token in content:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            sign = 1.0 if (value >> 63) & 1 == 0 else -1.0
            vec[value % self.dim] += sign
        norm = sum(x * x for x in vec) ** 0.5
        if norm == 0.0:
            # Opposite-signed collisions cancelled everything; fall back to
            # a single deterministic unit component.
            first = int.from_bytes(
                hashlib.blake2b(content[0].encode("utf-8"), digest_size=8).digest(), "big"
            )
            vec[first % self.dim] = 1.0
            return vec
        return [x / norm for x in vec]


# Canned general-knowledge answers, keyed by lowercase substring of the
# question. Closed table: unknown questions get the template fallback.
STUB_FACTS = {
    "sugar content of the teriyaki": "Teriyaki sauce has about 9 grams of sugar per serving.",
    "sugar content of the wasabi": "Wasabi soy sauce has about 2 grams of sugar per serving.",
    "capital of france": "Paris is the capital of France.",
    "m11 bus": "The M11 is a Manhattan local bus running along Ninth and Amsterdam Avenues.",
    "boiling point of water": "Water boils at 100 degrees Celsius at sea-level pressure.",
}


def _question_gist(question: str) -> str:
    content = [t for t in tokenize(question) if t not in STOPWORDS]
    return " ".join(content[:8]) if content else "that"


class StubLanguageModel:
    """Rule-driven structured completions mirroring each task contract."""

    def __init__(self):
        self.calls: dict[str, int] = {}

    def _count(self, task: LMTask) -> None:
        self.calls[task.value] = self.calls.get(task.value, 0) + 1

    def complete_structured(self, task: LMTask, inputs: dict) -> dict:
        self._count(task)
        if task is LMTask.CLASSIFY:
            return self._classify(inputs)
        if task is LMTask.COMPOSE_ANSWER:
            return self._compose_answer(inputs)
        if task is LMTask.VALIDATE:
            return self._validate(inputs)
        if task is LMTask.REVISE_INTENT:
            return self._revise_intent(inputs)
        if task is LMTask.SUMMARIZE:
            return self._summarize(inputs)
        raise UnsupportedInputError(f"unknown task {task!r}")

    @staticmethod
    def _require(inputs: dict, *names: str) -> list[str]:
        missing = [n for n in names if n not in inputs]
        if missing:
            raise InvalidArgumentError(f"missing input fields: {', '.join(missing)}")
        return [inputs[n] for n in names]

    def _classify(self, inputs: dict) -> dict:
        (transcript,) = self._require(inputs, "transcript")
        lowered = " ".join(str(transcript).lower().split())
        if any(t in lowered for t in REMOVAL_TRIGGERS):
            return {"query_type": "removal"}
        if any(t in lowered for t in REMEMBRANCE_TRIGGERS):
            return {"query_type": "remembrance"}
        tokens = tokenize(lowered)
        frame = bool(tokens) and (
            tokens[0] in WH_WORDS or tokens[0] in AUX_VERBS or any(t in WH_WORDS for t in tokens)
        )
        if frame:
            return {"query_type": "question_answering"}
        if any(t in REMEMBRANCE_HINT_WORDS for t in tokens):
            return {"query_type": "remembrance"}
        return {"query_type": "question_answering"}

    def _compose_answer(self, inputs: dict) -> dict:
        (question,) = self._require(inputs, "question")
        lowered = str(question).lower()
        for key, fact in STUB_FACTS.items():
            if key in lowered:
                return {"answer": fact}
        return {"answer": f"I don't have reliable details about {_question_gist(question)}."}

    def _validate(self, inputs: dict) -> dict:
        support, temporal_unmet, referent_mismatch = self._require(
            inputs, "support_count", "temporal_unmet", "referent_mismatch"
        )
        score = 10
        if int(support) == 0:
            score -= 7
        if str(temporal_unmet).lower() == "true":
            score -= 2
        if str(referent_mismatch).lower() == "true":
            score -= 2
        return {"confidence": max(1, min(10, score))}

    def _revise_intent(self, inputs: dict) -> dict:
        prior_query, prior_referent, new_referent = self._require(
            inputs, "prior_query", "prior_referent", "new_referent"
        )
        lowered_query = str(prior_query).lower()
        lowered_ref = str(prior_referent).lower()
        idx = lowered_query.find(lowered_ref)
        if not lowered_ref or idx < 0:
            raise UnsupportedInputError("prior query does not mention the prior referent")
        revised = prior_query[:idx] + str(new_referent) + prior_query[idx + len(lowered_ref):]
        return {"revised_query": revised}

    def _summarize(self, inputs: dict) -> dict:
        referent, space_label, date, gist = self._require(
            inputs, "referent", "space_label", "date", "gist"
        )
        summary = f'Memory about {referent} at {space_label} from {date}: "{gist}"'
        if str(inputs.get("low_match", "")).lower() == "true":
            summary += " (low match confidence)"
        return {"summary": summary}


# Scene captions keyed by SHA-256 digest of the image payload. The payloads
# are tiny byte fixtures standing in for camera frames.
STUB_IMAGE_PAYLOADS = {
    "bus-stop": b"fixture-image:bus-stop",
    "potted-plant": b"fixture-image:potted-plant",
    "classroom-desk": b"fixture-image:classroom-desk",
    "sauce-shelf": b"fixture-image:sauce-shelf",
    "maintenance-panel": b"fixture-image:maintenance-panel",
}

STUB_SCENE_CAPTIONS = {
    hashlib.sha256(STUB_IMAGE_PAYLOADS["bus-stop"]).hexdigest(): "a bus stop sign on a street",
    hashlib.sha256(STUB_IMAGE_PAYLOADS["potted-plant"]).hexdigest(): "a potted plant on a desk",
    hashlib.sha256(STUB_IMAGE_PAYLOADS["classroom-desk"]).hexdigest(): "a worksheet on a classroom desk",
    hashlib.sha256(STUB_IMAGE_PAYLOADS["sauce-shelf"]).hexdigest(): "shelf of sauces, wasabi soy sauce in center",
    hashlib.sha256(STUB_IMAGE_PAYLOADS["maintenance-panel"]).hexdigest(): "an open maintenance panel with labeled ports",
}


class StubSceneDescriber:
    def describe_scene(self, image_bytes: bytes) -> str:
        if not image_bytes:
            raise InvalidArgumentError("cannot describe empty image bytes")
        digest = hashlib.sha256(image_bytes).hexdigest()
        caption = STUB_SCENE_CAPTIONS.get(digest)
        if caption is None:
            raise UnsupportedInputError(f"no canned caption for image digest {digest[:12]}")
        return caption


# Canned search results, keyed by lowercase substring of the query.
STUB_SEARCH_RESULTS = {
    "m11 bus": [("MTA M11 schedule", "M11 arrives at 5:10 PM")],
    "weather": [("Local weather", "Sunny with a high of 24 degrees Celsius this afternoon")],
    "soy milk price": [("Grocery listings", "Unsweetened soy milk is $3.49 per carton this week")],
}


class StubWebSearch:
    """Closed-fixture search with a call counter and a toggleable outage."""

    def __init__(self):
        self._call_count = 0
        self.outage = False

    @property
    def call_count(self) -> int:
        return self._call_count

    def reset(self) -> None:
        self._call_count = 0
        self.outage = False

    def search(self, query: str) -> list[SearchResult]:
        if not query or not query.strip():
            raise InvalidArgumentError("cannot search an empty query")
        self._call_count += 1
        if self.outage:
            raise ProviderTransportError("stub search outage")
        lowered = query.lower()
        for key, rows in STUB_SEARCH_RESULTS.items():
            if key in lowered:
                return [
                    SearchResult(title=t, snippet=s, fetched_at=STUB_FETCH_INSTANT)
                    for t, s in rows
                ]
        return []


# ---------------------------------------------------------------------------
# Live adapters: thin HTTPS shims over operator-supplied endpoints
# ---------------------------------------------------------------------------


def _post_json(endpoint: str, api_key: str, payload: dict, timeout: float) -> dict:
    headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
    try:
        resp = requests.post(endpoint, json=payload, headers=headers, timeout=timeout)
        resp.raise_for_status()
        body = resp.json()
    except requests.RequestException as exc:
        raise ProviderTransportError(f"provider call to {endpoint} failed: {exc}") from exc
    except ValueError as exc:
        raise MalformedOutputError(f"provider at {endpoint} returned non-JSON body") from exc
    if not isinstance(body, dict):
        raise MalformedOutputError(f"provider at {endpoint} returned {type(body).__name__}")
    return body


class LiveLanguageModel:
    def __init__(self, endpoint: str, api_key: str = "", timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def complete_structured(self, task: LMTask, inputs: dict) -> dict:
        body = _post_json(
            self.endpoint, self.api_key, {"task": task.value, "inputs": inputs}, self.timeout
        )
        outputs = body.get("outputs")
        if not isinstance(outputs, dict):
            raise MalformedOutputError("language-model response missing 'outputs' object")
        return outputs


class LiveEmbedder:
    def __init__(self, endpoint: str, api_key: str = "", dim: int = DEFAULT_DIM, timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.dim = dim
        self.timeout = timeout

    def embed(self, text: str) -> list[float]:
        if not text or not text.strip():
            raise InvalidArgumentError("cannot embed empty text")
        body = _post_json(self.endpoint, self.api_key, {"text": text}, self.timeout)
        vector = body.get("vector")
        if not isinstance(vector, list) or len(vector) != self.dim:
            raise MalformedOutputError(f"embedder response is not a {self.dim}-dim vector")
        values = [float(x) for x in vector]
        norm = sum(x * x for x in values) ** 0.5
        if norm == 0.0:
            raise MalformedOutputError("embedder returned a zero vector")
        return [x / norm for x in values]


class LiveSceneDescriber:
    def __init__(self, endpoint: str, api_key: str = "", timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def describe_scene(self, image_bytes: bytes) -> str:
        if not image_bytes:
            raise InvalidArgumentError("cannot describe empty image bytes")
        import base64

        payload = {"image_b64": base64.b64encode(image_bytes).decode("ascii")}
        body = _post_json(self.endpoint, self.api_key, payload, self.timeout)
        caption = body.get("caption")
        if not isinstance(caption, str) or not caption.strip():
            raise MalformedOutputError("scene provider returned an empty caption")
        return caption


class LiveWebSearch:
    def __init__(self, endpoint: str, api_key: str = "", timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def search(self, query: str) -> list[SearchResult]:
        if not query or not query.strip():
            raise InvalidArgumentError("cannot search an empty query")
        body = _post_json(self.endpoint, self.api_key, {"query": query}, self.timeout)
        rows = body.get("results")
        if not isinstance(rows, list):
            raise MalformedOutputError("search provider response missing 'results' list")
        results = []
        for row in rows:
            try:
                results.append(
                    SearchResult(
                        title=str(row["title"]),
                        snippet=str(row["snippet"]),
                        fetched_at=datetime.fromisoformat(
                            str(row["fetched_at"]).replace("Z", "+00:00")
                        ),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedOutputError(f"bad search result row: {row!r}") from exc
        return [r for r in results if r.snippet]


@dataclass
class ProviderSuite:
    """Shareable, immutable bundle of the four capabilities."""

    language_model: LanguageModel
    embedder: Embedder
    scene_describer: SceneDescriber
    web_search: WebSearch

    @classmethod
    def stub(cls, dim: int = DEFAULT_DIM) -> "ProviderSuite":
        return cls(
            language_model=StubLanguageModel(),
            embedder=StubEmbedder(dim=dim),
            scene_describer=StubSceneDescriber(),
            web_search=StubWebSearch(),
        )
