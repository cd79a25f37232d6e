"""Deterministic scripted chat backend for offline dry runs.

``ScriptedBackend`` answers the package's own prompt templates with
plausible, parseable text, deterministically from the request content and
the replicate index. Plug it into ``LLMClient`` through ``transport()``
to record cassettes without a real model server.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading

import httpx

_ASPECTS = (
    "directly address",
    "follow the format requested in",
    "stay focused on",
    "give accurate information about",
    "cover every part of",
    "use the wording of",
    "avoid unrelated content beyond",
    "complete the request in",
    "keep a tone suited to",
)


def _u(*parts) -> float:
    """Uniform [0, 1) number derived from ``parts``."""
    h = hashlib.sha256("\x1f".join(map(str, parts)).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big") / 2 ** 64


def _section(text: str, header: str, stops: tuple[str, ...]) -> str:
    start = text.find(header)
    if start < 0:
        return ""
    start += len(header)
    end = len(text)
    for stop in stops:
        pos = text.find(stop, start)
        if 0 <= pos < end:
            end = pos
    return text[start:end].strip()


def _numbered_lines(block: str) -> list[str]:
    return [m.group(1) for m in re.finditer(r"^\s*\d+\.\s+(.*\S)\s*$", block, re.MULTILINE)]


def _keywords(task: str) -> list[str]:
    words = re.findall(r"[A-Za-z][A-Za-z'-]{3,}", task)
    return words or ["the task"]


class ScriptedBackend:
    """Rule-based stand-in for a chat model.

    Parameters control how messy the simulated model is: ``drift`` is the
    chance that a later generation sample returns a different item count,
    ``malformed`` the chance that a first judging attempt omits its final
    marker, and ``always_first`` makes every pairwise verdict pick the
    output shown first.
    """

    def __init__(self, name: str = "sim", drift: float = 0.25, malformed: float = 0.03,
                 bad_ticking: float = 0.2, position_bias: float = 0.1,
                 always_first: bool = False):
        self.name = name
        self.drift = drift
        self.malformed = malformed
        self.bad_ticking = bad_ticking
        self.position_bias = position_bias
        self.always_first = always_first
        self.calls = 0
        self._lock = threading.Lock()

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handle)

    def handle(self, request: httpx.Request) -> httpx.Response:
        with self._lock:
            self.calls += 1
        body = json.loads(request.content)
        prompt = body["messages"][-1]["content"]
        rep = int(request.headers.get("X-Replicate-Index", "0"))
        text = self.respond(prompt, rep)
        return httpx.Response(200, json={
            "id": "sim-" + hashlib.sha256(f"{prompt}{rep}".encode()).hexdigest()[:12],
            "object": "chat.completion",
            "model": body.get("model", self.name),
            "choices": [{"index": 0, "finish_reason": "stop",
                         "message": {"role": "assistant", "content": text}}],
        })

    # routing -------------------------------------------------------------

    def respond(self, prompt: str, rep: int) -> str:
        if "Rating: <1-5>" in prompt:
            return self._critique(prompt, rep)
        if "Reviewer feedback:" in prompt:
            return self._regenerate(prompt, rep)
        if "Write a new checklist with exactly" in prompt:
            return self._scaled(prompt, rep)
        if "INSTRUCTION:" in prompt:
            return self._ticking(prompt, rep)
        if "You are writing an evaluation checklist" in prompt:
            return self._baseline(prompt, rep, specify="possible answers" in prompt)
        if "Winner: 1" in prompt:
            return self._pairwise(prompt, rep)
        if "Score: <1-5>" in prompt:
            return self._direct(prompt, rep)
        return "I am not sure what to do with this request."

    # checklist generation ------------------------------------------------

    def _task(self, prompt: str) -> str:
        return _section(prompt, "Task:\n", ("\n\nAn earlier", "\n\nOutput only", "\n\nChecklist:",
                                            "\n\nCurrent checklist:"))

    def _questions(self, task: str, n: int, salt: str, specify: bool = False) -> list[str]:
        words = _keywords(task)
        out = []
        for i in range(n):
            w = words[int(_u(task, salt, i, "w") * len(words))]
            aspect = _ASPECTS[(i + int(_u(task, salt, "a") * len(_ASPECTS))) % len(_ASPECTS)]
            if specify:
                out.append(f"Does the response give the expected content for \"{w}\" and {aspect} the request?")
            else:
                out.append(f"Does the response {aspect} the request about \"{w}\"?")
        return out

    def _base_count(self, task: str, sample: int) -> int:
        n = 3 + int(_u(task, "count") * 4)
        if sample > 0 and _u(task, "drift", sample) < self.drift:
            n += 1
        return n

    def _baseline(self, prompt: str, rep: int, specify: bool) -> str:
        task = self._task(prompt)
        sample = rep // 3
        n = self._base_count(task, sample)
        qs = self._questions(task, n, "spec" if specify else "base", specify)
        return "\n".join(f"{i}. {q}" for i, q in enumerate(qs, 1))

    def _ticking(self, prompt: str, rep: int) -> str:
        task = _section(prompt, "INSTRUCTION:\n", ("\n\nOutput only",))
        attempt = rep % 3
        n = 2 + int(_u(task, "tick") * 7)
        if attempt == 0 and _u(task, "tick-bad") < self.bad_ticking:
            n = 9
        qs = self._questions(task, n, "tick")
        return "Here is the checklist:\n" + "\n".join(f"{i}. {q}" for i, q in enumerate(qs, 1))

    def _scaled(self, prompt: str, rep: int) -> str:
        task = self._task(prompt)
        target = int(re.search(r"exactly (\d+) questions", prompt).group(1))
        n = target
        if rep % 3 == 0 and _u(task, "scale-miss", target) < 0.15:
            n = target + 1
        qs = self._questions(task, n, f"len{target}")
        return "\n".join(f"{i}. {q}" for i, q in enumerate(qs, 1))

    def _critique(self, prompt: str, rep: int) -> str:
        task = self._task(prompt)
        rating = 2 + int(_u(task, "rating") * 3)
        if re.search(r"\bwords?\b", task, re.IGNORECASE):
            feedback = "The items are too vague about the word limit given in the task."
        else:
            feedback = "Some items are generic; add a question about whether the response answers the main request completely."
        return f"Rating: {rating}\nFeedback: {feedback}"

    def _regenerate(self, prompt: str, rep: int) -> str:
        current = _numbered_lines(_section(prompt, "Current checklist:\n", ("\n\nReviewer",)))
        feedback = _section(prompt, "Reviewer feedback:", ("\n\nWrite",))
        items = list(current)
        if "word limit" in feedback:
            items.append("Does the response stay within the word limit stated in the task?")
        else:
            items.append("Does the response answer the main request completely?")
        return "\n".join(f"{i}. {q}" for i, q in enumerate(items, 1))

    # judging -------------------------------------------------------------

    @staticmethod
    def _quality(text: str) -> float:
        return _u(text, "quality")

    def _malformed(self, prompt: str, rep: int) -> bool:
        return rep < 10 and _u(prompt, rep, "malformed") < self.malformed

    def _answers(self, items: list[str], text: str) -> list[str]:
        q = self._quality(text)
        out = []
        for item in items:
            x = _u(item, text, "item")
            if x < 0.05:
                out.append("n/a")
            else:
                out.append("yes" if x < 0.25 + 0.6 * q else "no")
        return out

    @staticmethod
    def _yes_rate(answers: list[str]) -> float:
        scored = [a for a in answers if a != "n/a"]
        return sum(a == "yes" for a in scored) / len(scored) if scored else 0.5

    def _pairwise(self, prompt: str, rep: int) -> str:
        first = _section(prompt, "Output (1):\n", ("\n\nOutput (2):",))
        second = _section(prompt, "Output (2):\n", ("\n\nChecklist:", "\n\nFirst "))
        items = _numbered_lines(_section(prompt, "\n\nChecklist:\n", ("\n\nFirst answer",)))
        lines = []
        if items:
            a1, a2 = self._answers(items, first), self._answers(items, second)
            lines.append("Checklist for Output (1):")
            lines += [f"{i}: {a}" for i, a in enumerate(a1, 1)]
            lines.append("Checklist for Output (2):")
            lines += [f"{i}: {a}" for i, a in enumerate(a2, 1)]
            edge = 1.2 * (self._yes_rate(a1) - self._yes_rate(a2)) + 0.5 * self.position_bias
        else:
            lines.append("Both outputs attempt the instruction; weighing accuracy and completeness.")
            edge = 0.9 * (self._quality(first) - self._quality(second)) + self.position_bias
        p_first = min(0.98, max(0.02, 0.5 + edge))
        pick = 1 if self.always_first or _u(prompt, rep, "vote") < p_first else 2
        if self._malformed(prompt, rep):
            lines.append(f"I lean towards Output ({pick}).")
        else:
            lines.append(f"Winner: {pick}")
        return "\n".join(lines)

    def _direct(self, prompt: str, rep: int) -> str:
        response = _section(prompt, "Response:\n", ("\n\nChecklist:", "\n\nFirst "))
        items = _numbered_lines(_section(prompt, "\n\nChecklist:\n", ("\n\nFirst answer",)))
        q = self._quality(response)
        lines = []
        if items:
            answers = self._answers(items, response)
            lines.append("Checklist:")
            lines += [f"{i}: {a}" for i, a in enumerate(answers, 1)]
            centre = 1 + 4 * (0.5 * self._yes_rate(answers) + 0.5 * q)
            spread = 1.2
        else:
            lines.append("The response is judged on relevance, accuracy and completeness.")
            centre = 1 + 4 * q
            spread = 2.2
        score = int(min(5, max(1, round(centre + (_u(prompt, rep, "noise") - 0.5) * spread))))
        if self._malformed(prompt, rep):
            lines.append(f"Overall I would give it a {score}.")
        else:
            lines.append(f"Score: {score}")
        return "\n".join(lines)


def always_first_backend() -> ScriptedBackend:
    return ScriptedBackend(name="always-first", always_first=True, malformed=0.0)
