"""Tiny hand-scripted transports for unit tests."""

from __future__ import annotations

import json

import httpx

from checkeval.client import Cassette, LLMClient, ModelEndpoint


def transport(fn):
    """MockTransport answering with ``fn(prompt, replicate_index)``."""
    calls = []

    def handler(request):
        body = json.loads(request.content)
        prompt = body["messages"][-1]["content"]
        rep = int(request.headers["X-Replicate-Index"])
        calls.append((prompt, rep))
        return httpx.Response(200, json={"choices": [{"message": {"content": fn(prompt, rep)}}]})

    t = httpx.MockTransport(handler)
    t.calls = calls
    return t


def client(fn, tmp_path, mode="record", model="m", concurrency=4):
    ep = ModelEndpoint("http://test/v1/", model, temperature=0.7, max_concurrency=concurrency)
    t = transport(fn)
    c = LLMClient(ep, Cassette(tmp_path / "cassette", mode), transport=t)
    c.calls = t.calls
    return c
