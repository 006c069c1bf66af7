"""Synchronous client for the pipeline service.

Given a base URL it speaks plain HTTP; without one it dispatches requests
to an in-process app instance through an ASGI transport, so the CLI works
with or without a running server.
"""

from __future__ import annotations

import asyncio

import httpx

from .errors import Geo2SoundError


class ServiceError(Geo2SoundError):
    """Non-2xx response from the pipeline service."""

    def __init__(self, status_code: int, detail: str, error_type: str = ""):
        super().__init__(detail)
        self.status_code = status_code
        self.error_type = error_type


class _InProcessTransport(httpx.BaseTransport):
    """Run each request against an ASGI app on a private event loop."""

    def __init__(self, app):
        self._app = app

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def _dispatch():
            transport = httpx.ASGITransport(app=self._app)
            response = await transport.handle_async_request(request)
            content = await response.aread()
            await response.aclose()
            return response.status_code, response.headers, content

        status_code, headers, content = asyncio.run(_dispatch())
        headers = [(k, v) for k, v in headers.items() if k.lower() != "content-length"]
        return httpx.Response(status_code=status_code, headers=headers, content=content)


class PipelineClient:
    """Thin wrapper over the service endpoints used by the CLI and tests."""

    def __init__(self, base_url: str | None = None, timeout: float = 3600.0):
        if base_url:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)
        else:
            from .service import create_app

            self._client = httpx.Client(
                base_url="http://geo2sound.local",
                transport=_InProcessTransport(create_app()),
                timeout=timeout,
            )

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.TransportError as exc:
            raise ServiceError(0, f"service unreachable: {exc}") from exc
        return self._check(response)

    @staticmethod
    def _check(response: httpx.Response) -> dict:
        if response.status_code >= 300:
            try:
                body = response.json()
                detail = body.get("detail", response.text)
                error_type = body.get("error_type", "")
            except ValueError:
                detail, error_type = response.text, ""
            raise ServiceError(response.status_code, str(detail), error_type)
        return response.json()

    def health(self) -> dict:
        try:
            response = self._client.get("/health")
        except httpx.TransportError as exc:
            raise ServiceError(0, f"service unreachable: {exc}") from exc
        return self._check(response)

    def extract_attrs(self, **payload) -> dict:
        return self._post("/attrs/extract", payload)

    def train_attrs_classifier(self, **payload) -> dict:
        return self._post("/attrs/train-classifier", payload)

    def train_align(self, **payload) -> dict:
        return self._post("/align/train", payload)

    def select(self, **payload) -> dict:
        return self._post("/align/select", payload)

    def evaluate(self, **payload) -> dict:
        return self._post("/metrics/evaluate", payload)

    def synth_bench(self, **payload) -> dict:
        return self._post("/synth/bench", payload)

    def hypothesis_plan(self, **payload) -> dict:
        return self._post("/hypothesis/plan", payload)
