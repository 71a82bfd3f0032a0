from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import httpx
from tenacity import RetryCallState, Retrying, retry_if_exception, stop_after_attempt, wait_exponential

from .errors import RemoteClientError
from .logging import get_logger

RETRYABLE_STATUS = frozenset({408, 429, 500, 502, 503, 504})

logger = get_logger(component="http")


@dataclass(slots=True)
class RetryPolicy:
    max_retries: int = 3
    backoff_initial_s: float = 1.0
    backoff_max_s: float = 30.0


class RetryableStatus(Exception):
    def __init__(self, response: httpx.Response):
        self.response = response
        super().__init__(f"http_{response.status_code}")


def _is_retryable(exc: BaseException) -> bool:
    return isinstance(exc, (httpx.TransportError, RetryableStatus))


def _log_retry(state: RetryCallState) -> None:
    exc = state.outcome.exception() if state.outcome else None
    logger.warning("remote_retry", attempt=state.attempt_number, error=str(exc))


def build_http_client(api_key: Optional[str], timeout_s: float, transport: httpx.BaseTransport | None = None) -> httpx.Client:
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    return httpx.Client(headers=headers, timeout=httpx.Timeout(timeout_s), transport=transport)


def post_json(client: httpx.Client, url: str, payload: dict[str, Any], policy: RetryPolicy) -> Any:
    """POST ``payload`` and return the decoded JSON body, retrying transport errors and 408/429/5xx.

    Raises:
        RemoteClientError: after the final attempt fails, on a non-retryable status, or on a non-JSON body.
    """
    retrying = Retrying(
        stop=stop_after_attempt(policy.max_retries),
        wait=wait_exponential(multiplier=policy.backoff_initial_s, max=policy.backoff_max_s),
        retry=retry_if_exception(_is_retryable),
        before_sleep=_log_retry,
        reraise=True,
    )
    try:
        for attempt in retrying:
            with attempt:
                response = client.post(url, json=payload)
                if response.status_code in RETRYABLE_STATUS:
                    raise RetryableStatus(response)
    except RetryableStatus as exc:
        raise RemoteClientError(
            "remote_retries_exhausted", url=url, status=exc.response.status_code, attempts=policy.max_retries
        ) from exc
    except httpx.TransportError as exc:
        raise RemoteClientError("remote_retries_exhausted", str(exc), url=url, attempts=policy.max_retries) from exc

    if response.is_error:
        raise RemoteClientError("remote_http_error", response.text[:200], url=url, status=response.status_code)
    try:
        return response.json()
    except ValueError as exc:
        raise RemoteClientError("remote_schema_mismatch", "response body is not JSON", url=url) from exc


__all__ = ["RetryPolicy", "RETRYABLE_STATUS", "build_http_client", "post_json"]
