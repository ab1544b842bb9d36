import json
from time import perf_counter
from typing import Optional, Tuple

from fastapi import Request

from ...core.log import request_logger


ARRAY_FIELDS = {"data", "ref", "test", "fused", "ms", "pan", "ll", "lh", "hl", "hh"}

logger = request_logger()


async def logging_middleware(request: Request, call_next):
    start_time = perf_counter()
    logger.info("Incoming request: %s %s", request.method, request.url.path)

    body_bytes = await request.body()
    parsed_body = _parse_body(request.headers.get('content-type'), body_bytes)
    cloned_request = _clone_request_with_body(request, body_bytes)
    status_code = None
    try:
        response = await call_next(cloned_request)
        status_code = response.status_code
    except Exception:
        status_code = 500
        logger.exception("Unhandled exception during %s %s", request.method, request.url.path)
        raise
    finally:
        duration_ms = (perf_counter() - start_time) * 1000
        logger.info(
            "Outgoing response code: %s %s -> %s in %.2fms | %s",
            request.method,
            request.url.path,
            status_code,
            duration_ms,
            _summarize_payload(parsed_body),
        )
    return response


def _parse_body(content_type: Optional[str], body_bytes: bytes) -> Optional[dict]:
    if not body_bytes or not content_type or 'application/json' not in content_type:
        return None
    try:
        data = json.loads(body_bytes.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return None
    return data if isinstance(data, dict) else None


def _clone_request_with_body(request: Request, body: bytes) -> Request:
    async def receive():
        return {"type": "http.request", "body": body, "more_body": False}

    return Request(request.scope, receive)


def _shape(value) -> Tuple[int, ...]:
    shape = []
    while isinstance(value, list):
        shape.append(len(value))
        value = value[0] if value else None
    return tuple(shape)


def _summarize_payload(data: Optional[dict]) -> str:
    """Array fields are logged by shape only, scalars by value."""
    if not isinstance(data, dict):
        return '-'
    entries = []
    for key, value in data.items():
        if key in ARRAY_FIELDS:
            entries.append(f"{key}={'x'.join(str(n) for n in _shape(value)) or '?'}")
        else:
            entries.append(f"{key}={_shorten(value)}")
    return ', '.join(entries) if entries else '-'


def _shorten(value) -> str:
    text = str(value)
    return text if len(text) <= 20 else text[:19] + '…'
