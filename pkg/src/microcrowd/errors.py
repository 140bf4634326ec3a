"""Error taxonomy shared by the engine, scheduler, store and HTTP layer.

Two distinct failure families exist for submissions:

* request-level faults raise ``ServiceError`` subclasses and map to 4xx/5xx
  responses with *no* state change;
* content rejections (``Rejection``) are processed work: the submission is
  recorded, the microtask is requeued with attempt+1, and the HTTP response
  is a 200 with ``status: "rejected"``.
"""

from __future__ import annotations

__all__ = [
    "ServiceError",
    "BadRequest",
    "AuthError",
    "NotFound",
    "DomainError",
    "RunnerUnavailable",
    "ProtocolViolation",
    "StorageFull",
    "CorruptLog",
    "Rejection",
]


class ServiceError(Exception):
    http_status = 500
    code = "Internal"

    def __init__(self, message: str = "", code: str | None = None):
        super().__init__(message or code or self.code)
        if code is not None:
            self.code = code
        self.message = message or self.code


class BadRequest(ServiceError):
    http_status = 400
    code = "MalformedBody"


class AuthError(ServiceError):
    http_status = 401
    code = "Unauthorized"


class NotFound(ServiceError):
    http_status = 404
    code = "UnknownEntity"


class DomainError(ServiceError):
    """409-class errors: the request is well-formed but not applicable."""

    http_status = 409


class RunnerUnavailable(ServiceError):
    http_status = 503
    code = "RunnerUnavailable"


class ProtocolViolation(ServiceError):
    http_status = 503
    code = "ProtocolViolation"


class StorageFull(ServiceError):
    http_status = 503
    code = "StorageFull"


class CorruptLog(ServiceError):
    http_status = 503
    code = "CorruptLog"


class Rejection(Exception):
    """Content rejection: commits a rejected submission and requeues."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(message or code)
        self.code = code
        self.message = message or code
