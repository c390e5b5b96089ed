"""Credential handling.

Admin sessions use compact signed bearer tokens (JWT, HS256) minted
and verified with a server-side secret; participants authenticate with
their per-participant logger key; questionnaire backlinks carry a
keyed-hash signature over the handoff parameters so they cannot be
forged or tampered with.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import os
from datetime import datetime, timezone

from .clock import Clock
from .errors import AuthFailure

_SCRYPT_N = 2**14
_SCRYPT_R = 8
_SCRYPT_P = 1


def hash_password(password: str, *, salt: bytes | None = None) -> str:
    salt = salt if salt is not None else os.urandom(16)
    digest = hashlib.scrypt(password.encode(), salt=salt, n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
    return f"scrypt${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, salt_hex, digest_hex = stored.split("$")
        if scheme != "scrypt":
            return False
        salt = bytes.fromhex(salt_hex)
        expected = bytes.fromhex(digest_hex)
    except ValueError:
        return False
    candidate = hashlib.scrypt(password.encode(), salt=salt, n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
    return hmac.compare_digest(candidate, expected)


def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _b64url_decode(segment: str) -> bytes:
    padded = segment + "=" * (-len(segment) % 4)
    return base64.urlsafe_b64decode(padded)


def issue_token(admin_id: str, email: str, *, secret: str, clock: Clock, ttl_seconds: int) -> str:
    now = int(clock.now().timestamp())
    header = {"alg": "HS256", "typ": "JWT"}
    payload = {"sub": admin_id, "email": email, "iat": now, "exp": now + ttl_seconds}
    signing_input = _b64url(json.dumps(header, separators=(",", ":")).encode()) + "." + _b64url(
        json.dumps(payload, separators=(",", ":")).encode()
    )
    signature = hmac.new(secret.encode(), signing_input.encode(), hashlib.sha256).digest()
    return signing_input + "." + _b64url(signature)


def verify_token(token: str, *, secret: str, clock: Clock) -> dict:
    try:
        header_b64, payload_b64, signature_b64 = token.split(".")
        signing_input = f"{header_b64}.{payload_b64}".encode()
        expected = hmac.new(secret.encode(), signing_input, hashlib.sha256).digest()
        if not hmac.compare_digest(expected, _b64url_decode(signature_b64)):
            raise AuthFailure("invalid token signature")
        payload = json.loads(_b64url_decode(payload_b64))
    except AuthFailure:
        raise
    except Exception:
        raise AuthFailure("malformed token") from None
    if int(clock.now().timestamp()) >= int(payload.get("exp", 0)):
        raise AuthFailure("token expired", code="token_expired")
    return payload


def sign_handoff(secret: str, participant_uuid: str, study_id: str, step_index: int) -> str:
    message = f"{participant_uuid}|{study_id}|{step_index}".encode()
    return hmac.new(secret.encode(), message, hashlib.sha256).hexdigest()


def verify_handoff(secret: str, participant_uuid: str, study_id: str, step_index: int, signature: str) -> bool:
    expected = sign_handoff(secret, participant_uuid, study_id, step_index)
    return hmac.compare_digest(expected, signature)


def utc_from_timestamp(ts: int) -> datetime:
    return datetime.fromtimestamp(ts, tz=timezone.utc)
