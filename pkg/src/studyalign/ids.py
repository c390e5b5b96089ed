"""Identifier and secret minting for all persistent entities."""

from __future__ import annotations

import base64
import random
import secrets
import uuid

# Stable entity id prefixes.
STUDY_PREFIX = "stu"
CONFIG_PREFIX = "cfg"
PROCEDURE_PREFIX = "proc"
ADMIN_PREFIX = "adm"
TEXT_PREFIX = "txt"
CONDITION_PREFIX = "cnd"
QUESTIONNAIRE_PREFIX = "qnr"
PAUSE_PREFIX = "pau"
BLOCK_PREFIX = "blk"

ELEMENT_PREFIXES = {
    "text": TEXT_PREFIX,
    "condition": CONDITION_PREFIX,
    "questionnaire": QUESTIONNAIRE_PREFIX,
    "pause": PAUSE_PREFIX,
    "block": BLOCK_PREFIX,
}


class IdSource:
    """Mints entity ids, participant UUIDs, and opaque secrets.

    An unseeded source draws from the OS RNG. Seeding produces a
    reproducible id stream, which test fixtures and golden exports rely
    on; production code never seeds.
    """

    def __init__(self, seed: int | None = None):
        self._rng = random.Random(seed) if seed is not None else None

    def entity_id(self, prefix: str) -> str:
        return f"{prefix}_{self._hex(12)}"

    def element_id(self, element_type: str) -> str:
        return self.entity_id(ELEMENT_PREFIXES[element_type])

    def participant_uuid(self) -> str:
        """Random v4 UUID; carries no personal data by construction."""
        if self._rng is None:
            return str(uuid.uuid4())
        return str(uuid.UUID(int=self._rng.getrandbits(128), version=4))

    def secret(self, nbytes: int = 24) -> str:
        if self._rng is None:
            return secrets.token_urlsafe(nbytes)
        raw = self._rng.randbytes(nbytes)
        return base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii")

    def _hex(self, nbytes: int) -> str:
        if self._rng is None:
            return secrets.token_hex(nbytes)
        return self._rng.randbytes(nbytes).hex()
