"""Deterministic seed fan-out: every stage derives its RNG seed from the
single top-level seed plus a stage label, via stable hashing."""

import hashlib


def stable_seed(root: int, *labels) -> int:
    key = ":".join([str(root), *map(str, labels)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % (2**32)
