import hashlib
import json
from pathlib import Path

CHUNK_SIZE = 1 << 14


def key_hash(mapping):
    """
    32-character md5 of the mapping's values sorted by key name.
    Nested sections enter as canonical JSON, so two experiment configs with the same
    content share one fingerprint.
    """
    hashed = hashlib.md5()
    for k, v in sorted(mapping.items()):
        if isinstance(v, (dict, list, tuple)):
            v = json.dumps(v, sort_keys=True, default=str)
        hashed.update(str(v).encode())
    return hashed.hexdigest()


def buffer_digest(buffer=b""):
    """
    :return: md5 hex digest of a checkpoint's bytes
    """
    return hashlib.md5(buffer).hexdigest()


def file_digest(filepath):
    """
    md5 hex digest of a file, read in chunks; equals buffer_digest of its contents.
    """
    hashed = hashlib.md5()
    with Path(filepath).open("rb") as f:
        for chunk in iter(lambda: f.read(CHUNK_SIZE), b""):
            hashed.update(chunk)
    return hashed.hexdigest()
