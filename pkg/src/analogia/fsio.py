"""Atomic file writes: temp file in the target directory, then rename.

Keeps half-written outputs from ever appearing under their final name,
which the CLI relies on for its no-partial-outputs guarantee.
"""

from __future__ import annotations

import os
import tempfile


def _atomic_write(path, data, mode: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **({"encoding": "utf-8", "newline": "\n"} if "b" not in mode else {})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    _atomic_write(path, text, "w")


def atomic_write_bytes(path, data: bytes) -> None:
    _atomic_write(path, data, "wb")
