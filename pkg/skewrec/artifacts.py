"""Skewrec Artifacts Module

Helpers for writing output files so that a failed command never leaves a
partially written file behind.
"""
import json
import os
import tempfile
from contextlib import contextmanager


@contextmanager
def atomic_path(path):
    """Yield a temporary sibling path that is renamed onto `path` on success.

    Keyword Arguments:
    path                   -- Final destination of the file.

    Return Value:
    Context manager yielding the temporary path.  If the body raises, the
    temporary file is removed and the destination is left untouched.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=os.path.basename(path), dir=directory)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


@contextmanager
def atomic_open(path, mode="w", encoding="utf-8"):
    with atomic_path(path) as tmp:
        if "b" in mode:
            with open(tmp, mode) as f:
                yield f
        else:
            with open(tmp, mode, encoding=encoding, newline="") as f:
                yield f


def write_json(path, payload):
    with atomic_open(path) as f:
        json.dump(payload, f, indent=2, ensure_ascii=False, sort_keys=False)
        f.write("\n")


def write_text(path, text):
    with atomic_open(path) as f:
        f.write(text)
