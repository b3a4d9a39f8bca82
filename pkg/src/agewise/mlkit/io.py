"""Versioned pickle container for fitted models."""

import pickle

from ..errors import FormatError

MAGIC = b"AGEWISE-MODEL"
VERSION = 1


def dumps_model(model) -> bytes:
    return MAGIC + bytes([VERSION]) + pickle.dumps(model, protocol=pickle.HIGHEST_PROTOCOL)


def loads_model(blob: bytes):
    if not blob.startswith(MAGIC):
        raise FormatError("not a model container")
    version = blob[len(MAGIC)]
    if version != VERSION:
        raise FormatError(f"unsupported model container version {version}")
    return pickle.loads(blob[len(MAGIC) + 1:])


def save_model(model, path):
    with open(path, "wb") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path, "rb") as fh:
        return loads_model(fh.read())
