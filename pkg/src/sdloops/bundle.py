"""Analysis bundle serialization: canonical JSON, versioned, byte-reproducible.

The bundle is the product of `analyze` and the only input `export-cld` and the
browser explorer consume. Series are stored as flat float lists over the
shared time axis; writing the same analysis twice yields identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile

SCHEMA_VERSION = "1.0"


class BundleError(Exception):
    pass


def dumps_bundle(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def write_bundle(path: str, bundle: dict):
    write_text_atomic(path, dumps_bundle(bundle))


def write_text_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sdloops-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_bundle(path: str) -> dict:
    try:
        with open(path) as fh:
            bundle = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BundleError(f"cannot read bundle {path}: {exc}") from None
    return check_bundle(bundle)


def check_bundle(bundle) -> dict:
    if not isinstance(bundle, dict):
        raise BundleError("bundle is not a JSON object")
    version = bundle.get("schema_version")
    if not isinstance(version, str) or "." not in version:
        raise BundleError("bundle has no schema_version")
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise BundleError(f"unsupported bundle schema version {version}")
    for key in ("time", "edges", "loops", "variables", "partitions", "sim"):
        if key not in bundle:
            raise BundleError(f"bundle is missing {key!r}")
    return bundle
