"""Run manifests: every artifact-producing command leaves one behind.

A manifest records what was run (command and arguments), the seeds
involved, and the artifacts written, so any output directory is
self-describing. The creation timestamp is the only non-deterministic
field; artifact byte-identity checks compare the artifacts themselves,
not the manifest.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone

from . import __version__


def _timestamp() -> str:
    """Current UTC time, or the SOURCE_DATE_EPOCH override when set.

    Honouring SOURCE_DATE_EPOCH keeps repeated runs byte-identical for
    reproducibility checks while normal runs still record wall time.
    """
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        now = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        now = datetime.now(timezone.utc)
    return now.isoformat(timespec="seconds")


def write_manifest(
    path: str | os.PathLike,
    command: str,
    args: dict,
    seeds,
    outputs,
) -> dict:
    """Write a manifest JSON file and return the document.

    Parameters
    ----------
    path : path
        Where to write the manifest itself.
    command : str
        The subcommand name.
    args : dict
        The command arguments as given (paths kept verbatim).
    seeds : int, dict, list, or None
        Every seed the run consumed.
    outputs : sequence of path
        Artifacts produced, stored as basenames relative to the
        manifest's directory when possible.
    """
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    rel_outputs = []
    for out in outputs:
        out = os.path.abspath(os.fspath(out))
        try:
            rel = os.path.relpath(out, base)
        except ValueError:  # different drive on some platforms
            rel = out
        rel_outputs.append(rel if not rel.startswith("..") else out)
    doc = {
        "tool": "mirrorgame",
        "version": __version__,
        "command": command,
        "args": {k: _plain(v) for k, v in sorted(args.items())},
        "seeds": _plain(seeds),
        "outputs": sorted(rel_outputs),
        "created_utc": _timestamp(),
    }
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(doc, f, sort_keys=True, indent=2)
        f.write("\n")
    return doc


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, os.PathLike):
        return os.fspath(v)
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    return str(v)
