"""
On-disk store of solved guided modes.

One JSON document per store; each entry carries the geometry digest, the
dispersion-model digest, its inputs, the solved values and a sha256 over
all of those. Entries whose digest does not verify, or a file that does not
parse, are ignored (a miss), never trusted.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from .material import SellmeierModel
from .waveguide import GuidedMode, Polarization, WaveguideGeometry, preload_modes, solve_mode, stored_modes

CACHE_ENV = "DUALPPLN_CACHE_DIR"
STORE_NAME = "modes.json"
FORMAT = 1


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "dualppln"


def model_digest(model: SellmeierModel) -> str:
    return hashlib.sha256(repr(model).encode()).hexdigest()[:16]


def _entry(model, mode: GuidedMode) -> dict:
    g = mode.geometry
    body = {
        "geometry": [g.width, g.depth, g.dn_max, g.lateral_diffusion],
        "geometry_digest": g.digest(),
        "model_digest": model_digest(model),
        "pol": mode.pol.value,
        "wavelength": mode.wavelength,
        "temperature": mode.temperature,
        "n_eff": mode.n_eff,
        "w_y": mode.w_y,
        "w_z": mode.w_z,
        "n_bulk": mode.n_bulk,
    }
    body["digest"] = _digest(body)
    return body


def _digest(body: dict) -> str:
    payload = {k: v for k, v in body.items() if k != "digest"}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _key(body: dict):
    return (body["geometry_digest"], body["model_digest"], body["pol"], body["wavelength"], body["temperature"])


def read_store(path) -> list[dict]:
    """Verified entries of a store; unreadable or tampered content is dropped."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = doc["entries"] if doc.get("format") == FORMAT else []
    except (OSError, ValueError, KeyError, TypeError, AttributeError):
        return []
    good = []
    for body in entries:
        try:
            if isinstance(body, dict) and body.get("digest") == _digest(body):
                good.append(body)
        except TypeError:
            continue
    return good


def write_store(path, entries) -> int:
    """Atomically replace the store with ``entries`` (sorted for stable bytes)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    uniq = {_key(b): b for b in entries}
    doc = {"format": FORMAT, "entries": [uniq[k] for k in sorted(uniq)]}
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".modes-", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    os.replace(tmp, path)
    return len(uniq)


def load_modes(path, geom: WaveguideGeometry | None, model: SellmeierModel) -> int:
    """Preload the in-memory memo with stored modes for ``model``.

    ``geom=None`` accepts every stored geometry; otherwise only entries whose
    geometry digest matches are used.
    """
    md = model_digest(model)
    loaded = []
    for body in read_store(path):
        if body["model_digest"] != md:
            continue
        try:
            g = WaveguideGeometry(*map(float, body["geometry"]))
        except (TypeError, ValueError):
            continue
        if g.digest() != body["geometry_digest"] or (geom is not None and g.digest() != geom.digest()):
            continue
        loaded.append((model, GuidedMode(
            Polarization.parse(body["pol"]), float(body["wavelength"]), float(body["temperature"]),
            float(body["n_eff"]), float(body["w_y"]), float(body["w_z"]), float(body["n_bulk"]), g,
        )))
    preload_modes(loaded)
    return len(loaded)


def save_modes(path) -> int:
    """Merge every memoized mode into the store; returns the number of new entries."""
    existing = read_store(path)
    keys = {_key(b) for b in existing}
    fresh = [_entry(model, mode) for model, mode in stored_modes()]
    added = [b for b in fresh if _key(b) not in keys]
    if added:
        write_store(path, existing + added)
    return len(added)


def cache_modes(store_path, geom: WaveguideGeometry, entries, model: SellmeierModel | None = None) -> int:
    """Solve ``entries`` of (pol, lam, T) for ``geom`` and persist them.

    Stored modes are reused instead of re-solved. Returns how many entries
    were newly persisted.
    """
    from .material import CONGRUENT_LN

    model = CONGRUENT_LN if model is None else model
    load_modes(store_path, geom, model)
    for pol, lam, T in entries:
        solve_mode(geom, pol, lam, T, model)
    return save_modes(store_path)
