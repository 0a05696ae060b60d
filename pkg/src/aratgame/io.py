"""JSON formats for game instances, policy profiles and reports.

Per-state tables only list feasible actions, in the order of the state's
action labels.  Floats are written with ``repr`` precision, so reading a
file back reproduces every value bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .game import GameInstance
from .validation import StationaryPolicy, check_policy


class FormatError(ValueError):
    """Malformed document; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def _number(v, field):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise FormatError(field, f"expected a finite number, got {v!r}")
    return float(v)


def _vector(doc, key, length=None):
    v = _get(doc, key)
    if not isinstance(v, list):
        raise FormatError(key, "expected an array")
    out = [_number(e, f"{key}[{i}]") for i, e in enumerate(v)]
    if length is not None and len(out) != length:
        raise FormatError(key, f"expected {length} entries, got {len(out)}")
    return np.array(out, dtype=float)


def _get(doc, key):
    if key not in doc:
        raise FormatError(key, "missing")
    return doc[key]


def _labels(doc, key, n_states):
    v = _get(doc, key)
    if not isinstance(v, list) or len(v) != n_states:
        raise FormatError(key, f"expected one label array per state ({n_states})")
    out = []
    for x, row in enumerate(v):
        if not isinstance(row, list) or not row:
            raise FormatError(f"{key}[{x}]", "expected a nonempty array of action labels")
        out.append(tuple(str(a) for a in row))
    return tuple(out)


def _state_action(doc, key, counts, width, depth=None):
    """Read ``[state][action]`` (or ``[state][action][k]`` when ``depth`` is given)."""
    v = _get(doc, key)
    nX = len(counts)
    shape = (nX, width) if depth is None else (nX, width, depth)
    out = np.zeros(shape)
    if not isinstance(v, list) or len(v) != nX:
        raise FormatError(key, f"expected {nX} per-state arrays")
    for x, row in enumerate(v):
        if not isinstance(row, list) or len(row) != counts[x]:
            raise FormatError(f"{key}[{x}]", f"expected {counts[x]} entries")
        for a, cell in enumerate(row):
            where = f"{key}[{x}][{a}]"
            if depth is None:
                out[x, a] = _number(cell, where)
            else:
                if not isinstance(cell, list) or len(cell) != depth:
                    raise FormatError(where, f"expected {depth} constraint components")
                out[x, a] = [_number(c, f"{where}[{k}]") for k, c in enumerate(cell)]
    return out


def _density(doc, key, counts, width):
    v = _get(doc, key)
    nX = len(counts)
    out = np.zeros((nX, nX, width))
    if not isinstance(v, list) or len(v) != nX:
        raise FormatError(key, f"expected {nX} arrays indexed by next state")
    for y, block in enumerate(v):
        if not isinstance(block, list) or len(block) != nX:
            raise FormatError(f"{key}[{y}]", f"expected {nX} arrays indexed by current state")
        for x, row in enumerate(block):
            if not isinstance(row, list) or len(row) != counts[x]:
                raise FormatError(f"{key}[{y}][{x}]", f"expected {counts[x]} entries")
            for a, cell in enumerate(row):
                out[y, x, a] = _number(cell, f"{key}[{y}][{x}][{a}]")
    return out


def instance_from_dict(doc: dict) -> GameInstance:
    if not isinstance(doc, dict):
        raise FormatError("<root>", "expected a JSON object")
    states = _get(doc, "states")
    if not isinstance(states, list) or not states:
        raise FormatError("states", "expected a nonempty array of state labels")
    nX = len(states)
    actions1 = _labels(doc, "actions1", nX)
    actions2 = _labels(doc, "actions2", nX)
    k1 = [len(r) for r in actions1]
    k2 = [len(r) for r in actions2]
    n1, n2 = max(k1), max(k2)
    p = _get(doc, "p")
    if isinstance(p, bool) or not isinstance(p, int) or p < 0:
        raise FormatError("p", f"expected a nonnegative integer, got {p!r}")
    mask1 = np.arange(n1)[None, :] < np.array(k1)[:, None]
    mask2 = np.arange(n2)[None, :] < np.array(k2)[:, None]
    try:
        return GameInstance(
            states=tuple(str(s) for s in states),
            actions1=actions1,
            actions2=actions2,
            mask1=mask1,
            mask2=mask2,
            beta=_number(_get(doc, "beta"), "beta"),
            eta=_vector(doc, "eta", nX),
            rho1=_vector(doc, "rho1", p),
            rho2=_vector(doc, "rho2", p),
            r1_own=_state_action(doc, "r1_own", k1, n1),
            r1_opp=_state_action(doc, "r1_opp", k2, n2),
            r2_own=_state_action(doc, "r2_own", k2, n2),
            r2_opp=_state_action(doc, "r2_opp", k1, n1),
            c1_own=_state_action(doc, "c1_own", k1, n1, p),
            c1_opp=_state_action(doc, "c1_opp", k2, n2, p),
            c2_own=_state_action(doc, "c2_own", k2, n2, p),
            c2_opp=_state_action(doc, "c2_opp", k1, n1, p),
            q1=_density(doc, "q1", k1, n1),
            q2=_density(doc, "q2", k2, n2),
        )
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError("<instance>", str(exc)) from exc


def _rows(table, mask):
    return [table[x][mask[x]].tolist() for x in range(mask.shape[0])]


def instance_to_dict(game: GameInstance) -> dict:
    m1, m2 = game.mask1, game.mask2
    nX = game.n_states
    return {
        "states": list(game.states),
        "actions1": [list(r) for r in game.actions1],
        "actions2": [list(r) for r in game.actions2],
        "beta": game.beta,
        "eta": game.eta.tolist(),
        "p": game.p,
        "rho1": game.rho1.tolist(),
        "rho2": game.rho2.tolist(),
        "r1_own": _rows(game.r1_own, m1),
        "r1_opp": _rows(game.r1_opp, m2),
        "r2_own": _rows(game.r2_own, m2),
        "r2_opp": _rows(game.r2_opp, m1),
        "c1_own": _rows(game.c1_own, m1),
        "c1_opp": _rows(game.c1_opp, m2),
        "c2_own": _rows(game.c2_own, m2),
        "c2_opp": _rows(game.c2_opp, m1),
        "q1": [[game.q1[y, x][m1[x]].tolist() for x in range(nX)] for y in range(nX)],
        "q2": [[game.q2[y, x][m2[x]].tolist() for x in range(nX)] for y in range(nX)],
    }


def policy_to_rows(game: GameInstance, policy: StationaryPolicy) -> list:
    return _rows(policy.table, game.mask(policy.player))


def policy_from_rows(game: GameInstance, rows, player: int, field: str) -> StationaryPolicy:
    mask = game.mask(player)
    nX = game.n_states
    if not isinstance(rows, list) or len(rows) != nX:
        raise FormatError(field, f"expected {nX} per-state arrays")
    table = np.zeros(mask.shape)
    for x, row in enumerate(rows):
        k = int(mask[x].sum())
        if not isinstance(row, list) or len(row) != k:
            raise FormatError(f"{field}[{x}]", f"expected {k} probabilities")
        table[x, mask[x]] = [_number(v, f"{field}[{x}][{a}]") for a, v in enumerate(row)]
    try:
        return check_policy(game, table, player)
    except ValueError as exc:
        raise FormatError(field, str(exc)) from exc


def profile_to_dict(game: GameInstance, pi1: StationaryPolicy, pi2: StationaryPolicy) -> dict:
    return {
        "states": list(game.states),
        "actions1": [list(r) for r in game.actions1],
        "actions2": [list(r) for r in game.actions2],
        "pi1": policy_to_rows(game, pi1),
        "pi2": policy_to_rows(game, pi2),
    }


def _check_labels(game: GameInstance, doc: dict):
    expected = {"states": list(game.states),
                "actions1": [list(r) for r in game.actions1],
                "actions2": [list(r) for r in game.actions2]}
    for key, want in expected.items():
        if key in doc and doc[key] != want:
            raise FormatError(key, "labels do not match the instance")


def profile_from_dict(game: GameInstance, doc: dict, keys=("pi1", "pi2")) -> list:
    """Read the requested policies from a profile document (labels, when present, must match)."""
    if not isinstance(doc, dict):
        raise FormatError("<root>", "expected a JSON object")
    _check_labels(game, doc)
    out = []
    for key in keys:
        player = 1 if key == "pi1" else 2
        out.append(policy_from_rows(game, _get(doc, key), player, key))
    return out


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(str(path), f"cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(str(path), f"invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def load_instance(path) -> GameInstance:
    return instance_from_dict(read_json(path))


def save_instance(path, game: GameInstance) -> None:
    write_json(path, instance_to_dict(game))
