"""Flat-file report formats.

Tables are tab-separated with a versioned ``#`` header. Numbers are written
as ``p/q`` in exact mode and with 17 significant digits in floating mode, so
files are byte-identical across reruns. ``summary.json`` tags every number
with its arithmetic mode.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._numeric import fmt_number, parse_number
from .errors import ConfigurationError
from .primal import StoppingFlow
from .walkspace import PathTree

FORMAT_VERSION = "v1"


def _header(kind: str, meta: dict | None) -> list[str]:
    lines = [f"# stopgo {kind} {FORMAT_VERSION}"]
    if meta:
        lines.append("# " + " ".join(f"{k}={meta[k]}" for k in sorted(meta)))
    return lines


def write_table(path: Path, kind: str, columns: Sequence[str], rows: Iterable[Sequence[str]], meta: dict | None = None):
    lines = _header(kind, meta) + ["\t".join(columns)] + ["\t".join(str(c) for c in r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path: Path, kind: str) -> tuple[dict, list[str], list[list[str]]]:
    """``(meta, columns, rows)`` of a table written by :func:`write_table`."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise ConfigurationError(f"cannot read {kind} file: {e}") from None
    if not lines or lines[0].strip() != f"# stopgo {kind} {FORMAT_VERSION}":
        raise ConfigurationError(f"{path}: expected header '# stopgo {kind} {FORMAT_VERSION}'", line=1)
    meta: dict = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        for tok in lines[i][1:].split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                meta[k] = v
        i += 1
    if i >= len(lines):
        raise ConfigurationError(f"{path}: missing column header", line=i + 1)
    cols = lines[i].split("\t")
    rows = [ln.split("\t") for ln in lines[i + 1 :] if ln.strip()]
    return meta, cols, rows


def tree_meta(tree: PathTree, exact: bool) -> dict:
    return {
        "horizon": tree.horizon,
        "tree": tree.mode.value,
        "statistic": tree.statistic.value,
        "arithmetic": "exact" if exact else "floating",
    }


def write_flow(path: Path, flow: StoppingFlow):
    write_table(path, "flow", ("node", "stop", "continue"), flow.records(), tree_meta(flow.tree, flow.exact))


def read_flow(path: Path, tree: PathTree, exact: bool) -> StoppingFlow:
    """Load a flow for ``tree``; every node must appear exactly once."""
    meta, cols, rows = read_table(path, "flow")
    if cols != ["node", "stop", "continue"]:
        raise ConfigurationError(f"{path}: unexpected columns {cols}")
    if "horizon" in meta and int(meta["horizon"]) != tree.horizon:
        raise ConfigurationError(f"{path}: flow horizon {meta['horizon']} does not match the config ({tree.horizon})")
    stop = [None] * tree.n_nodes
    cont = [None] * tree.n_nodes
    for k, r in enumerate(rows):
        if len(r) != 3:
            raise ConfigurationError(f"{path}: row {k + 1} has {len(r)} fields")
        v = tree.index(r[0])
        try:
            stop[v] = parse_number(r[1], exact)
            cont[v] = parse_number(r[2], exact)
        except (ValueError, ZeroDivisionError):
            raise ConfigurationError(f"{path}: bad number in row {k + 1}") from None
    missing = [tree.keys[v] for v in range(tree.n_nodes) if stop[v] is None]
    if missing:
        raise ConfigurationError(f"{path}: {len(missing)} nodes missing, e.g. {missing[0]!r}")
    return StoppingFlow(tree, stop, cont, exact)


def node_rows(tree: PathTree, nodes: Iterable[int]) -> list[tuple[str, str, str]]:
    return [(tree.keys[v], str(int(tree.depth[v])), str(int(tree.value[v]))) for v in nodes]


def write_nodes(path: Path, kind: str, tree: PathTree, nodes: Iterable[int], exact: bool):
    write_table(path, kind, ("node", "depth", "value"), node_rows(tree, nodes), tree_meta(tree, exact))


def tagged(x, exact: bool) -> dict | None:
    if x is None:
        return None
    return {"mode": "exact" if exact else "floating", "value": fmt_number(x, exact)}


def untag(d: dict | None):
    if d is None:
        return None
    return parse_number(d["value"], d["mode"] == "exact")


def write_summary(path: Path, summary: dict):
    Path(path).write_text(json.dumps(_plain(summary), sort_keys=True, indent=2) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
