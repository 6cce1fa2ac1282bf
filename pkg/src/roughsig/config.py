"""Flat key/value config files for process specs and experiment runs.

Format: one `key = value` per line, `#` starts a comment.  Matrix values
use whitespace-separated entries with `;` between rows, e.g.
``P = 0.9 0.1 ; 0.2 0.8``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .processes import ProcessSpec, SuspensionSpec


def parse_flat(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_matrix(value: str) -> np.ndarray:
    rows = [
        [float(tok) for tok in row.replace(",", " ").split()]
        for row in value.split(";")
        if row.strip()
    ]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"ragged matrix literal: {value!r}")
    return np.array(rows, dtype=float)


def parse_vector(value: str) -> np.ndarray:
    return np.array([float(tok) for tok in value.replace(",", " ").split()], dtype=float)


def _require(table: dict[str, str], key: str) -> str:
    if key not in table:
        raise ValueError(f"missing required key {key!r}")
    return table[key]


def load_process_spec(path: str | Path):
    """Build a ProcessSpec or SuspensionSpec from a flat spec file."""
    table = parse_flat(Path(path).read_text())
    kind = _require(table, "kind")
    if kind == "iid":
        dim = int(table.get("d", "1"))
        cov = parse_matrix(table["cov"]) if "cov" in table else None
        return ProcessSpec.iid(dim=dim, cov=cov)
    if kind == "iid-exponential":
        return ProcessSpec.iid_exponential(dim=int(table.get("d", "1")))
    if kind == "ar1":
        return ProcessSpec.ar1(
            rho=float(_require(table, "rho")),
            innovation_std=float(table.get("innovation_std", "1.0")),
            dim=int(table.get("d", "1")),
        )
    if kind == "markov-functional":
        return ProcessSpec.markov_functional(
            parse_matrix(_require(table, "P")), parse_matrix(_require(table, "g"))
        )
    if kind == "subshift":
        return ProcessSpec.subshift(
            parse_matrix(_require(table, "adjacency")), parse_matrix(_require(table, "g"))
        )
    if kind == "doubling-map":
        return ProcessSpec.doubling_map(observable=table.get("observable", "cos2pi"))
    if kind == "gauss-map":
        return ProcessSpec.gauss_map(observable=table.get("observable", "centered-x"))
    if kind == "suspension":
        base = ProcessSpec.markov_functional(
            parse_matrix(_require(table, "P")),
            np.zeros((parse_matrix(table["P"]).shape[0], 1)),
        )
        return SuspensionSpec(
            base=base,
            roof=parse_vector(_require(table, "roof")),
            fiber_g=parse_matrix(_require(table, "g")),
        )
    raise ValueError(f"unknown spec kind {kind!r}")


def spec_file_text(kind: str, **kv) -> str:
    """Render a spec file body (used by tests and the CLI round trips)."""
    lines = [f"kind = {kind}"]
    for key, value in kv.items():
        if isinstance(value, np.ndarray) and value.ndim == 2:
            body = " ; ".join(" ".join(repr(float(x)) for x in row) for row in value)
        elif isinstance(value, np.ndarray):
            body = " ".join(repr(float(x)) for x in value)
        else:
            body = str(value)
        lines.append(f"{key} = {body}")
    return "\n".join(lines) + "\n"
