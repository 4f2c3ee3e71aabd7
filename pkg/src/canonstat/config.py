"""Run configuration documents (TOML).

A document has up to five tables::

    [basis]       family = "cosine" | "hermite" | "finite_gs" | "custom", max_index,
                  probabilities, table
    [kernel]      order, entries = [{index = [1, 1], value = 1.0}, ...]
                  or preset + truncation (+ decompose = true)
    [process]     kind = "iid" | "m_dependent" | "gaussian_ar1" | "finite_markov",
                  window, phi, uniformize, transition, stationary, probabilities
    [experiment]  statistic = "V" | "U", n, replications, x_grid, base_seed
    [output]      path

Unknown tables or keys are rejected with their line number.
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .basis import OrthonormalBasis, basis_from_config
from .kernels import CanonicalKernel, CoefficientTensor, RawKernel, hoeffding_decompose
from .processes import ProcessSpec, process_from_config

SCHEMA = {
    "basis": {"family": str, "max_index": int, "probabilities": list, "table": list},
    "kernel": {"order": int, "entries": list, "preset": str, "truncation": int,
               "decompose": bool, "quadrature_nodes": int},
    "process": {"kind": str, "window": int, "phi": float, "uniformize": bool,
                "transition": list, "stationary": list, "probabilities": list},
    "experiment": {"statistic": str, "n": int, "replications": int, "x_grid": list,
                   "base_seed": int},
    "output": {"path": str},
}

PRESETS = ("constant", "product_e1", "additive_e1", "shifted_product_e1")


class ConfigError(ValueError):
    """Malformed configuration; the message carries the location."""


def _line_of(text: str, table: str | None, key: str) -> int | None:
    lines = text.splitlines()
    start = 0
    if table is not None:
        for no, line in enumerate(lines):
            if re.match(rf"^\s*\[\s*{re.escape(table)}\s*\]", line):
                start = no
                break
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=|^\s*\[\s*{re.escape(key)}\s*\]")
    for no in range(start, len(lines)):
        if pat.match(lines[no]):
            return no + 1
    return None


def _where(text, table, key) -> str:
    line = _line_of(text, table, key) if text else None
    return f"line {line}" if line else "unknown line"


@dataclass
class RunConfig:
    basis: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)
    process: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    source: str | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_text(cls, text: str) -> RunConfig:
        try:
            doc = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"parse error: {exc}") from exc
        return cls.from_dict(doc, text)

    @classmethod
    def from_dict(cls, doc: dict, text: str | None = None) -> RunConfig:
        for table, body in doc.items():
            if table not in SCHEMA:
                raise ConfigError(f"unknown table [{table}] at {_where(text, None, table)}")
            if not isinstance(body, dict):
                raise ConfigError(f"[{table}] must be a table ({_where(text, None, table)})")
            for key, value in body.items():
                if key not in SCHEMA[table]:
                    raise ConfigError(
                        f"unknown key {table}.{key} at {_where(text, table, key)}")
                want = SCHEMA[table][key]
                ok = isinstance(value, want) and not (want is int and isinstance(value, bool))
                if want is float and isinstance(value, int) and not isinstance(value, bool):
                    ok = True
                if not ok:
                    raise ConfigError(f"{table}.{key} at {_where(text, table, key)} must be "
                                      f"of type {want.__name__}")
        return cls(**{k: copy.deepcopy(v) for k, v in doc.items()}, source=text)

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        try:
            return cls.from_text(text)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def to_dict(self) -> dict:
        return {name: copy.deepcopy(getattr(self, name)) for name in SCHEMA
                if getattr(self, name)}

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def require(self, table: str, key: str):
        body = getattr(self, table)
        if key not in body:
            raise ConfigError(f"missing required key {table}.{key}")
        return body[key]

    # -- builders -------------------------------------------------------

    def build_basis(self) -> OrthonormalBasis:
        if not self.basis:
            raise ConfigError("missing [basis] table")
        try:
            return basis_from_config(self.basis)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"[basis]: {exc}") from exc

    def build_kernel(self, basis: OrthonormalBasis | None = None):
        """Return ``(kernel, raw, decomposition)``.

        ``kernel`` is the canonical kernel used for statistics (for a
        decomposed preset, its top-order component); ``raw`` is the preset's
        pointwise kernel or ``None``.
        """
        basis = basis or self.build_basis()
        k = self.kernel
        if not k:
            raise ConfigError("missing [kernel] table")
        if "entries" in k and "preset" in k:
            raise ConfigError("[kernel] takes either entries or preset, not both")
        order = int(self.require("kernel", "order"))
        if "preset" in k:
            raw = make_preset(k["preset"], basis, order)
            if not k.get("decompose", False):
                return None, raw, None
            trunc = int(k.get("truncation", basis.max_index))
            try:
                dec = hoeffding_decompose(raw.func, basis, trunc, order,
                                          k.get("quadrature_nodes"))
            except ValueError as exc:
                raise ConfigError(f"[kernel]: {exc}") from exc
            top = dec.components.get(tuple(range(1, order + 1)))
            if top is None:
                top = CanonicalKernel(basis, CoefficientTensor(order, {}))
            return top, raw, dec
        entries = {}
        for no, item in enumerate(k.get("entries", [])):
            if not isinstance(item, dict) or set(item) != {"index", "value"}:
                raise ConfigError(f"kernel.entries[{no}] needs exactly 'index' and 'value'")
            entries[tuple(item["index"])] = item["value"]
        try:
            return CanonicalKernel(basis, CoefficientTensor(order, entries)), None, None
        except ValueError as exc:
            raise ConfigError(f"[kernel]: {exc}") from exc

    def build_process(self, basis: OrthonormalBasis | None = None) -> ProcessSpec:
        if not self.process:
            raise ConfigError("missing [process] table")
        probs = None
        if basis is not None and basis.marginal.probabilities is not None:
            probs = basis.marginal.probabilities.tolist()
        try:
            return process_from_config(self.process, basis.space if basis else None, probs)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"[process]: {exc}") from exc


def make_preset(name: str, basis: OrthonormalBasis, order: int) -> RawKernel:
    """Pointwise kernels built from ``e_1``; only ``product_e1`` is canonical."""
    e1 = lambda t: basis(1, t)  # noqa: E731
    if name == "constant":
        def func(*args):
            return np.ones(np.broadcast_shapes(*(np.shape(a) for a in args)))
    elif name == "product_e1":
        def func(*args):
            out = 1.0
            for a in args:
                out = out * e1(a)
            return out
    elif name == "additive_e1":
        def func(*args):
            return sum(e1(a) for a in args)
    elif name == "shifted_product_e1":
        def func(*args):
            out = 1.0
            for a in args:
                out = out * (e1(a) + 1.0)
            return out
    else:
        raise ConfigError(f"unknown kernel preset {name!r}; choose from {', '.join(PRESETS)}")
    return RawKernel(func, order, basis)

