"""Vectors, dictionaries and the signed atom-selection step.

Vectors are plain 1-D float64 numpy arrays. A dictionary stores each atom
once; the symmetric counterpart ``-g`` is reached through the sign of the
selection rather than stored.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import IO, Union

import numpy as np

ATOM_NORM_TOL = 1e-9
ZERO_ATOM_TOL = 1e-12
SELECTION_SLACK = 1e-12

POLICIES = ("max", "threshold_first")


class DictionaryError(ValueError):
    """Base class for dictionary loading failures."""


class DictionaryParseError(DictionaryError):
    pass


class InconsistentRowsError(DictionaryError):
    pass


class ZeroAtomError(DictionaryError):
    pass


def as_vector(x) -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 array with at least one entry."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def inner(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


@dataclass(frozen=True)
class Dictionary:
    """A finite set of unit-norm atoms, stored as the rows of ``atoms``."""

    atoms: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"atoms must be a non-empty 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("atoms have non-finite entries")
        norms = np.linalg.norm(a, axis=1)
        if np.any(np.abs(norms - 1.0) > ATOM_NORM_TOL):
            raise ValueError("atoms must have unit norm (use Dictionary.from_rows to normalize)")
        a = a / norms[:, None]
        a.setflags(write=False)
        object.__setattr__(self, "atoms", a)

    @classmethod
    def from_rows(cls, rows, label: str = "") -> "Dictionary":
        """Build a dictionary from raw rows, normalizing each to unit norm."""
        try:
            a = np.array(rows, dtype=np.float64)
        except ValueError as exc:
            raise InconsistentRowsError(str(exc)) from None
        if a.ndim != 2:
            raise InconsistentRowsError("rows have inconsistent lengths")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise DictionaryParseError("no atoms")
        if not np.all(np.isfinite(a)):
            raise DictionaryParseError("non-finite coordinate")
        norms = np.linalg.norm(a, axis=1)
        bad = np.flatnonzero(norms < ZERO_ATOM_TOL)
        if bad.size:
            raise ZeroAtomError(f"atom {int(bad[0])} has norm below {ZERO_ATOM_TOL:g}")
        return cls(a / norms[:, None], label=label)

    @classmethod
    def orthonormal(cls, dim: int) -> "Dictionary":
        return cls(np.eye(dim), label=f"orthonormal:{dim}")

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def __len__(self) -> int:
        return self.atoms.shape[0]

    def atom(self, index: int, sign: int = 1) -> np.ndarray:
        return sign * self.atoms[index]


@dataclass(frozen=True)
class AtomSelection:
    index: int
    sign: int
    value: float
    sup_value: float


def _parse_csv_rows(text: str) -> list[list[float]]:
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not any(cells):
            continue
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise DictionaryParseError(f"line {lineno}: not a decimal number in {row!r}") from None
    if not rows:
        raise DictionaryParseError("no atoms found")
    if len({len(r) for r in rows}) != 1:
        raise InconsistentRowsError("rows have inconsistent lengths")
    return rows


def load_dictionary(source: Union[bytes, str, IO], format: str = "csv", label: str = "") -> Dictionary:
    """Load a dictionary from CSV (one atom per row) or JSON.

    The JSON form is ``{"dim": n, "atoms": [[...], ...]}``. Atoms are
    normalized to unit norm on load.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DictionaryParseError(str(exc)) from None
    if format == "csv":
        rows = _parse_csv_rows(source)
    elif format == "json":
        try:
            obj = json.loads(source)
        except json.JSONDecodeError as exc:
            raise DictionaryParseError(str(exc)) from None
        if not isinstance(obj, dict) or "atoms" not in obj:
            raise DictionaryParseError('expected an object with an "atoms" list')
        rows = obj["atoms"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise DictionaryParseError('"atoms" must be a non-empty list of lists')
        if len({len(r) for r in rows}) != 1:
            raise InconsistentRowsError("rows have inconsistent lengths")
        if "dim" in obj and obj["dim"] != len(rows[0]):
            raise InconsistentRowsError(f'"dim" is {obj["dim"]} but atoms have length {len(rows[0])}')
        try:
            rows = [[float(x) for x in r] for r in rows]
        except (TypeError, ValueError):
            raise DictionaryParseError("non-numeric coordinate") from None
    else:
        raise ValueError(f"unknown dictionary format {format!r}")
    return Dictionary.from_rows(rows, label=label)


def load_signal(source: Union[bytes, str, IO]) -> np.ndarray:
    """Read a signal stored as a single CSV row of coordinates."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    rows = _parse_csv_rows(source)
    if len(rows) != 1:
        raise DictionaryParseError(f"expected a single row, found {len(rows)}")
    return as_vector(rows[0])


def dictionary_to_csv(D: Dictionary) -> str:
    return "".join(",".join(format(x, ".17g") for x in row) + "\n" for row in D.atoms)


def _check_dims(f: np.ndarray, D: Dictionary):
    if f.shape != (D.dim,):
        raise ValueError(f"dimension mismatch: signal {f.shape} vs dictionary dim {D.dim}")


def best_atom(f, D: Dictionary) -> AtomSelection:
    """Return the signed atom maximizing ``<f, ±g>``.

    Ties go to the lowest atom index, then to sign +1.
    """
    f = np.asarray(f, dtype=np.float64)
    _check_dims(f, D)
    ips = D.atoms @ f
    mags = np.abs(ips)
    i = int(np.argmax(mags))
    sup = float(mags[i])
    sign = 1 if ips[i] >= 0 else -1
    return AtomSelection(i, sign, sup, sup)


def weak_atom(f, D: Dictionary, t: float, policy: str = "max") -> AtomSelection:
    """Select a signed atom with ``<f, ±g> >= t * sup``.

    ``policy="max"`` returns the maximizer; ``policy="threshold_first"``
    returns the lowest-indexed atom that clears the threshold, which is
    usually not the maximizer when ``t < 1``.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError(f"weakness parameter t={t} outside (0, 1]")
    if policy not in POLICIES:
        raise ValueError(f"unknown selection policy {policy!r}")
    f = np.asarray(f, dtype=np.float64)
    _check_dims(f, D)
    ips = D.atoms @ f
    mags = np.abs(ips)
    i_max = int(np.argmax(mags))
    sup = float(mags[i_max])
    if policy == "max":
        i = i_max
    else:
        # first index clearing the threshold; i_max always qualifies
        i = int(np.argmax(mags >= t * sup - SELECTION_SLACK))
    sign = 1 if ips[i] >= 0 else -1
    return AtomSelection(i, sign, float(mags[i]), sup)
