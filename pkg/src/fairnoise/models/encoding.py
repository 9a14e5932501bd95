"""Feature-matrix encoding shared by the margin-based learners and the tree.

Continuous columns are z-scored with training-set statistics; discrete
columns expand to one-hot indicators over the categories seen at fit time.
A category unseen at fit time encodes to an all-zeros block (noise never
invents categories, so this path only guards user-supplied data).  When a
model consumes the protected attribute as an ordinary feature, it is
appended as one extra 0/1 column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fairnoise.dataset import CONTINUOUS, Dataset


class ModelsError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnCodec:
    name: str
    tag: str
    mean: float = 0.0
    std: float = 1.0
    categories: tuple = ()

    @property
    def width(self) -> int:
        return 1 if self.tag == CONTINUOUS else len(self.categories)


@dataclass(frozen=True)
class FeatureEncoder:
    codecs: tuple
    include_protected: bool

    @property
    def width(self) -> int:
        return sum(c.width for c in self.codecs) + (1 if self.include_protected else 0)

    @property
    def arity(self) -> int:
        """Raw cells expected per row (features, plus protected if consumed)."""
        return len(self.codecs) + (1 if self.include_protected else 0)

    def transform(self, ds: Dataset) -> np.ndarray:
        if ds.n_features != len(self.codecs):
            raise ModelsError(
                f"dataset has {ds.n_features} feature columns, encoder expects {len(self.codecs)}"
            )
        out = np.zeros((ds.n_rows, self.width))
        offset = 0
        for j, codec in enumerate(self.codecs):
            col = ds.columns[j]
            kind = ds.kinds[j]
            if codec.tag == CONTINUOUS:
                if kind.tag != CONTINUOUS:
                    raise ModelsError(f"column {codec.name!r}: expected continuous values")
                out[:, offset] = (col - codec.mean) / codec.std
            else:
                if kind.tag == CONTINUOUS:
                    raise ModelsError(f"column {codec.name!r}: expected categories")
                slot_of = {value: s for s, value in enumerate(codec.categories)}
                remap = np.array([slot_of.get(v, -1) for v in kind.categories], dtype=np.int64)
                slots = remap[col]
                seen = slots >= 0
                rows = np.flatnonzero(seen)
                out[rows, offset + slots[rows]] = 1.0
            offset += codec.width
        if self.include_protected:
            ds.require_binary_protected()
            out[:, offset] = ds.protected
        return out

    def transform_row(self, row) -> np.ndarray:
        """Encode one raw row (sequence of cell values, protected last if consumed)."""
        cells = list(row)
        if len(cells) != self.arity:
            raise ModelsError(f"row has {len(cells)} cells, encoder expects {self.arity}")
        out = np.zeros(self.width)
        offset = 0
        for codec, cell in zip(self.codecs, cells):
            if codec.tag == CONTINUOUS:
                out[offset] = (float(cell) - codec.mean) / codec.std
            else:
                slot_of = {value: s for s, value in enumerate(codec.categories)}
                slot = slot_of.get(cell, -1)
                if slot >= 0:
                    out[offset + slot] = 1.0
            offset += codec.width
        if self.include_protected:
            a = int(cells[-1])
            if a not in (0, 1):
                raise ModelsError("protected cell must be 0 or 1")
            out[offset] = a
        return out


def fit_encoder(ds: Dataset, include_protected: bool) -> FeatureEncoder:
    codecs = []
    for name, kind, col in zip(ds.names, ds.kinds, ds.columns):
        if kind.tag == CONTINUOUS:
            std = float(col.std())
            codecs.append(ColumnCodec(name, CONTINUOUS, float(col.mean()), std if std > 0 else 1.0))
        else:
            codecs.append(ColumnCodec(name, kind.tag, categories=kind.categories))
    if include_protected:
        ds.require_binary_protected()
    return FeatureEncoder(tuple(codecs), include_protected)
