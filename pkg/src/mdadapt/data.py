"""In-memory containers for labeled vector collections.

The same container carries raw input vectors and extracted embeddings:
records of (id, vector, optional speaker, optional domain index, optional
code string).
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DataError, ShapeError


@dataclass
class Record:
    id: str
    vector: np.ndarray
    speaker: Optional[str] = None
    domain: Optional[int] = None
    code: Optional[str] = None

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.ndim != 1:
            raise ShapeError(f"record {self.id}: vector must be 1-D")


@dataclass
class LabeledVectorSet:
    records: list = field(default_factory=list)

    def __post_init__(self):
        ids = set()
        dim = None
        for rec in self.records:
            if rec.id in ids:
                raise DataError(f"duplicate id {rec.id!r}")
            ids.add(rec.id)
            if dim is None:
                dim = rec.vector.shape[0]
            elif rec.vector.shape[0] != dim:
                raise DataError(
                    f"record {rec.id!r} has dim {rec.vector.shape[0]}, expected {dim}"
                )

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def dim(self):
        if not self.records:
            raise DataError("empty set has no dimension")
        return self.records[0].vector.shape[0]

    @property
    def ids(self):
        return [rec.id for rec in self.records]

    def vectors(self):
        """All vectors stacked into an (n, dim) matrix, record order."""
        return np.stack([rec.vector for rec in self.records])

    def speakers(self):
        return [rec.speaker for rec in self.records]

    def domains(self):
        return [rec.domain for rec in self.records]

    def by_id(self, rec_id):
        for rec in self.records:
            if rec.id == rec_id:
                return rec
        raise DataError(f"unknown id {rec_id!r}")

    def has_speaker_labels(self):
        return any(rec.speaker is not None for rec in self.records)

    def with_domains(self, assignments):
        """New set with domain indices from an id -> index mapping."""
        out = []
        for rec in self.records:
            if rec.id not in assignments:
                raise DataError(f"no domain assignment for id {rec.id!r}")
            out.append(replace(rec, domain=int(assignments[rec.id])))
        return LabeledVectorSet(out)

    def without_speakers(self):
        """Public view with the speaker field withheld."""
        return LabeledVectorSet([replace(rec, speaker=None) for rec in self.records])

    def with_vectors(self, matrix):
        """New set with vectors replaced row-for-row (labels carried through)."""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape[0] != len(self.records):
            raise ShapeError("row count does not match record count")
        return LabeledVectorSet(
            [replace(rec, vector=matrix[i]) for i, rec in enumerate(self.records)]
        )


# Embeddings share the container; the alias keeps call sites readable.
EmbeddingSet = LabeledVectorSet
