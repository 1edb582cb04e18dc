"""Text file formats: vector sets, partitions, trial lists, scores, reports.

All formats are tab-separated text so artifacts stay diffable. Floats in
vector files use repr() which round-trips float64 exactly; score files are
fixed to 6 decimal places by contract.
"""

import numpy as np

from .data import LabeledVectorSet, Record
from .errors import DataError


def write_vectors(vecset, path):
    """Vector file: header `dim=<int>`, then id/speaker/domain/code/values rows."""
    with open(path, "w") as fh:
        fh.write(f"dim={vecset.dim}\n")
        for rec in vecset:
            speaker = rec.speaker if rec.speaker is not None else "-"
            domain = str(rec.domain) if rec.domain is not None else "-"
            code = rec.code if rec.code is not None else "-"
            values = ",".join(repr(v) for v in rec.vector.tolist())
            fh.write(f"{rec.id}\t{speaker}\t{domain}\t{code}\t{values}\n")


def read_vectors(path):
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("dim="):
            raise DataError(f"{path}:1: expected `dim=<int>` header, got {header!r}")
        try:
            dim = int(header[4:])
        except ValueError:
            raise DataError(f"{path}:1: bad dimension in header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            rec_id, speaker, domain, code, values = parts
            try:
                vector = np.array([float(v) for v in values.split(",")])
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable vector values")
            if vector.shape[0] != dim:
                raise DataError(
                    f"{path}:{lineno}: vector length {vector.shape[0]} != header dim {dim}"
                )
            records.append(
                Record(
                    id=rec_id,
                    vector=vector,
                    speaker=None if speaker == "-" else speaker,
                    domain=None if domain == "-" else int(domain),
                    code=None if code == "-" else code,
                )
            )
    return LabeledVectorSet(records)


def write_partition(partition, path):
    """Partition file: header `k=<int>`, then one `id<TAB>index` per line."""
    with open(path, "w") as fh:
        fh.write(f"k={partition.k}\n")
        for rec_id in sorted(partition.assignments):
            fh.write(f"{rec_id}\t{partition.assignments[rec_id]}\n")


def read_partition(path):
    from .partition import DomainPartition

    assignments = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("k="):
            raise DataError(f"{path}:1: expected `k=<int>` header")
        k = int(header[2:])
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected `id<TAB>index`")
            assignments[parts[0]] = int(parts[1])
    return DomainPartition(assignments=assignments, k=k)


def write_trials(trials, path):
    """Trial list: `enroll_id<TAB>test_id[<TAB>target|nontarget]` per line."""
    with open(path, "w") as fh:
        for row in trials:
            enroll_id, test_id, key = row
            if key in ("target", "nontarget"):
                fh.write(f"{enroll_id}\t{test_id}\t{key}\n")
            else:
                fh.write(f"{enroll_id}\t{test_id}\n")


def read_trials(path):
    trials = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) == 2:
                trials.append((parts[0], parts[1], "unknown"))
            elif len(parts) == 3:
                if parts[2] not in ("target", "nontarget"):
                    raise DataError(f"{path}:{lineno}: bad key {parts[2]!r}")
                trials.append((parts[0], parts[1], parts[2]))
            else:
                raise DataError(f"{path}:{lineno}: expected 2 or 3 fields")
    return trials


def write_scores(scoreset, path):
    """Score file: trial columns plus the score at 6 decimal places."""
    with open(path, "w") as fh:
        for row in scoreset.rows:
            fh.write(f"{row.enroll_id}\t{row.test_id}\t{row.score:.6f}\t{row.key}\n")


def read_scores(path):
    from .backend import TrialScore, TrialScoreSet

    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields")
            rows.append(TrialScore(parts[0], parts[1], float(parts[2]), parts[3]))
    return TrialScoreSet(rows)


def write_report(entries, path):
    """Report file: stable `key<TAB>value` lines, insertion order preserved."""
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}\t{value}\n")


def read_report(path):
    entries = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected `key<TAB>value`")
            entries[parts[0]] = parts[1]
    return entries


def read_config_file(path):
    """Flat `key = value` config file; `#` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected `key = value`")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values
