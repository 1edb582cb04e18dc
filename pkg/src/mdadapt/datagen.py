"""Synthetic multi-domain vector generator.

Stands in for licensed corpus vectors: each speaker has a Gaussian mean,
each session adds a per-domain shift, optional orthogonal rotation, and
scaled isotropic channel noise. Sessions are spread round-robin over the
set's domains so the domain mismatch lands inside speakers, which is what
the adaptation has to remove.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import LabeledVectorSet, Record
from .errors import ConfigError


@dataclass
class DomainSpec:
    name: str
    shift: np.ndarray
    scale: float = 1.0
    rotation_seed: Optional[int] = None

    def __post_init__(self):
        self.shift = np.asarray(self.shift, dtype=np.float64)
        if self.scale <= 0:
            raise ConfigError(f"domain {self.name!r}: scale must be > 0")


@dataclass
class GenSpec:
    dim: int = 20
    n_speakers: int = 300
    sessions_per_speaker: int = 6
    source_domains: list = field(default_factory=list)
    n_target_speakers: int = 60
    target_sessions_per_speaker: int = 6
    target_domains: list = field(default_factory=list)
    sigma_between: float = 1.0
    sigma_within: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if min(self.dim, self.n_speakers, self.sessions_per_speaker,
               self.n_target_speakers) < 1:
            raise ConfigError("all counts must be >= 1")
        if self.target_sessions_per_speaker < 2:
            raise ConfigError(
                "target speakers need >= 2 sessions for an enroll/test split"
            )
        names = [d.name for d in self.source_domains + self.target_domains]
        if len(names) != len(set(names)):
            raise ConfigError("domain names must be unique")
        for dom in self.source_domains + self.target_domains:
            if dom.shift.shape != (self.dim,):
                raise ConfigError(f"domain {dom.name!r}: shift length != dim")


def random_shift_domains(prefix, count, dim, magnitude, seed, scale=1.0):
    """Domains with seeded random unit-direction shifts of a fixed magnitude."""
    rng = np.random.default_rng(seed)
    domains = []
    for i in range(count):
        direction = rng.standard_normal(dim)
        if magnitude > 0:
            direction = direction / np.linalg.norm(direction) * magnitude
        else:
            direction = np.zeros(dim)
        domains.append(DomainSpec(name=f"{prefix}{i}", shift=direction, scale=scale))
    return domains


def default_spec(n_source_domains=2, n_target_domains=2, shift=3.0, dim=20, seed=0,
                 **overrides):
    """Desk-scale spec with randomized domain shift directions."""
    return GenSpec(
        dim=dim,
        source_domains=random_shift_domains("SRC", n_source_domains, dim, shift,
                                            seed=seed * 1000 + 1),
        target_domains=random_shift_domains("TGT", n_target_domains, dim, shift,
                                            seed=seed * 1000 + 2),
        seed=seed,
        **overrides,
    )


def _rotation(dim, seed):
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def _population(rng, prefix, n_speakers, n_sessions, domains, domain_offset, spec):
    rotations = {
        d.name: _rotation(spec.dim, d.rotation_seed) if d.rotation_seed is not None
        else None
        for d in domains
    }
    records = []
    for s in range(n_speakers):
        speaker = f"{prefix}_spk{s:04d}"
        mean = rng.standard_normal(spec.dim) * spec.sigma_between
        for j in range(n_sessions):
            dom_idx = j % len(domains)
            dom = domains[dom_idx]
            noise = rng.standard_normal(spec.dim) * spec.sigma_within * dom.scale
            if rotations[dom.name] is not None:
                noise = rotations[dom.name] @ noise
            records.append(
                Record(
                    id=f"{speaker}_sess{j}",
                    vector=mean + dom.shift + noise,
                    speaker=speaker,
                    domain=domain_offset + dom_idx,
                    code=dom.name,
                )
            )
    return records


def generate(spec, withhold_target_speakers=True):
    """Draw the full synthetic experiment.

    Returns (source, target, enroll, test, trials). Source and target
    speaker populations are disjoint; the first session of each target
    speaker enrolls it and the rest are tests. The trial list covers all
    enroll x test pairs with target/nontarget keys. Target/enroll/test
    speaker labels are withheld unless the oracle flag is cleared.
    """
    if not spec.source_domains or not spec.target_domains:
        raise ConfigError("need at least one source and one target domain")
    rng = np.random.default_rng(spec.seed)
    n_src_domains = len(spec.source_domains)

    source = LabeledVectorSet(
        _population(rng, "src", spec.n_speakers, spec.sessions_per_speaker,
                    spec.source_domains, 0, spec)
    )
    target_records = _population(
        rng, "tgt", spec.n_target_speakers, spec.target_sessions_per_speaker,
        spec.target_domains, n_src_domains, spec,
    )

    enroll_records, test_records = [], []
    for rec in target_records:
        if rec.id.endswith("_sess0"):
            enroll_records.append(rec)
        else:
            test_records.append(rec)

    trials = []
    for e in enroll_records:
        for t in test_records:
            key = "target" if e.speaker == t.speaker else "nontarget"
            trials.append((e.id, t.id, key))

    target = LabeledVectorSet(target_records)
    enroll = LabeledVectorSet(enroll_records)
    test = LabeledVectorSet(test_records)
    if withhold_target_speakers:
        target = target.without_speakers()
        enroll = enroll.without_speakers()
        test = test.without_speakers()
    return source, target, enroll, test, trials
