"""Experiment driver: generate/ingest -> partition -> train -> extract ->
backend -> score -> eval, with persisted intermediates per stage.

Every stage reads its inputs from the output directory and writes its
artifacts back there, so stages can be rerun individually and a rerun
from checkpoints reproduces downstream artifacts byte-identically.
"""

import os
from dataclasses import dataclass, fields, replace

from . import __version__
from . import fileio
from .backend import fit_plda, fit_whitener, preprocess, score_trials
from .datagen import default_spec, generate
from .errors import ConfigError, MdadaptError
from .mdann import (
    ArchSpec,
    TrainConfig,
    build_model,
    extract_embeddings,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .metrics import COST_PRESETS, evaluate
from .partition import kmeans, partition_by_code, single_partition

STAGES = ("data", "partition", "train", "extract", "backend", "score", "eval")

PARTITION_MODES = ("codes", "single")  # plus "kmeans:<k>"

# Condition presets: partition modes per the adaptation-method matrix.
CONDITIONS = {
    "DAT": ("single", "single"),
    "MS-DAT": ("codes", "single"),
    "MT-DAT": ("single", "codes"),
    "MDAT": ("codes", "codes"),
    "MS-DAT-KMEANS": ("kmeans:3", "single"),
    "MT-DAT-KMEANS": ("single", "kmeans:2"),
    "MDAT-KMEANS": ("kmeans:3", "kmeans:2"),
}


@dataclass
class ExperimentConfig:
    seed: int = 0
    out_dir: str = "out"
    # data: synthetic generation (default) or pre-existing vector files
    source_path: str = ""
    target_path: str = ""
    enroll_path: str = ""
    test_path: str = ""
    trials_path: str = ""
    dim: int = 20
    n_speakers: int = 300
    sessions_per_speaker: int = 6
    n_target_speakers: int = 60
    target_sessions_per_speaker: int = 6
    n_source_domains: int = 2
    n_target_domains: int = 2
    domain_shift: float = 3.0
    sigma_between: float = 1.0
    sigma_within: float = 0.7
    # partitioning
    source_partition: str = "codes"
    target_partition: str = "codes"
    # architecture (desk-scale defaults; full scale would be 512/300/512)
    generator_hidden: str = "32"
    classifier_hidden: str = "64,64"
    discriminator_hidden: str = "64,64"
    activation: str = "relu"
    # training
    grl_lambda: float = 2.0
    learning_rate: float = 0.1
    epochs: int = 30
    batch_size: int = 64
    lambda_schedule: str = "constant"
    domain_loss_weighting: bool = False
    extract_layer: str = "first"
    # backend
    whiten_on: str = "target"  # target | source | pooled
    plda_iters: int = 10
    figures: bool = True

    def uses_files(self):
        return bool(self.source_path)

    def arch(self):
        def widths(text):
            return tuple(int(w) for w in str(text).split(",") if str(w).strip())

        return ArchSpec(
            generator_hidden=widths(self.generator_hidden),
            classifier_hidden=widths(self.classifier_hidden),
            discriminator_hidden=widths(self.discriminator_hidden),
            activation=self.activation,
        )

    def train_config(self):
        return TrainConfig(
            grl_lambda=self.grl_lambda,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed + 2,
            lambda_schedule=self.lambda_schedule,
            domain_loss_weighting=self.domain_loss_weighting,
        )

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


_BOOL_STRINGS = {"true": True, "1": True, "yes": True,
                 "false": False, "0": False, "no": False}


def config_from_mapping(values, base=None):
    """Build a config from string key/value pairs (file or CLI overrides)."""
    cfg = base or ExperimentConfig()
    known = {f.name: f for f in fields(ExperimentConfig)}
    updates = {}
    for key, raw in values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            if str(raw).lower() not in _BOOL_STRINGS:
                raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
            updates[key] = _BOOL_STRINGS[str(raw).lower()]
        elif isinstance(current, int):
            updates[key] = int(raw)
        elif isinstance(current, float):
            updates[key] = float(raw)
        else:
            updates[key] = str(raw)
    return replace(cfg, **updates)


def load_config(path=None, overrides=None):
    cfg = ExperimentConfig()
    if path:
        cfg = config_from_mapping(fileio.read_config_file(path), base=cfg)
    if overrides:
        cfg = config_from_mapping(overrides, base=cfg)
    return cfg


def apply_condition(cfg, name):
    """Set partition modes from a named adaptation condition."""
    key = name.upper()
    if key not in CONDITIONS:
        raise ConfigError(
            f"unknown condition {name!r}; options: {', '.join(sorted(CONDITIONS))}"
        )
    src_mode, tgt_mode = CONDITIONS[key]
    return replace(cfg, source_partition=src_mode, target_partition=tgt_mode)


def condition_name(n_source, m_target):
    """Adaptation-method name implied by the (N, M) sub-domain counts."""
    if n_source < 1 or m_target < 1:
        raise ConfigError("domain counts must be >= 1")
    if n_source == 1 and m_target == 1:
        return "DAT"
    if m_target == 1:
        return "MS-DAT"
    if n_source == 1:
        return "MT-DAT"
    return "MDAT"


def _paths(cfg):
    out = cfg.out_dir
    return {
        "source": os.path.join(out, "source.vec"),
        "target": os.path.join(out, "target.vec"),
        "enroll": os.path.join(out, "enroll.vec"),
        "test": os.path.join(out, "test.vec"),
        "trials": os.path.join(out, "trials.txt"),
        "source_partition": os.path.join(out, "source_partition.txt"),
        "target_partition": os.path.join(out, "target_partition.txt"),
        "checkpoint": os.path.join(out, "model.ckpt"),
        "train_stats": os.path.join(out, "train_stats.tsv"),
        "train_fig": os.path.join(out, "training_curves.png"),
        "source_emb": os.path.join(out, "source_emb.vec"),
        "target_emb": os.path.join(out, "target_emb.vec"),
        "enroll_emb": os.path.join(out, "enroll_emb.vec"),
        "test_emb": os.path.join(out, "test_emb.vec"),
        "backend": os.path.join(out, "backend.json"),
        "baseline_backend": os.path.join(out, "baseline_backend.json"),
        "scores": os.path.join(out, "scores.txt"),
        "baseline_scores": os.path.join(out, "scores_baseline.txt"),
        "report": os.path.join(out, "report.tsv"),
        "score_fig": os.path.join(out, "score_distributions.png"),
    }


def _strip_domains(vecset):
    from dataclasses import replace as rec_replace

    return type(vecset)([rec_replace(rec, domain=None) for rec in vecset])


def stage_data(cfg):
    paths = _paths(cfg)
    if cfg.uses_files():
        sets = {
            "source": fileio.read_vectors(cfg.source_path),
            "target": fileio.read_vectors(cfg.target_path),
            "enroll": fileio.read_vectors(cfg.enroll_path),
            "test": fileio.read_vectors(cfg.test_path),
        }
        trials = fileio.read_trials(cfg.trials_path)
    else:
        spec = default_spec(
            n_source_domains=cfg.n_source_domains,
            n_target_domains=cfg.n_target_domains,
            shift=cfg.domain_shift,
            dim=cfg.dim,
            seed=cfg.seed,
            n_speakers=cfg.n_speakers,
            sessions_per_speaker=cfg.sessions_per_speaker,
            n_target_speakers=cfg.n_target_speakers,
            target_sessions_per_speaker=cfg.target_sessions_per_speaker,
            sigma_between=cfg.sigma_between,
            sigma_within=cfg.sigma_within,
        )
        source, target, enroll, test, trials = generate(spec)
        sets = {"source": source, "target": target, "enroll": enroll, "test": test}
    # Domain indices are assigned by the partition stage, never carried in.
    for name, vecset in sets.items():
        fileio.write_vectors(_strip_domains(vecset), paths[name])
    fileio.write_trials(trials, paths["trials"])


def _partition_set(vecset, mode, seed):
    if mode == "codes":
        return partition_by_code(vecset)
    if mode == "single":
        return single_partition(vecset)
    if mode.startswith("kmeans:"):
        k = int(mode.split(":", 1)[1])
        return kmeans(vecset, k, seed=seed)
    raise ConfigError(f"unknown partition mode {mode!r}")


def stage_partition(cfg):
    paths = _paths(cfg)
    source = fileio.read_vectors(paths["source"])
    target = fileio.read_vectors(paths["target"])
    src_part = _partition_set(source, cfg.source_partition, seed=cfg.seed + 1)
    tgt_part = _partition_set(target, cfg.target_partition, seed=cfg.seed + 1)
    fileio.write_partition(src_part, paths["source_partition"])
    fileio.write_partition(tgt_part.offset(src_part.k), paths["target_partition"])


def stage_train(cfg):
    paths = _paths(cfg)
    source = fileio.read_vectors(paths["source"])
    target = fileio.read_vectors(paths["target"])
    src_part = fileio.read_partition(paths["source_partition"])
    tgt_part = fileio.read_partition(paths["target_partition"])
    source = source.with_domains(src_part.assignments)
    target = target.with_domains(tgt_part.assignments)
    n_speakers = len({rec.speaker for rec in source})
    model = build_model(
        input_dim=source.dim,
        n_speakers=n_speakers,
        n_domains=src_part.k + tgt_part.k,
        arch=cfg.arch(),
        seed=cfg.seed + 2,
    )
    model, stats = train(model, source, target, cfg.train_config())
    save_checkpoint(model, paths["checkpoint"])
    with open(paths["train_stats"], "w") as fh:
        fh.write("epoch\tcls_loss\tadv_loss\ttotal_loss\tspeaker_acc\tdomain_acc\n")
        for i in range(stats.n_epochs()):
            fh.write(
                f"{i + 1}\t{stats.cls_loss[i]:.6f}\t{stats.adv_loss[i]:.6f}\t"
                f"{stats.total_loss[i]:.6f}\t{stats.speaker_acc[i]:.4f}\t"
                f"{stats.domain_acc[i]:.4f}\n"
            )
    if cfg.figures and stats.n_epochs():
        from .plots import plot_training_curves

        plot_training_curves(stats, paths["train_fig"])


def stage_extract(cfg):
    paths = _paths(cfg)
    model = load_checkpoint(paths["checkpoint"])
    for name in ("source", "target", "enroll", "test"):
        vecset = fileio.read_vectors(paths[name])
        emb = extract_embeddings(model, vecset, layer=cfg.extract_layer)
        fileio.write_vectors(emb, paths[f"{name}_emb"])


def _fit_backend(cfg, source, target):
    from .data import LabeledVectorSet

    if cfg.whiten_on == "target":
        whiten_set = target
    elif cfg.whiten_on == "source":
        whiten_set = source
    elif cfg.whiten_on == "pooled":
        whiten_set = LabeledVectorSet(list(source) + list(target))
    else:
        raise ConfigError(f"unknown whiten_on value {cfg.whiten_on!r}")
    whitener = fit_whitener(whiten_set)
    plda, _ = fit_plda(preprocess(whitener, source), iters=cfg.plda_iters)
    return whitener, plda


def _save_backend(whitener, plda, path):
    import json

    def hexed(arr):
        import numpy as np

        a = np.asarray(arr, dtype=float)
        return {"shape": list(a.shape), "data": [float.hex(v) for v in a.ravel().tolist()]}

    payload = {
        "format": "mdadapt-backend",
        "version": 1,
        "whitener": {"mean": hexed(whitener.mean), "transform": hexed(whitener.transform)},
        "plda": {
            "mu": hexed(plda.mu),
            "phi_between": hexed(plda.phi_between),
            "phi_within": hexed(plda.phi_within),
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def _load_backend(path):
    import json

    import numpy as np

    from .backend import PldaModel, Whitener

    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != "mdadapt-backend":
        raise ConfigError(f"{path}: not a backend model file")

    def unhex(entry):
        return np.array([float.fromhex(v) for v in entry["data"]]).reshape(entry["shape"])

    whitener = Whitener(
        mean=unhex(payload["whitener"]["mean"]),
        transform=unhex(payload["whitener"]["transform"]),
    )
    plda = PldaModel(
        mu=unhex(payload["plda"]["mu"]),
        phi_between=unhex(payload["plda"]["phi_between"]),
        phi_within=unhex(payload["plda"]["phi_within"]),
    )
    return whitener, plda


def stage_backend(cfg):
    paths = _paths(cfg)
    # adapted backend on extracted embeddings
    whitener, plda = _fit_backend(
        cfg,
        fileio.read_vectors(paths["source_emb"]),
        fileio.read_vectors(paths["target_emb"]),
    )
    _save_backend(whitener, plda, paths["backend"])
    # no-adaptation baseline backend on the raw vectors
    whitener0, plda0 = _fit_backend(
        cfg,
        fileio.read_vectors(paths["source"]),
        fileio.read_vectors(paths["target"]),
    )
    _save_backend(whitener0, plda0, paths["baseline_backend"])


def stage_score(cfg):
    paths = _paths(cfg)
    trials = fileio.read_trials(paths["trials"])
    whitener, plda = _load_backend(paths["backend"])
    scores = score_trials(
        plda, whitener,
        fileio.read_vectors(paths["enroll_emb"]),
        fileio.read_vectors(paths["test_emb"]),
        trials,
    )
    fileio.write_scores(scores, paths["scores"])
    whitener0, plda0 = _load_backend(paths["baseline_backend"])
    baseline = score_trials(
        plda0, whitener0,
        fileio.read_vectors(paths["enroll"]),
        fileio.read_vectors(paths["test"]),
        trials,
    )
    fileio.write_scores(baseline, paths["baseline_scores"])


def relative_reduction(reference, value):
    """Percent relative reduction of `value` against `reference`."""
    if reference == 0:
        return 0.0
    return (reference - value) / reference * 100.0


def stage_eval(cfg):
    paths = _paths(cfg)
    adapted = fileio.read_scores(paths["scores"])
    baseline = fileio.read_scores(paths["baseline_scores"])
    adapted_metrics = evaluate(adapted, COST_PRESETS)
    baseline_metrics = evaluate(baseline, COST_PRESETS)

    src_k = fileio.read_partition(paths["source_partition"]).k
    tgt_k = fileio.read_partition(paths["target_partition"]).k
    entries = {
        "tool_version": __version__,
        "condition": condition_name(src_k, tgt_k),
        "n_source_domains": src_k,
        "m_target_domains": tgt_k,
    }
    for key, value in sorted(cfg.as_dict().items()):
        entries[f"config.{key}"] = value
    for name, metric_set in (("baseline", baseline_metrics), ("adapted", adapted_metrics)):
        entries[f"{name}.eer"] = f"{metric_set['eer']:.4f}"
        entries[f"{name}.dcf10"] = f"{metric_set['dcf10']:.4f}"
        entries[f"{name}.dcf08"] = f"{metric_set['dcf08']:.4f}"
    for metric in ("eer", "dcf10", "dcf08"):
        reduction = relative_reduction(baseline_metrics[metric], adapted_metrics[metric])
        entries[f"relative_reduction.{metric}"] = f"{reduction:.1f}"
    fileio.write_report(entries, paths["report"])
    if cfg.figures:
        from .plots import plot_score_distributions

        plot_score_distributions(adapted, paths["score_fig"],
                                 title=entries["condition"])
    return entries


_STAGE_FUNCS = {
    "data": stage_data,
    "partition": stage_partition,
    "train": stage_train,
    "extract": stage_extract,
    "backend": stage_backend,
    "score": stage_score,
    "eval": stage_eval,
}


def run_experiment(cfg, stages=None):
    """Run the pipeline stages in order; returns the report entries.

    A stage failure raises MdadaptError carrying the stage name; partial
    artifacts from completed stages are left in place.
    """
    stages = list(stages) if stages else list(STAGES)
    for stage in stages:
        if stage not in _STAGE_FUNCS:
            raise ConfigError(f"unknown stage {stage!r}; options: {', '.join(STAGES)}")
    os.makedirs(cfg.out_dir, exist_ok=True)
    report = None
    for stage in STAGES:
        if stage not in stages:
            continue
        try:
            result = _STAGE_FUNCS[stage](cfg)
        except MdadaptError as exc:
            raise MdadaptError(f"[stage {stage}] {exc}") from exc
        if stage == "eval":
            report = result
    return report


def compare_conditions(reports):
    """Align metric columns across reports and add relative improvements.

    The first report is the reference; each row gets the percent EER/DCF
    reduction against it, and the lowest-EER row is flagged as best.
    """
    if len(reports) < 2:
        raise ConfigError("need at least 2 reports to compare")
    metrics = ("eer", "dcf10", "dcf08")
    rows = []
    for report in reports:
        missing = [m for m in metrics if f"adapted.{m}" not in report]
        if missing:
            raise ConfigError(f"report lacks metric keys: {missing}")
        rows.append(
            {
                "condition": report.get("condition", "?"),
                **{m: float(report[f"adapted.{m}"]) for m in metrics},
            }
        )
    reference = rows[0]
    best_eer = min(row["eer"] for row in rows)
    for row in rows:
        for m in metrics:
            row[f"rel_{m}_reduction"] = relative_reduction(reference[m], row[m])
        row["best"] = row["eer"] == best_eer
    return rows


def write_comparison(rows, path):
    columns = ["condition", "eer", "dcf10", "dcf08",
               "rel_eer_reduction", "rel_dcf10_reduction", "rel_dcf08_reduction",
               "best"]
    with open(path, "w") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            cells = [str(row["condition"])]
            cells += [f"{row[m]:.4f}" for m in ("eer", "dcf10", "dcf08")]
            cells += [f"{row[f'rel_{m}_reduction']:.1f}" for m in ("eer", "dcf10", "dcf08")]
            cells.append("*" if row["best"] else "")
            fh.write("\t".join(cells) + "\n")
