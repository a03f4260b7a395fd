"""Experiment manifests: declarative plans for sweeps and transfer paths.

A manifest names an ordered list of training stages (each pointing at a
subset listing and carrying its hyperparameters), the evaluations to run
after the final stage, and the trainer command template. Manifests are JSON
with a schema version; all paths inside are relative to the manifest file,
so a planned experiment directory can be moved or shared as a unit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .jsonio import canonical_dumps, read_json, write_text_atomic
from .quantize import CoresetSelection, form_bins, sample_coreset, selection_ids
from .embeddings import EmbeddingMatrix

MANIFEST_FORMAT = "manifest-v1"

DOMAINS = ("cyto", "histo", "multiinst")

# The three first-class multi-stage transfer paths; arbitrary stage lists
# remain expressible through plan_transfer_path.
TRANSFER_PATHS = {
    "A": ("cyto", "histo", "multiinst"),
    "B": ("cyto", "multiinst", "histo"),
    "C": ("multiinst", "cyto", "histo"),
}

INIT_SCRATCH = "scratch"
INIT_PREVIOUS = "previous"


@dataclass
class Hyperparameters:
    """Per-stage training knobs with the standard defaults."""

    channel_mode: str = "grayscale"
    learning_rate: float = 0.1
    weight_decay: float = 1e-4
    epochs: int = 500
    checkpoint_interval: int = 50

    def as_dict(self) -> dict:
        return {
            "channel_mode": self.channel_mode,
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "checkpoint_interval": self.checkpoint_interval,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparameters":
        return cls(**d)


@dataclass
class TrainingStage:
    """One training stage: a domain, a subset listing, and an init source."""

    domain: str
    subset: str
    init: str = INIT_SCRATCH
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)

    def __post_init__(self) -> None:
        if not self.domain:
            raise ValueError("stage domain must be non-empty")
        if not self.subset:
            raise ValueError("stage subset path must be non-empty")
        if self.init not in (INIT_SCRATCH, INIT_PREVIOUS):
            raise ValueError(
                f"init must be {INIT_SCRATCH!r} or {INIT_PREVIOUS!r}, got {self.init!r}"
            )


@dataclass
class ExperimentManifest:
    """A named experiment: ordered stages plus post-hoc evaluations.

    Every domain trained in a stage must also appear among the evaluations;
    extra (zero-shot) evaluation domains are allowed.
    """

    name: str
    stages: list[TrainingStage]
    evaluations: list[tuple[str, str]]
    seed: int
    trainer: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("manifest name must be non-empty")
        if not self.stages:
            raise ValueError("manifest needs at least one stage")
        eval_domains = {d for d, _ in self.evaluations}
        missing = {s.domain for s in self.stages} - eval_domains
        if missing:
            raise ValueError(f"stage domains not evaluated: {sorted(missing)}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    def as_dict(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "name": self.name,
            "seed": self.seed,
            "trainer": self.trainer,
            "stages": [
                {
                    "domain": s.domain,
                    "subset": s.subset,
                    "init": s.init,
                    "hyperparameters": s.hyperparameters.as_dict(),
                }
                for s in self.stages
            ],
            "evaluations": [
                {"domain": d, "test_set": p} for d, p in self.evaluations
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentManifest":
        if d.get("format") != MANIFEST_FORMAT:
            raise ValueError(f"unsupported manifest format {d.get('format')!r}")
        stages = [
            TrainingStage(
                domain=s["domain"],
                subset=s["subset"],
                init=s["init"],
                hyperparameters=Hyperparameters.from_dict(s["hyperparameters"]),
            )
            for s in d["stages"]
        ]
        evaluations = [(e["domain"], e["test_set"]) for e in d["evaluations"]]
        return cls(
            name=d["name"],
            stages=stages,
            evaluations=evaluations,
            seed=d["seed"],
            trainer=d.get("trainer", ""),
        )


def save_manifest(manifest: ExperimentManifest, path: str) -> None:
    write_text_atomic(path, canonical_dumps(manifest.as_dict()))


def load_manifest(path: str) -> ExperimentManifest:
    return ExperimentManifest.from_dict(read_json(path))


def _check_domain(domain: str) -> None:
    if domain not in DOMAINS:
        raise ValueError(f"unknown domain {domain!r}, expected one of {DOMAINS}")


def default_test_sets(test_root: str = "test") -> dict[str, str]:
    return {d: os.path.join(test_root, d) for d in DOMAINS}


def plan_transfer_path(
    path: list[tuple[str, str]],
    zero_shot: list[str] | None = None,
    *,
    name: str | None = None,
    seed: int = 0,
    trainer: str = "",
    test_sets: dict[str, str] | None = None,
) -> ExperimentManifest:
    """Build a multi-stage transfer manifest.

    Args:
        path: ordered (domain, subset path) stages; the first stage trains
            from scratch, every later stage initializes from the previous.
        zero_shot: extra domains evaluated without being trained on (they
            must be known domain names; evaluations always cover all three
            domains regardless).
        test_sets: domain -> test-set path mapping; defaults to test/<domain>.
    """
    if not path:
        raise ValueError("transfer path must have at least one stage")
    for domain, _ in path:
        _check_domain(domain)
    for domain in zero_shot or []:
        _check_domain(domain)
    sets = test_sets or default_test_sets()
    for domain in DOMAINS:
        if domain not in sets:
            raise ValueError(f"no test set given for domain {domain!r}")
    stages = [
        TrainingStage(
            domain=domain,
            subset=subset,
            init=INIT_SCRATCH if k == 0 else INIT_PREVIOUS,
        )
        for k, (domain, subset) in enumerate(path)
    ]
    if name is None:
        name = "transfer_" + "_".join(d for d, _ in path)
    evaluations = [(d, sets[d]) for d in DOMAINS]
    return ExperimentManifest(
        name=name, stages=stages, evaluations=evaluations, seed=seed, trainer=trainer
    )


def rate_token(rate: float) -> str:
    """Filesystem-safe token for a rate, e.g. 0.05 -> "0p05"."""
    return format(rate, "g").replace(".", "p")


def plan_rate_sweep(
    rates: list[float],
    m: EmbeddingMatrix,
    n_bins: int,
    seed: int,
    out_dir: str,
    *,
    domain: str = "cyto",
    test_set: str | None = None,
    trainer: str = "",
) -> list[ExperimentManifest]:
    """One single-stage manifest per rate, each referencing a written coreset.

    Bins are formed once; each rate gets its own sampled coreset written to
    <out_dir>/coresets/ and a manifest whose stage subset points at it with
    a path relative to <out_dir>. Hyperparameters are the shared defaults.
    """
    if not rates:
        raise ValueError("rates list must be non-empty")
    _check_domain(domain)
    if test_set is None:
        test_set = os.path.join("test", domain)
    bins = form_bins(m, n_bins)
    manifests: list[ExperimentManifest] = []
    coreset_dir = os.path.join(out_dir, "coresets")
    os.makedirs(coreset_dir, exist_ok=True)
    for rate in rates:
        sel = sample_coreset(bins, rate, seed)
        token = rate_token(rate)
        rel_subset = os.path.join("coresets", f"{domain}_rate_{token}.json")
        write_text_atomic(
            os.path.join(out_dir, rel_subset),
            canonical_dumps(coreset_as_dict(sel, bins, list(m.ids))),
        )
        manifests.append(
            ExperimentManifest(
                name=f"sweep_{domain}_rate_{token}",
                stages=[TrainingStage(domain=domain, subset=rel_subset)],
                evaluations=[(domain, test_set)],
                seed=seed,
                trainer=trainer,
            )
        )
    return manifests


def coreset_as_dict(sel: CoresetSelection, bins, ids: list[str]) -> dict:
    """The coreset.json payload: rate, seed, bins and selection by patch id."""
    return {
        "format": "coreset-v1",
        "rate": sel.rate,
        "seed": sel.seed,
        "bins": [[ids[i] for i in members] for members in bins.bins],
        "selection": selection_ids(sel, ids),
    }
