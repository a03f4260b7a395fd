"""Executes experiment manifests: train stages in order, predict, score.

The trainer is an external command built from the manifest's template by
substituting {subset}, {init_model}, {out_model}, {lr}, {wd}, {epochs}.
Prediction reuses the same template with the test-set directory as the
subset, the final model as the init, the prediction directory as the out
path, and a trailing --predict flag. Stages run strictly in order and
nothing runs after a failure. Records and reports are written atomically.

Output root: the CORESETKIT_WORKDIR environment variable when set, else
a runs/ directory next to the manifest.
"""

from __future__ import annotations

import logging
import os
import shlex
import subprocess
import time
from dataclasses import dataclass, field

from .jsonio import canonical_dumps, write_text_atomic
from .manifest import ExperimentManifest, INIT_SCRATCH, load_manifest
from .metrics import MetricsReport, aggregate, report_as_dict, report_csv_text, score_image
from .patching import read_mask

LOGGER = logging.getLogger(__name__)

WORKDIR_ENV = "CORESETKIT_WORKDIR"

RECORD_FORMAT = "record-v1"


@dataclass
class StageResult:
    domain: str
    command: str
    exit_status: int
    model: str

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "command": self.command,
            "exit_status": self.exit_status,
            "model": self.model,
        }


@dataclass
class RunRecord:
    """Everything one manifest execution produced.

    status is "ok" only when every stage and every evaluation succeeded;
    otherwise "failed" with failed_stage (1-based, None for evaluation-phase
    failures) and an error message. Wall-clock timings are informational and
    vary run to run; all other fields are deterministic.
    """

    manifest_name: str
    status: str
    stages: list[StageResult]
    reports: dict[str, MetricsReport] = field(default_factory=dict)
    failed_stage: int | None = None
    error: str | None = None
    timings: dict = field(default_factory=dict)
    run_dir: str = ""

    def as_dict(self) -> dict:
        return {
            "format": RECORD_FORMAT,
            "manifest": self.manifest_name,
            "status": self.status,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "stages": [s.as_dict() for s in self.stages],
            "reports": {d: report_as_dict(r) for d, r in self.reports.items()},
            "timings": self.timings,
        }


def _resolve(base: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base, path))


def _fill(template: str, **values) -> str:
    try:
        return template.format(**values)
    except (KeyError, IndexError) as exc:
        raise ValueError(f"unresolvable placeholder in trainer template: {exc}") from exc


def _persist(record: RunRecord) -> None:
    write_text_atomic(
        os.path.join(record.run_dir, "record.json"), canonical_dumps(record.as_dict())
    )


def run(
    manifest_path: str,
    trainer_cmd: str | None = None,
    workdir: str | None = None,
) -> RunRecord:
    """Execute the manifest at `manifest_path` and persist a RunRecord.

    Args:
        manifest_path: manifest JSON; subset and test-set paths inside are
            resolved relative to this file.
        trainer_cmd: command template overriding the manifest's trainer field.
        workdir: output root overriding CORESETKIT_WORKDIR and the default.

    Returns:
        The persisted RunRecord. Trainer failures are recorded, not raised;
        missing inputs (subsets, test masks, predictions) and scoring errors
        mark the record failed as well.
    """
    manifest = load_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    template = trainer_cmd or manifest.trainer
    if not template:
        raise ValueError("no trainer command: manifest has none and none was given")
    out_root = workdir or os.environ.get(WORKDIR_ENV) or os.path.join(base, "runs")
    run_dir = os.path.join(out_root, manifest.name)

    # fail before creating any output if a referenced subset is missing
    for stage in manifest.stages:
        subset_abs = _resolve(base, stage.subset)
        if not os.path.exists(subset_abs):
            raise FileNotFoundError(f"stage subset not found: {subset_abs}")
    os.makedirs(run_dir, exist_ok=True)

    record = RunRecord(
        manifest_name=manifest.name, status="ok", stages=[], run_dir=run_dir
    )
    started = time.monotonic()
    stage_times: list[float] = []

    model = ""
    for k, stage in enumerate(manifest.stages, start=1):
        subset_abs = _resolve(base, stage.subset)
        init_model = INIT_SCRATCH if stage.init == INIT_SCRATCH else model
        model_path = os.path.join(run_dir, f"stage{k}_{stage.domain}.model")
        hp = stage.hyperparameters
        cmd = _fill(
            template,
            subset=subset_abs,
            init_model=init_model,
            out_model=model_path,
            lr=hp.learning_rate,
            wd=hp.weight_decay,
            epochs=hp.epochs,
        )
        LOGGER.info("stage %d/%d (%s): %s", k, len(manifest.stages), stage.domain, cmd)
        t0 = time.monotonic()
        proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
        stage_times.append(time.monotonic() - t0)
        record.stages.append(
            StageResult(
                domain=stage.domain,
                command=cmd,
                exit_status=proc.returncode,
                model=model_path,
            )
        )
        if proc.returncode != 0:
            record.status = "failed"
            record.failed_stage = k
            record.error = (
                f"trainer exited {proc.returncode} at stage {k} ({stage.domain}): "
                f"{proc.stderr.strip() or proc.stdout.strip()}"
            )
            record.timings = _timings(started, stage_times, {})
            _persist(record)
            return record
        model = model_path

    predict_times: dict[str, float] = {}
    last_hp = manifest.stages[-1].hyperparameters
    for domain, test_set in manifest.evaluations:
        test_abs = _resolve(base, test_set)
        pred_dir = os.path.join(run_dir, f"pred_{domain}")
        os.makedirs(pred_dir, exist_ok=True)
        cmd = _fill(
            template,
            subset=test_abs,
            init_model=model,
            out_model=pred_dir,
            lr=last_hp.learning_rate,
            wd=last_hp.weight_decay,
            epochs=last_hp.epochs,
        ) + " --predict"
        LOGGER.info("predict (%s): %s", domain, cmd)
        t0 = time.monotonic()
        proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
        predict_times[domain] = time.monotonic() - t0
        if proc.returncode != 0:
            record.status = "failed"
            record.error = (
                f"prediction exited {proc.returncode} for domain {domain}: "
                f"{proc.stderr.strip() or proc.stdout.strip()}"
            )
            break
        try:
            record.reports[domain] = _score_domain(test_abs, pred_dir)
        except (FileNotFoundError, ValueError) as exc:
            record.status = "failed"
            record.error = f"evaluation failed for domain {domain}: {exc}"
            break
        _write_reports(run_dir, domain, record.reports[domain])

    record.timings = _timings(started, stage_times, predict_times)
    _persist(record)
    return record


def _timings(started: float, stage_times: list[float], predict_times: dict) -> dict:
    return {
        "total_s": time.monotonic() - started,
        "stages_s": list(stage_times),
        "predict_s": dict(predict_times),
    }


def _score_domain(test_dir: str, pred_dir: str) -> MetricsReport:
    masks_dir = os.path.join(test_dir, "masks")
    if not os.path.isdir(masks_dir):
        raise FileNotFoundError(f"test set has no masks directory: {masks_dir}")
    names = sorted(os.listdir(masks_dir))
    if not names:
        raise FileNotFoundError(f"no masks in {masks_dir}")
    scores = []
    for name in names:
        pred_path = os.path.join(pred_dir, name)
        if not os.path.exists(pred_path):
            raise FileNotFoundError(f"missing prediction output: {pred_path}")
        gt = read_mask(os.path.join(masks_dir, name))
        pred = read_mask(pred_path)
        scores.append(score_image(os.path.splitext(name)[0], gt, pred))
    return aggregate(scores)


def _write_reports(run_dir: str, domain: str, report: MetricsReport) -> None:
    reports_dir = os.path.join(run_dir, "reports")
    os.makedirs(reports_dir, exist_ok=True)
    write_text_atomic(
        os.path.join(reports_dir, f"{domain}.json"),
        canonical_dumps(report_as_dict(report)),
    )
    write_text_atomic(
        os.path.join(reports_dir, f"{domain}.csv"), report_csv_text(report)
    )
