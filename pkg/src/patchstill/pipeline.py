"""End-to-end orchestration of analyze, distill, sweep, and report runs.

All stages recompute occupancy from the mask files rather than trusting
previously exported CSVs: the export rounds ratios for readability, and a
rounded ratio at a threshold boundary could silently flip an image onto
the other selection path. Recomputing keeps every run a pure function of
(dataset bytes, mask bytes, config, seed).

Parallelism is a thread pool mapping over the manifest in order; every
per-image step draws from its own substream, so results do not depend on
the worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np
from PIL import Image

from . import foreground, ingest, report, selection, softlabel, synthesis
from .config import PipelineConfig
from .errors import DataError, MaskMissing
from .rng import substream
from .scoring import ScorerHandle
from .foreground import ClassThreshold, Mask

log = logging.getLogger("patchstill")


@dataclass
class AnalysisResult:
    classes: list[ingest.ClassSpec]
    records: list[ingest.ImageRecord]
    ratios: dict[str, float]  # image_id -> occupancy ratio
    thresholds: dict[int, ClassThreshold]  # class_id -> threshold


@dataclass
class _OutputTracker:
    """Records every file a run writes, for the run.json digest table."""

    out_dir: Path
    written: dict[str, Path]

    def write_text(self, relpath: str, text: str) -> Path:
        path = self.out_dir / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.written[relpath] = path
        return path

    def write_png(self, relpath: str, pixels: np.ndarray) -> Path:
        path = self.out_dir / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(pixels, mode="RGB").save(path, format="PNG")
        self.written[relpath] = path
        return path

    def digests(self) -> dict[str, str]:
        return {
            rel: hashlib.sha256(path.read_bytes()).hexdigest()
            for rel, path in sorted(self.written.items())
        }


def _pmap(fn: Callable, items: Iterable, workers: int) -> list:
    items = list(items)
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _ensure_masks(cfg: PipelineConfig, classes: list[ingest.ClassSpec],
                  records: list[ingest.ImageRecord]) -> None:
    """Run the segmenter adapter for any record whose mask file is absent."""
    if cfg.segmenter.command is None:
        return
    prompts = {c.class_id: c.prompt for c in classes}
    missing = [
        r for r in records
        if not foreground.mask_path_for(cfg.masks_root, r).is_file()
    ]
    if not missing:
        return
    log.info("segmenter adapter: generating %d missing masks", len(missing))

    def gen(record: ingest.ImageRecord) -> None:
        foreground.run_segmenter_adapter(
            cfg.segmenter.command,
            record.path,
            prompts[record.class_id],
            foreground.mask_path_for(cfg.masks_root, record),
        )

    _pmap(gen, missing, cfg.segmenter.workers)


def _load_mask_for(cfg: PipelineConfig, record: ingest.ImageRecord) -> Mask:
    return foreground.load_mask(foreground.mask_path_for(cfg.masks_root, record), record)


def _with_skip(cfg: PipelineConfig, fn: Callable, records: list[ingest.ImageRecord]):
    """Map fn over records; under skip_bad_images drop failing records."""
    if not cfg.skip_bad_images:
        return records, _pmap(fn, records, cfg.workers)

    def guarded(record: ingest.ImageRecord):
        try:
            return fn(record)
        except DataError as exc:
            log.warning("skipping %s: %s", record.image_id, exc)
            return None

    results = _pmap(guarded, records, cfg.workers)
    kept = [(r, res) for r, res in zip(records, results) if res is not None]
    return [r for r, _ in kept], [res for _, res in kept]


def compute_analysis(cfg: PipelineConfig) -> AnalysisResult:
    """Scan, compute occupancy per image, derive per-class thresholds."""
    classes, records = ingest.scan_dataset(cfg.dataset_root)
    _ensure_masks(cfg, classes, records)

    def measure(record: ingest.ImageRecord) -> float:
        return foreground.occupancy(_load_mask_for(cfg, record)).ratio

    records, ratio_list = _with_skip(cfg, measure, records)
    if not records:
        raise MaskMissing("no usable images remain after skipping failures")
    ratios = {r.image_id: v for r, v in zip(records, ratio_list)}

    thresholds: dict[int, ClassThreshold] = {}
    for spec in classes:
        class_ratios = [ratios[r.image_id] for r in records if r.class_id == spec.class_id]
        if not class_ratios:
            log.warning("class %s lost all images; no threshold computed", spec.name)
            continue
        thresholds[spec.class_id] = ClassThreshold(
            class_id=spec.class_id,
            name=spec.name,
            quantile=cfg.quantile,
            threshold=foreground.class_threshold(class_ratios, cfg.quantile),
            count=len(class_ratios),
        )
    return AnalysisResult(classes=classes, records=records, ratios=ratios,
                          thresholds=thresholds)


def _write_analysis(cfg: PipelineConfig, analysis: AnalysisResult,
                    tracker: _OutputTracker) -> None:
    class_ids = {r.image_id: r.class_id for r in analysis.records}
    stats = [
        foreground.OccupancyStats(image_id=r.image_id, ratio=analysis.ratios[r.image_id])
        for r in analysis.records
    ]
    tracker.write_text("occupancy.csv", foreground.occupancy_csv(stats, class_ids))
    thresholds = [analysis.thresholds[cid] for cid in sorted(analysis.thresholds)]
    tracker.write_text(
        "thresholds.json",
        json.dumps(foreground.thresholds_json_payload(thresholds), indent=2) + "\n",
    )
    tracker.write_text("dataset_manifest.json", ingest.manifest_json(analysis.records))
    for spec in analysis.classes:
        if spec.class_id not in analysis.thresholds:
            continue
        class_ratios = [
            analysis.ratios[r.image_id]
            for r in analysis.records if r.class_id == spec.class_id
        ]
        hist = report.histogram(
            class_ratios, bins=20, class_id=spec.class_id,
            threshold=analysis.thresholds[spec.class_id].threshold,
        )
        tracker.write_text(
            f"report/occupancy_hist_{spec.name}.csv", report.histogram_csv(hist)
        )


def run_analyze(cfg: PipelineConfig) -> AnalysisResult:
    tracker = _OutputTracker(out_dir=Path(cfg.out_dir), written={})
    analysis = compute_analysis(cfg)
    _write_analysis(cfg, analysis, tracker)
    log.info("analyze: %d classes, %d images", len(analysis.classes), len(analysis.records))
    return analysis


def build_handle(mc, class_count: int) -> ScorerHandle:
    return ScorerHandle(
        kind=mc.kind,
        model_path=mc.model,
        input_side=mc.input_side,
        class_count=class_count,
        outputs=mc.outputs,
    )


def select_all(cfg: PipelineConfig, analysis: AnalysisResult,
               scorer: ScorerHandle) -> dict[int, list[selection.SelectedPatch]]:
    """Run dynamic selection for every image, grouped by class."""
    area = (cfg.select.area_min, cfg.select.area_max)
    aspect = (cfg.select.aspect_min, cfg.select.aspect_max)
    needs_mask = scorer.kind == "mock" and scorer.mock_predict is None

    def pick(record: ingest.ImageRecord) -> selection.SelectedPatch:
        image = ingest.load_image(record)
        mask = _load_mask_for(cfg, record) if needs_mask else None
        return selection.select_dynamic(
            image,
            ratio=analysis.ratios[record.image_id],
            threshold=analysis.thresholds[record.class_id].threshold,
            k=cfg.select.k,
            scorer=scorer,
            true_class=record.label,
            rng_stream=substream(cfg.seed, "select", record.image_id),
            s_patch=cfg.s_patch,
            area=area,
            aspect=aspect,
            mask=mask,
            image_id=record.image_id,
            class_id=record.class_id,
        )

    _, picks = _with_skip(cfg, pick, analysis.records)
    by_class: dict[int, list[selection.SelectedPatch]] = {}
    for patch in picks:
        by_class.setdefault(patch.class_id, []).append(patch)
    return by_class


def run_distill(cfg: PipelineConfig) -> Path:
    """Full distillation: selection, synthesis, soft labels, run manifest."""
    tracker = _OutputTracker(out_dir=Path(cfg.out_dir), written={})
    analysis = compute_analysis(cfg)
    _write_analysis(cfg, analysis, tracker)

    class_count = len(analysis.classes)
    scorer = build_handle(cfg.scorer, class_count)
    teacher = build_handle(cfg.teacher, class_count)
    plan = synthesis.SynthesisPlan.from_distilled_side(cfg.Z, cfg.n_ipc, cfg.distilled_side)
    class_names = {c.class_id: c.name for c in analysis.classes}

    by_class = select_all(cfg, analysis, scorer)

    distilled: list[tuple[str, synthesis.DistilledImage]] = []
    for class_id in sorted(by_class):
        ranked = synthesis.top_k(by_class[class_id], plan,
                                 allow_duplicates=cfg.allow_duplicates)
        for index, group in enumerate(synthesis.partition(ranked, plan.Z)):
            img = synthesis.synth(group, plan, index=index)
            distilled_id = f"{class_names[class_id]}/distilled_{index}"
            distilled.append((distilled_id, img))
            tracker.write_png(f"{distilled_id}.png", img.pixels)

    label_area = (cfg.label.area_min, cfg.label.area_max)
    label_aspect = (cfg.label.aspect_min, cfg.label.aspect_max)

    def label(entry: tuple[str, synthesis.DistilledImage]) -> softlabel.SoftLabel:
        distilled_id, img = entry
        crops = softlabel.label_crops(
            img, cfg.label.M, substream(cfg.seed, "label", distilled_id),
            input_side=teacher.input_side, area=label_area, aspect=label_aspect,
        )
        return softlabel.soft_label(teacher, crops, img.class_id, distilled_id=distilled_id)

    labels = _pmap(label, distilled, cfg.workers)
    tracker.write_text(
        "labels.json",
        json.dumps(softlabel.labels_json_payload(labels), indent=2) + "\n",
    )

    manifest = {
        "plan": {
            "Z": plan.Z, "n_ipc": plan.n_ipc, "grid_dim": plan.grid_dim,
            "cell_side": plan.cell_side, "distilled_side": plan.distilled_side,
        },
        "seed": cfg.seed,
        "images": [
            {
                "distilled_id": distilled_id,
                "class_id": img.class_id,
                "class_name": class_names[img.class_id],
                "index": img.index,
                "path": f"{distilled_id}.png",
                "members": [
                    {
                        "image_id": m.image_id,
                        "source": m.source,
                        "rect": {"x": m.rect.x, "y": m.rect.y, "w": m.rect.w, "h": m.rect.h},
                        "score": m.score,
                    }
                    for m in img.members
                ],
            }
            for distilled_id, img in distilled
        ],
    }
    tracker.write_text("manifest.json", json.dumps(manifest, indent=2) + "\n")

    run_payload = {
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
        "outputs": tracker.digests(),
    }
    run_path = Path(cfg.out_dir) / "run.json"
    run_path.write_text(json.dumps(run_payload, indent=2) + "\n", encoding="utf-8")
    log.info("distill: wrote %d distilled images for %d classes",
             len(distilled), class_count)
    return run_path


def _policy_retentions(cfg: PipelineConfig, analysis: AnalysisResult,
                       thresholds: dict[int, float],
                       seed: Optional[int] = None) -> dict[str, report.RetentionReport]:
    """Retention of each policy over the dataset, mask-based mock scorer."""
    seed = cfg.seed if seed is None else seed
    scorer = ScorerHandle(kind="mock", class_count=len(analysis.classes))
    area = (cfg.select.area_min, cfg.select.area_max)
    aspect = (cfg.select.aspect_min, cfg.select.aspect_max)

    def measure(record: ingest.ImageRecord) -> dict[str, float]:
        image = ingest.load_image(record)
        mask = _load_mask_for(cfg, record)
        out = {}
        for policy in report.POLICIES:
            picked = report.policy_select(
                policy, image, mask,
                ratio=analysis.ratios[record.image_id],
                threshold=thresholds[record.class_id],
                k=cfg.select.k, scorer=scorer, true_class=record.label,
                rng_stream=substream(seed, f"policy-{policy}", record.image_id),
                s_patch=cfg.s_patch, area=area, aspect=aspect,
                image_id=record.image_id,
            )
            out[policy] = report.retention(picked, mask)
        return out

    rows = _pmap(measure, analysis.records, cfg.workers)
    reports = {}
    for policy in report.POLICIES:
        per_class: dict[int, list[float]] = {}
        for record, row in zip(analysis.records, rows):
            per_class.setdefault(record.class_id, []).append(row[policy])
        reports[policy] = report.aggregate_retention(policy, per_class)
    return reports


def run_report(cfg: PipelineConfig) -> Path:
    """Histograms, threshold export, and the policy retention diagnostic."""
    tracker = _OutputTracker(out_dir=Path(cfg.out_dir), written={})
    analysis = compute_analysis(cfg)
    _write_analysis(cfg, analysis, tracker)

    thresholds = [analysis.thresholds[cid] for cid in sorted(analysis.thresholds)]
    tracker.write_text(
        "report/thresholds.json",
        json.dumps(foreground.thresholds_json_payload(thresholds), indent=2) + "\n",
    )
    retentions = _policy_retentions(
        cfg, analysis, {cid: t.threshold for cid, t in analysis.thresholds.items()}
    )
    payload = {
        "seed": cfg.seed,
        "policies": [
            {
                "policy": rep.policy,
                "mean_retention": rep.mean_retention,
                "per_class": rep.per_class,
            }
            for rep in retentions.values()
        ],
    }
    return tracker.write_text("report/retention.json", json.dumps(payload, indent=2) + "\n")


def run_sweep(cfg: PipelineConfig, quantiles: list[float]) -> Path:
    """Per-quantile thresholds, path counts, and retention summaries."""
    tracker = _OutputTracker(out_dir=Path(cfg.out_dir), written={})
    analysis = compute_analysis(cfg)

    class_ratios: dict[int, list[float]] = {}
    for record in analysis.records:
        class_ratios.setdefault(record.class_id, []).append(analysis.ratios[record.image_id])

    names = [c.name for c in analysis.classes if c.class_id in class_ratios]
    header = (
        ["quantile"]
        + [f"threshold_{n}" for n in names]
        + ["crop_count", "resize_count",
           "retention_dynamic", "retention_random_crop", "retention_resize_only"]
    )
    lines = [",".join(header)]
    for q in quantiles:
        thresholds = {
            cid: foreground.class_threshold(vals, q)
            for cid, vals in sorted(class_ratios.items())
        }
        crop_count = sum(
            1 for r in analysis.records
            if analysis.ratios[r.image_id] < thresholds[r.class_id]
        )
        resize_count = len(analysis.records) - crop_count
        rets = _policy_retentions(cfg, analysis, thresholds)
        row = (
            [f"{q:.6f}"]
            + [f"{thresholds[cid]:.6f}" for cid in sorted(thresholds)]
            + [str(crop_count), str(resize_count)]
            + [f"{rets[p].mean_retention:.6f}" for p in report.POLICIES]
        )
        lines.append(",".join(row))
    return tracker.write_text("report/sweep.csv", "\n".join(lines) + "\n")
