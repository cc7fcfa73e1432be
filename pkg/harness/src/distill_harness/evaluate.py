"""Train students on distilled outputs and evaluate on held-out originals.

The harness touches only the pipeline's documented file formats: the
distilled PNG tree plus labels.json for training data, and a plain
directory-per-class tree for the test split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean, pstdev

from .models import accuracy, load_class_tree, load_distilled, train_soft

STUDENT_EPOCHS = 200
STUDENT_LR = 2e-3
STUDENT_BATCH = 16
STUDENT_SCALE = (0.2, 1.0)


@dataclass
class EvalRunSpec:
    distilled_dir: Path
    labels: Path
    test_dir: Path
    epochs: int = STUDENT_EPOCHS
    batch_size: int = STUDENT_BATCH
    lr: float = STUDENT_LR
    seeds: tuple[int, ...] = (0, 1, 2)
    scale: tuple[float, float] = STUDENT_SCALE

    def __post_init__(self) -> None:
        # reported comparisons average at least three trials
        if len(self.seeds) < 3:
            raise ValueError(f"need >= 3 seeds for a reported result, got {self.seeds}")
        self.distilled_dir = Path(self.distilled_dir)
        self.labels = Path(self.labels)
        self.test_dir = Path(self.test_dir)


@dataclass
class EvalResult:
    mean_accuracy: float
    std_accuracy: float
    per_seed: list[float] = field(default_factory=list)


def train_eval(spec: EvalRunSpec) -> EvalResult:
    """Top-1 accuracy mean and std over the spec's training seeds."""
    if spec.labels.parent != spec.distilled_dir:
        raise ValueError("labels.json is expected inside the distilled directory")
    x, targets = load_distilled(spec.distilled_dir)
    xt, yt, classes = load_class_tree(spec.test_dir)
    if targets.shape[1] != len(classes):
        raise ValueError(
            f"labels.json has {targets.shape[1]} classes, test split has {len(classes)}")
    accs = []
    for seed in spec.seeds:
        model = train_soft(x, targets, len(classes), epochs=spec.epochs,
                           lr=spec.lr, batch_size=spec.batch_size, seed=seed,
                           scale=spec.scale)
        accs.append(accuracy(model, xt, yt))
    return EvalResult(mean_accuracy=mean(accs), std_accuracy=pstdev(accs),
                      per_seed=accs)
