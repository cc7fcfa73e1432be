"""Train an observer/teacher on original images and export it as TorchScript.

The exported file follows the pipeline's classifier contract: one NCHW
float32 input normalized to [0, 1], one output vector of logits with
length equal to the class count.
"""

from __future__ import annotations

from pathlib import Path

import torch
import torch.nn.functional as F

from .models import SmallConvNet, accuracy, load_class_tree, train_soft

TEACHER_EPOCHS = 60
TEACHER_LR = 1e-3
TEACHER_BATCH = 32
TEACHER_SCALE = (0.55, 1.0)


def export_torchscript(model: torch.nn.Module, out_path: str | Path,
                       input_side: int = 32) -> Path:
    """Trace the model in eval mode and validate the saved file reloads."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    example = torch.zeros((1, 3, input_side, input_side))
    traced = torch.jit.trace(model.eval(), example)
    traced.save(str(out_path))
    reloaded = torch.jit.load(str(out_path))
    with torch.no_grad():
        probe = reloaded(example)
    if probe.reshape(-1).shape[0] != model.fc.out_features:
        raise RuntimeError("exported model output arity does not match the head")
    return out_path


def export_models(train_dir: str | Path, out_path: str | Path, seed: int = 0,
                  epochs: int = TEACHER_EPOCHS,
                  scale=TEACHER_SCALE) -> tuple[Path, float]:
    """Train on the class tree at train_dir, export, return (path, train acc).

    The same file serves as both the observer (realism scorer) and the
    soft-label teacher. Augmentation stays close to full views so the
    model mirrors a classifier trained on originals.
    """
    x, y, classes = load_class_tree(train_dir)
    targets = F.one_hot(y, len(classes)).float()
    model = train_soft(x, targets, len(classes), epochs=epochs, lr=TEACHER_LR,
                       batch_size=TEACHER_BATCH, seed=seed, scale=scale)
    path = export_torchscript(model, out_path)
    return path, accuracy(model, x, y)


def export_untrained(n_classes: int, out_path: str | Path, seed: int = 0) -> Path:
    """Random-weight export; still a contract-conforming classifier file."""
    torch.manual_seed(seed)
    return export_torchscript(SmallConvNet(n_classes), out_path)
