"""Small CNN, soft-target training loop, and evaluation helpers.

The loss is cross-entropy against distribution targets (identical to KL
divergence up to the targets' entropy), so one-hot and soft labels go
through the same path. Training crops each batch with a random resized
crop so students trained on patch composites also see single-cell views.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image


class SmallConvNet(torch.nn.Module):
    """Three conv blocks with batch norm, global average pool, linear head."""

    def __init__(self, n_classes: int = 3, width: int = 32):
        super().__init__()
        self.conv1 = torch.nn.Conv2d(3, width, 3, padding=1)
        self.bn1 = torch.nn.BatchNorm2d(width)
        self.conv2 = torch.nn.Conv2d(width, width * 2, 3, padding=1)
        self.bn2 = torch.nn.BatchNorm2d(width * 2)
        self.conv3 = torch.nn.Conv2d(width * 2, width * 4, 3, padding=1)
        self.bn3 = torch.nn.BatchNorm2d(width * 4)
        self.fc = torch.nn.Linear(width * 4, n_classes)

    def forward(self, x):
        x = F.relu(self.bn1(self.conv1(x)))
        x = F.max_pool2d(x, 2)
        x = F.relu(self.bn2(self.conv2(x)))
        x = F.max_pool2d(x, 2)
        x = F.relu(self.bn3(self.conv3(x)))
        x = x.mean(dim=(2, 3))
        return self.fc(x)


def load_class_tree(root: str | Path):
    """Images and hard labels from a directory-per-class PNG tree."""
    root = Path(root)
    classes = sorted(d.name for d in root.iterdir() if d.is_dir())
    if not classes:
        raise ValueError(f"no class directories under {root}")
    images, labels = [], []
    for ci, name in enumerate(classes):
        for p in sorted((root / name).glob("*.png")):
            images.append(np.asarray(Image.open(p).convert("RGB"),
                                     dtype=np.float32) / 255.0)
            labels.append(ci)
    x = torch.from_numpy(np.stack(images)).permute(0, 3, 1, 2)
    return x, torch.tensor(labels), classes


def load_distilled(out_dir: str | Path):
    """Distilled images and soft targets via labels.json (the file contract)."""
    out_dir = Path(out_dir)
    rows = json.loads((out_dir / "labels.json").read_text(encoding="utf-8"))
    if not rows:
        raise ValueError(f"{out_dir}/labels.json holds no rows")
    n = len(rows[0]["probs"])
    images, targets = [], []
    for row in rows:
        if len(row["probs"]) != n:
            raise ValueError("labels.json rows disagree on class count")
        img = np.asarray(
            Image.open(out_dir / f"{row['distilled_id']}.png").convert("RGB"),
            dtype=np.float32) / 255.0
        images.append(img)
        targets.append(row["probs"])
    x = torch.from_numpy(np.stack(images)).permute(0, 3, 1, 2)
    return x, torch.tensor(targets, dtype=torch.float32)


def random_resized_crop(batch: torch.Tensor, out_side: int, gen: torch.Generator,
                        scale=(0.25, 1.0), ratio=(0.75, 4 / 3)) -> torch.Tensor:
    n, c, h, w = batch.shape
    out = torch.empty((n, c, out_side, out_side))
    for i in range(n):
        a = float(torch.empty(1).uniform_(scale[0], scale[1], generator=gen))
        rho = float(torch.empty(1).uniform_(ratio[0], ratio[1], generator=gen))
        cw = min(max(int(round((a * w * h * rho) ** 0.5)), 1), w)
        ch = min(max(int(round((a * w * h / rho) ** 0.5)), 1), h)
        x0 = int(torch.randint(0, w - cw + 1, (1,), generator=gen))
        y0 = int(torch.randint(0, h - ch + 1, (1,), generator=gen))
        patch = batch[i : i + 1, :, y0 : y0 + ch, x0 : x0 + cw]
        out[i] = F.interpolate(patch, size=(out_side, out_side), mode="bilinear",
                               align_corners=False)[0]
    return out


def train_soft(x: torch.Tensor, targets: torch.Tensor, n_classes: int,
               epochs: int, lr: float, batch_size: int, seed: int,
               input_side: int = 32, scale=(0.25, 1.0)) -> SmallConvNet:
    """Train from scratch with cross-entropy against distribution targets."""
    if targets.shape[1] != n_classes:
        raise ValueError(
            f"targets have {targets.shape[1]} classes, expected {n_classes}")
    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed + 1)
    model = SmallConvNet(n_classes)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=epochs)
    n = x.shape[0]
    model.train()
    for _ in range(epochs):
        perm = torch.randperm(n, generator=gen)
        for s in range(0, n, batch_size):
            idx = perm[s : s + batch_size]
            xb = random_resized_crop(x[idx], input_side, gen, scale=scale)
            tb = targets[idx]
            logits = model(xb)
            loss = -(tb * F.log_softmax(logits, dim=1)).sum(dim=1).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
        sched.step()
    model.eval()
    return model


def accuracy(model: torch.nn.Module, x: torch.Tensor, y: torch.Tensor) -> float:
    with torch.no_grad():
        pred = model(x).argmax(dim=1)
    return float((pred == y).float().mean())
