"""Joint training of the day->night and night->day generators.

Both mappings are trained simultaneously against their own patch
discriminators; the total generator objective is the two least-squares
adversarial terms plus lambda_cycle times the two reconstruction (cycle)
terms. Identical (seed, data, config) reruns produce identical loss logs
and weights.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch.optim import Adam
from torch.optim.lr_scheduler import LambdaLR

from ..errors import EmptyDataset, NonFiniteLoss
from ..imaging import load_image, resize_image, to_signed
from ..logs import write_csv_log
from ..seeding import derive_seed
from ..tensorops import image_to_tensor
from .buffer import ImageBuffer
from .losses import adversarial_loss, cycle_consistency_loss
from .networks import TranslatorArch, build_discriminator, build_generator
from .weights import TranslatorWeights, _state_to_numpy

log = logging.getLogger(__name__)

LOSS_COLUMNS = ("epoch", "iter", "loss_G", "loss_F", "loss_DX", "loss_DY",
                "cycle_X", "cycle_Y")


@dataclass
class GanTrainConfig:
    epochs: int = 10
    batch_size: int = 1
    learning_rate: float = 2e-4
    lambda_cycle: float = 10.0
    identity_weight: float = 0.0  # relative identity-term weight, off by default
    buffer_size: int = 50
    image_size: tuple = (480, 270)  # (w, h)
    base_channels: int = 64
    n_res_blocks: int = 6
    disc_base_channels: int = 64
    disc_layers: int = 3
    adam_betas: tuple = (0.5, 0.999)
    cache_images: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.lambda_cycle <= 0:
            raise ValueError(f"lambda_cycle must be positive, got {self.lambda_cycle}")
        if self.buffer_size < 0:
            raise ValueError(f"buffer_size must be >= 0, got {self.buffer_size}")
        if len(self.image_size) != 2 or min(self.image_size) < 32:
            raise ValueError(f"image_size components must be >= 32, got {self.image_size}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.identity_weight < 0:
            raise ValueError(f"identity_weight must be >= 0, got {self.identity_weight}")

    def arch(self) -> TranslatorArch:
        return TranslatorArch(
            base_channels=self.base_channels,
            n_res_blocks=self.n_res_blocks,
            disc_base_channels=self.disc_base_channels,
            disc_layers=self.disc_layers,
            image_size=tuple(self.image_size),
        )


@dataclass
class GanTrainResult:
    weights: TranslatorWeights
    loss_log: list = field(repr=False, default_factory=list)


class _ImagePool:
    """Loads images at the working size, optionally caching decoded tensors."""

    def __init__(self, paths, size, cache: bool):
        self.paths = [Path(p) for p in paths]
        self.size = size
        self._cache = {} if cache else None

    def __len__(self):
        return len(self.paths)

    def get(self, index: int) -> torch.Tensor:
        if self._cache is not None and index in self._cache:
            return self._cache[index]
        img = to_signed(resize_image(load_image(self.paths[index]), *self.size))
        t = image_to_tensor(img).squeeze(0)
        if self._cache is not None:
            self._cache[index] = t
        return t


def _as_paths(dataset) -> list:
    if hasattr(dataset, "image_paths"):
        return list(dataset.image_paths())
    return [Path(p) for p in dataset]


def _linear_halfway_decay(epochs: int):
    # constant lr for the first half, then linear decay to zero at the end
    half = epochs / 2.0

    def factor(epoch: int) -> float:
        if epoch < half:
            return 1.0
        return max(0.0, (epochs - epoch) / (epochs - half))

    return factor


def train_translator(day_set, night_set, cfg: GanTrainConfig,
                     log_path=None) -> GanTrainResult:
    """Train both translators and return their weights plus the loss log."""
    cfg.validate()
    day_paths = _as_paths(day_set)
    night_paths = _as_paths(night_set)
    if not day_paths:
        raise EmptyDataset("day set is empty")
    if not night_paths:
        raise EmptyDataset("night set is empty")

    torch.manual_seed(cfg.seed)
    arch = cfg.arch()
    gen_g = build_generator(arch)   # day -> night
    gen_f = build_generator(arch)   # night -> day
    disc_day = build_discriminator(arch)
    disc_night = build_discriminator(arch)

    params_g = list(gen_g.parameters()) + list(gen_f.parameters())
    params_d = list(disc_day.parameters()) + list(disc_night.parameters())
    opt_g = Adam(params_g, lr=cfg.learning_rate, betas=tuple(cfg.adam_betas))
    opt_d = Adam(params_d, lr=cfg.learning_rate, betas=tuple(cfg.adam_betas))
    decay = _linear_halfway_decay(cfg.epochs)
    sched_g = LambdaLR(opt_g, decay)
    sched_d = LambdaLR(opt_d, decay)

    day_pool = _ImagePool(day_paths, cfg.image_size, cfg.cache_images)
    night_pool = _ImagePool(night_paths, cfg.image_size, cfg.cache_images)
    buffer_night = ImageBuffer(cfg.buffer_size, derive_seed(cfg.seed, "buffer:night"))
    buffer_day = ImageBuffer(cfg.buffer_size, derive_seed(cfg.seed, "buffer:day"))

    n_iters = max(1, max(len(day_pool), len(night_pool)) // cfg.batch_size)
    rows = []
    for epoch in range(cfg.epochs):
        shuffle = random.Random(derive_seed(cfg.seed, f"shuffle:{epoch}"))
        day_order = list(range(len(day_pool)))
        night_order = list(range(len(night_pool)))
        shuffle.shuffle(day_order)
        shuffle.shuffle(night_order)

        for it in range(n_iters):
            x = torch.stack([
                day_pool.get(day_order[(it * cfg.batch_size + j) % len(day_pool)])
                for j in range(cfg.batch_size)
            ])
            y = torch.stack([
                night_pool.get(night_order[(it * cfg.batch_size + j) % len(night_pool)])
                for j in range(cfg.batch_size)
            ])

            # generator step
            fake_night = gen_g(x)
            fake_day = gen_f(y)
            rec_day = gen_f(fake_night)
            rec_night = gen_g(fake_day)
            loss_g_adv = adversarial_loss(disc_night(fake_night), True)
            loss_f_adv = adversarial_loss(disc_day(fake_day), True)
            cycle_x = cycle_consistency_loss(x, rec_day)
            cycle_y = cycle_consistency_loss(y, rec_night)
            total_g = loss_g_adv + loss_f_adv + cfg.lambda_cycle * (cycle_x + cycle_y)
            if cfg.identity_weight > 0:
                idt = cycle_consistency_loss(gen_g(y), y) + cycle_consistency_loss(gen_f(x), x)
                total_g = total_g + cfg.identity_weight * cfg.lambda_cycle * idt
            opt_g.zero_grad()
            total_g.backward()
            opt_g.step()

            # discriminator step, scoring buffered fakes
            pool_night = buffer_night.push_and_sample(fake_night)
            pool_day = buffer_day.push_and_sample(fake_day)
            loss_d_day = 0.5 * (adversarial_loss(disc_day(x), True)
                                + adversarial_loss(disc_day(pool_day), False))
            loss_d_night = 0.5 * (adversarial_loss(disc_night(y), True)
                                  + adversarial_loss(disc_night(pool_night), False))
            opt_d.zero_grad()
            (loss_d_day + loss_d_night).backward()
            opt_d.step()

            row = {
                "epoch": epoch,
                "iter": it,
                "loss_G": loss_g_adv.item(),
                "loss_F": loss_f_adv.item(),
                "loss_DX": loss_d_day.item(),
                "loss_DY": loss_d_night.item(),
                "cycle_X": cycle_x.item(),
                "cycle_Y": cycle_y.item(),
            }
            for key in LOSS_COLUMNS[2:]:
                if not math.isfinite(row[key]):
                    raise NonFiniteLoss(
                        f"{key} became {row[key]} at epoch {epoch} iter {it}"
                    )
            rows.append(row)

        sched_g.step()
        sched_d.step()
        log.info(
            "gan epoch %d/%d: G=%.4f F=%.4f cycleX=%.4f cycleY=%.4f",
            epoch + 1, cfg.epochs, rows[-1]["loss_G"], rows[-1]["loss_F"],
            rows[-1]["cycle_X"], rows[-1]["cycle_Y"],
        )

    if log_path is not None:
        write_csv_log(log_path, LOSS_COLUMNS, rows)

    weights = TranslatorWeights(
        arch=arch,
        rng_seed=cfg.seed,
        gen_day2night=_state_to_numpy(gen_g),
        gen_night2day=_state_to_numpy(gen_f),
        disc_day=_state_to_numpy(disc_day),
        disc_night=_state_to_numpy(disc_night),
    )
    return GanTrainResult(weights=weights, loss_log=rows)
