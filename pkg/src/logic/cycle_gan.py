"""
Cycle-consistent style transfer between two discovered style clusters.

Generators are small encoder-decoders; discriminators score patches. The
adversarial objective is least-squares.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from tqdm import tqdm

from src.imaging.image import RgbImage
from src.models.configs import CycleTrainConfig
from src.models.reports import TrainingLog
from src.numerics import functional as F
from src.numerics.layers import Conv2d, Module
from src.numerics.optim import Optimizer
from src.numerics.resize import resize_array
from src.numerics.tensor import ShapeError, Tensor, backward, no_grad

logger = logging.getLogger(__name__)

DOWNSAMPLE = 4
EVAL_BATCH = 16

ImageFn = Callable[[Tensor], Tensor]


class ResidualBlock(Module):
    def __init__(self, channels: int, rng: np.random.Generator):
        self.conv1 = Conv2d(channels, channels, rng)
        self.conv2 = Conv2d(channels, channels, rng, init_std=0.01)

    def forward(self, x: Tensor) -> Tensor:
        return x + self.conv2(F.relu(self.conv1(x)))


class Generator(Module):
    """
    Encoder-decoder mapping [0, 1] images to [0, 1] images of the same size.

    Two conv + 2x2 average-pool steps go down to 1/4 resolution, residual blocks
    work there, and two nearest-upsample + conv steps come back up. The output
    conv also sees the input image. Inputs whose sides are not multiples of 4
    are edge-padded and the output is cropped back.
    """

    def __init__(self, config: CycleTrainConfig, rng: np.random.Generator):
        c = config.base_channels
        self.stem = Conv2d(3, c, rng)
        self.down1 = Conv2d(c, 2 * c, rng)
        self.down2 = Conv2d(2 * c, 2 * c, rng)
        self.blocks = [ResidualBlock(2 * c, rng) for _ in range(config.residual_blocks)]
        self.up1 = Conv2d(2 * c, c, rng)
        self.up2 = Conv2d(c, c, rng)
        self.out = Conv2d(c + 3, 3, rng, init_std=0.01)
        self.image_size = config.image_size

    def forward(self, x: Tensor) -> Tensor:
        _, _, h, w = x.shape
        pad_h, pad_w = (-h) % DOWNSAMPLE, (-w) % DOWNSAMPLE
        if pad_h or pad_w:
            x = F.pad_edge(x, pad_h // 2, pad_h - pad_h // 2, pad_w // 2, pad_w - pad_w // 2)
        centered = x - 0.5
        y = F.relu(self.stem(centered))
        y = F.avg_pool2(F.relu(self.down1(y)))
        y = F.avg_pool2(F.relu(self.down2(y)))
        for block in self.blocks:
            y = block(y)
        y = F.relu(self.up1(F.upsample_nearest2(y)))
        y = F.relu(self.up2(F.upsample_nearest2(y)))
        y = self.out(F.concat_channels(y, centered * 2.0))
        y = (F.tanh(y) + 1.0) * 0.5
        if pad_h or pad_w:
            y = F.crop(y, pad_h // 2, pad_w // 2, h, w)
        return y


class Discriminator(Module):
    """Patch classifier producing a 1-channel score map at 1/4 resolution."""

    def __init__(self, config: CycleTrainConfig, rng: np.random.Generator):
        c = config.base_channels
        self.conv1 = Conv2d(3, c, rng)
        self.conv2 = Conv2d(c, 2 * c, rng)
        self.conv3 = Conv2d(2 * c, 2 * c, rng)
        self.score = Conv2d(2 * c, 1, rng)

    def forward(self, x: Tensor) -> Tensor:
        y = F.avg_pool2(F.leaky_relu(self.conv1(x - 0.5)))
        y = F.avg_pool2(F.leaky_relu(self.conv2(y)))
        y = F.leaky_relu(self.conv3(y))
        return self.score(y)


@dataclass
class CycleLosses:
    adv_a: Tensor  # G_ba(b) judged by D_a
    adv_b: Tensor  # G_ab(a) judged by D_b
    cycle: Tensor
    identity: Tensor
    total: Tensor
    fake_a: Tensor
    fake_b: Tensor

    def as_dict(self) -> dict:
        return {
            "adv_a": self.adv_a.item(),
            "adv_b": self.adv_b.item(),
            "cycle": self.cycle.item(),
            "identity": self.identity.item(),
            "g_total": self.total.item(),
        }


def cycle_losses(
    g_ab: ImageFn,
    g_ba: ImageFn,
    d_a: ImageFn,
    d_b: ImageFn,
    batch_a: Tensor,
    batch_b: Tensor,
    lambda_cycle: float = 10.0,
    lambda_identity_rel: float = 0.1,
) -> CycleLosses:
    """
    Generator-side loss components.

    total = adv_a + adv_b + lambda_cycle * cycle + lambda_cycle * lambda_identity_rel * identity
    """
    if batch_a.shape[1:] != batch_b.shape[1:]:
        raise ShapeError(f"cycle_losses needs batches with equal C,H,W; got {batch_a.shape} and {batch_b.shape}")
    fake_b = g_ab(batch_a)
    fake_a = g_ba(batch_b)
    cycle = F.l1_loss(g_ba(fake_b), batch_a) + F.l1_loss(g_ab(fake_a), batch_b)
    identity = F.l1_loss(g_ab(batch_b), batch_b) + F.l1_loss(g_ba(batch_a), batch_a)
    adv_a = F.mse_loss(d_a(fake_a), 1.0)
    adv_b = F.mse_loss(d_b(fake_b), 1.0)
    total = adv_a + adv_b + cycle * lambda_cycle + identity * (lambda_cycle * lambda_identity_rel)
    return CycleLosses(
        adv_a=adv_a, adv_b=adv_b, cycle=cycle, identity=identity, total=total, fake_a=fake_a, fake_b=fake_b
    )


def discriminator_loss(d: ImageFn, real: Tensor, fake: Tensor) -> Tensor:
    """Least-squares: real scored toward 1, fake toward 0."""
    return (F.mse_loss(d(real), 1.0) + F.mse_loss(d(fake.detach()), 0.0)) * 0.5


def prepare_cycle_images(images: Sequence[RgbImage], size: int) -> np.ndarray:
    return np.stack([np.clip(resize_array(img.to_chw(), size, size), 0.0, 1.0) for img in images]).astype(
        np.float32
    )


@dataclass
class CycleTrainResult:
    g_to_b: Generator  # A -> B
    g_to_a: Generator  # B -> A
    log: TrainingLog
    initial_cycle_loss: float
    final_cycle_loss: float


def _prefixed(prefix: str, module: Module) -> dict:
    return {f"{prefix}.{name}": p for name, p in module.parameters().items()}


def _eval_cycle(g_ab: Generator, g_ba: Generator, a: np.ndarray, b: np.ndarray) -> float:
    with no_grad():
        ta, tb = Tensor(a), Tensor(b)
        return (F.l1_loss(g_ba(g_ab(ta)), ta) + F.l1_loss(g_ab(g_ba(tb)), tb)).item()


def train_cycle_generators(
    images_a: Sequence[RgbImage],
    images_b: Sequence[RgbImage],
    config: CycleTrainConfig,
    seed: int = None,
) -> CycleTrainResult:
    """
    Alternate generator and discriminator Adam updates on random batches of A and B.

    Raises:
        ValueError: either cluster is empty
    """
    if not images_a or not images_b:
        raise ValueError(f"Both clusters need images; got |A|={len(images_a)}, |B|={len(images_b)}")
    rng = np.random.default_rng(config.seed if seed is None else seed)
    data_a = prepare_cycle_images(images_a, config.image_size)
    data_b = prepare_cycle_images(images_b, config.image_size)

    g_ab, g_ba = Generator(config, rng), Generator(config, rng)
    d_a, d_b = Discriminator(config, rng), Discriminator(config, rng)
    hyper = dict(betas=tuple(config.betas))
    opt_g = Optimizer.create({**_prefixed("g_ab", g_ab), **_prefixed("g_ba", g_ba)}, "adam", config.lr, **hyper)
    opt_d = Optimizer.create({**_prefixed("d_a", d_a), **_prefixed("d_b", d_b)}, "adam", config.lr, **hyper)

    eval_a, eval_b = data_a[:EVAL_BATCH], data_b[:EVAL_BATCH]
    initial_cycle = _eval_cycle(g_ab, g_ba, eval_a, eval_b)
    logger.info(
        f"Cycle training: |A|={len(data_a)}, |B|={len(data_b)}, {config.iterations} iterations, "
        f"initial cycle loss {initial_cycle:.4f}"
    )

    log = TrainingLog()
    for iteration in tqdm(range(config.iterations), desc="cycle", disable=None):
        idx_a = rng.choice(len(data_a), size=min(config.batch_size, len(data_a)), replace=False)
        idx_b = rng.choice(len(data_b), size=min(config.batch_size, len(data_b)), replace=False)
        batch_a, batch_b = Tensor(data_a[idx_a]), Tensor(data_b[idx_b])

        losses = cycle_losses(
            g_ab, g_ba, d_a, d_b, batch_a, batch_b, config.lambda_cycle, config.lambda_identity_rel
        )
        backward(losses.total)
        opt_g.step()
        opt_g.zero_grad()
        opt_d.zero_grad()

        d_loss = discriminator_loss(d_a, batch_a, losses.fake_a) + discriminator_loss(d_b, batch_b, losses.fake_b)
        backward(d_loss)
        opt_d.step()
        opt_d.zero_grad()

        if iteration % config.log_interval == 0 or iteration == config.iterations - 1:
            values = losses.as_dict()
            log.record(iteration=iteration, d_loss=d_loss.item(), **values)
            logger.info(
                f"cycle iter {iteration}: g_total {values['g_total']:.4f} cycle {values['cycle']:.4f} "
                f"identity {values['identity']:.4f} d_loss {d_loss.item():.4f}"
            )

    final_cycle = _eval_cycle(g_ab, g_ba, eval_a, eval_b)
    logger.info(f"Cycle training done: cycle loss {initial_cycle:.4f} -> {final_cycle:.4f}")
    return CycleTrainResult(
        g_to_b=g_ab, g_to_a=g_ba, log=log, initial_cycle_loss=initial_cycle, final_cycle_loss=final_cycle
    )
