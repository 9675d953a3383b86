from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn

from .backbone import BackboneConfig, ResNetEncoder
from .gaze import ModelInputError

OUTPUT_PRIOR = 0.01
# channel order of the encoder input
CHANNELS = ("r", "g", "b", "head_mask", "fov", "fov_sharp")


@dataclass
class HeatmapNetConfig:
    input_channels: int = 6
    image_size: int = 224
    output_size: int = 64
    decoder_channels: tuple[int, ...] = (1024, 512, 256, 128)
    backbone: BackboneConfig = field(default_factory=BackboneConfig)


class HeatmapNet(nn.Module):
    """Encoder-decoder from [RGB, head mask, V, V-hat] to a 64x64 target heatmap in [0, 1].

    Decoder: two 1x1 convolutions, then three stride-2 transposed convolutions
    (kernels 3, 3, 4) taking a 7x7 map to 15, 31 and 64 cells.
    """

    def __init__(self, cfg: HeatmapNetConfig | None = None):
        super().__init__()
        cfg = cfg or HeatmapNetConfig()
        self.cfg = cfg
        c1, c2, c3, c4 = cfg.decoder_channels
        self.encoder = ResNetEncoder(cfg.input_channels, cfg.backbone)
        self.compress = nn.Sequential(
            nn.Conv2d(cfg.backbone.out_channels, c1, 1, bias=False),
            nn.BatchNorm2d(c1),
            nn.ReLU(inplace=True),
            nn.Conv2d(c1, c2, 1, bias=False),
            nn.BatchNorm2d(c2),
            nn.ReLU(inplace=True),
        )
        self.deconv = nn.Sequential(
            nn.ConvTranspose2d(c2, c3, 3, stride=2),
            nn.BatchNorm2d(c3),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(c3, c4, 3, stride=2),
            nn.BatchNorm2d(c4),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(c4, 1, 4, stride=2),
        )
        # start near the empty-heatmap prior instead of sigmoid(0) = 0.5 everywhere
        nn.init.constant_(self.deconv[-1].bias, math.log(OUTPUT_PRIOR / (1 - OUTPUT_PRIOR)))
        if cfg.backbone.pretrained:
            self.encoder.load_imagenet()

    def forward(self, scene, head_mask, v, v_hat) -> torch.Tensor:
        """All inputs at ``image_size``; scene is (B, 3, S, S), the rest (B, S, S) or (B, 1, S, S)."""
        maps = [t if t.dim() == 4 else t.unsqueeze(1) for t in (head_mask, v, v_hat)]
        x = torch.cat([scene, *maps], dim=1)
        s = self.cfg.image_size
        if x.shape[1:] != (self.cfg.input_channels, s, s):
            raise ModelInputError(
                f"expected ({self.cfg.input_channels}, {s}, {s}) input, got {tuple(x.shape[1:])}"
            )
        out = self.deconv(self.compress(self.encoder(x)))
        size = self.cfg.output_size
        if out.shape[-2:] != (size, size):
            out = F.interpolate(out, size=(size, size), mode="bilinear", align_corners=False)
        return torch.sigmoid(out[:, 0])
