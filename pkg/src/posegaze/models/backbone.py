"""Bottleneck residual encoder.

With ``layers=(3, 4, 6, 3)`` and ``base_width=64`` this is ResNet-50, and parameter
names line up with torchvision's so ImageNet weights can be loaded directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class BackboneConfig:
    layers: tuple[int, ...] = (3, 4, 6, 3)
    base_width: int = 64
    pretrained: bool = False

    @property
    def out_channels(self) -> int:
        return self.base_width * 8 * Bottleneck.expansion


class Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, inplanes: int, planes: int, stride: int = 1, downsample: nn.Module | None = None):
        super().__init__()
        self.conv1 = nn.Conv2d(inplanes, planes, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(planes)
        self.conv2 = nn.Conv2d(planes, planes, 3, stride=stride, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(planes)
        self.conv3 = nn.Conv2d(planes, planes * self.expansion, 1, bias=False)
        self.bn3 = nn.BatchNorm2d(planes * self.expansion)
        self.relu = nn.ReLU(inplace=True)
        self.downsample = downsample

    def forward(self, x):
        identity = x if self.downsample is None else self.downsample(x)
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.relu(self.bn2(self.conv2(out)))
        out = self.bn3(self.conv3(out))
        return self.relu(out + identity)


class ResNetEncoder(nn.Module):
    """Residual encoder returning the stride-32 feature map."""

    def __init__(self, in_channels: int, cfg: BackboneConfig):
        super().__init__()
        w = cfg.base_width
        self.conv1 = nn.Conv2d(in_channels, w, 7, stride=2, padding=3, bias=False)
        self.bn1 = nn.BatchNorm2d(w)
        self.relu = nn.ReLU(inplace=True)
        self.maxpool = nn.MaxPool2d(3, stride=2, padding=1)
        self.inplanes = w
        self.layer1 = self._make_layer(w, cfg.layers[0], 1)
        self.layer2 = self._make_layer(w * 2, cfg.layers[1], 2)
        self.layer3 = self._make_layer(w * 4, cfg.layers[2], 2)
        self.layer4 = self._make_layer(w * 8, cfg.layers[3], 2)
        self.out_channels = cfg.out_channels

        for m in self.modules():
            if isinstance(m, nn.Conv2d):
                nn.init.kaiming_normal_(m.weight, mode="fan_out", nonlinearity="relu")
            elif isinstance(m, nn.BatchNorm2d):
                nn.init.ones_(m.weight)
                nn.init.zeros_(m.bias)

    def _make_layer(self, planes: int, blocks: int, stride: int) -> nn.Sequential:
        downsample = None
        if stride != 1 or self.inplanes != planes * Bottleneck.expansion:
            downsample = nn.Sequential(
                nn.Conv2d(self.inplanes, planes * Bottleneck.expansion, 1, stride=stride, bias=False),
                nn.BatchNorm2d(planes * Bottleneck.expansion),
            )
        layers = [Bottleneck(self.inplanes, planes, stride, downsample)]
        self.inplanes = planes * Bottleneck.expansion
        layers += [Bottleneck(self.inplanes, planes) for _ in range(1, blocks)]
        return nn.Sequential(*layers)

    def forward(self, x):
        x = self.maxpool(self.relu(self.bn1(self.conv1(x))))
        x = self.layer1(x)
        x = self.layer2(x)
        x = self.layer3(x)
        return self.layer4(x)

    def load_imagenet(self) -> None:
        """Copy torchvision's ImageNet ResNet-50 weights in (downloads on first use).

        The first convolution is adapted to the input channel count: RGB filters are
        kept for the first three channels, extra channels get the channel mean, and a
        single-channel input gets the mean filter.
        """
        from torchvision.models import ResNet50_Weights, resnet50

        state = resnet50(weights=ResNet50_Weights.IMAGENET1K_V1).state_dict()
        state = {k: v for k, v in state.items() if not k.startswith("fc.")}
        rgb = state["conv1.weight"]
        in_ch = self.conv1.in_channels
        mean = rgb.mean(dim=1, keepdim=True)
        if in_ch == 1:
            state["conv1.weight"] = mean
        else:
            extra = mean.repeat(1, max(in_ch - 3, 0), 1, 1)
            state["conv1.weight"] = torch.cat([rgb[:, :in_ch], extra], dim=1)
        self.load_state_dict(state)
