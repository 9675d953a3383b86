"""Conversion of the public GFIE release into a posegaze manifest."""

from __future__ import annotations


def convert_gfie(release_root, out_dir, pose_dir) -> None:
    """Write ``out_dir/manifest.jsonl`` for a GFIE release plus externally estimated 2D poses.

    Not implemented: the release's on-disk layout has to be inspected first.  The
    converter must map each frame's RGB, depth (to 16-bit mm PNG), camera
    parameters, head box, 2D/3D eye position, gaze vector and 2D/3D target to one
    record of :mod:`posegaze.data.manifest`, with ``split`` taken from the
    release's train/valid/test lists.
    """
    raise NotImplementedError(
        "GFIE conversion needs the actual release layout; see posegaze.data.manifest for the target format"
    )
