"""Region-aware attention masks, masked attention and LR synthesis."""

import json

from ._core import (
    BoundingBox,
    PreparedRegions,
    RagsrError,
    RegionAnnotation,
    Scene,
    attention_backward,
    attention_forward,
    build_masks,
    degrade,
    load_scene,
    parse_scene,
    prepare,
    psnr,
    run_loop,
    save_scene,
    verify_json,
)

__all__ = [
    "BoundingBox",
    "PreparedRegions",
    "RagsrError",
    "RegionAnnotation",
    "Scene",
    "attention_backward",
    "attention_forward",
    "build_masks",
    "degrade",
    "load_scene",
    "parse_scene",
    "prepare",
    "psnr",
    "run_loop",
    "save_scene",
    "verify",
]


def verify(suite="all", scenes=1000, seed=0):
    """Run the self-check suites and return the report as a dict."""
    return json.loads(verify_json(suite, scenes, seed))
