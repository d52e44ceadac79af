import math
import pathlib

import numpy as np
import pytest

import ragsr

DATA = pathlib.Path(__file__).resolve().parents[2] / "tests" / "data"


def scene():
    return ragsr.load_scene(str(DATA / "two_regions.json"))


def test_prepare_filters_and_pads():
    cands = [
        ragsr.RegionAnnotation(ragsr.BoundingBox(0, 0, 0.5, 0.5, c), f"r{i}", 2)
        for i, c in enumerate([0.9, 0.35, 0.55])
    ]
    p = ragsr.prepare(cands)
    assert p.active_count == 2
    assert [s.box.confidence for s in p.slots[:2]] == [0.9, 0.55]
    assert len(p.slots) == 5
    assert all(s.is_padding() for s in p.slots[2:])


def test_masks_layout():
    m = ragsr.build_masks(scene(), 8)
    t = sum(length for _, length in m["spans"])
    assert t == 13
    assert m["joint"].shape == (t + 64, t + 64)
    assert np.array_equal(m["t2i"], m["i2t"].T)
    assert np.array_equal(m["joint"][:t, t:], m["t2i"])
    assert m["joint"].diagonal().all()


def test_masked_attention_matches_numpy():
    rng = np.random.default_rng(0)
    q, k, v = (rng.standard_normal((2, 5, 3)) for _ in range(3))
    mask = rng.random((5, 5)) < 0.5
    np.fill_diagonal(mask, True)
    out, w = ragsr.attention_forward(q, k, v, mask)
    s = np.einsum("hid,hjd->hij", q, k) / math.sqrt(3)
    s = np.where(mask, s, -np.inf)
    ref_w = np.exp(s - s.max(axis=-1, keepdims=True))
    ref_w /= ref_w.sum(axis=-1, keepdims=True)
    np.testing.assert_allclose(w, ref_w, rtol=0, atol=1e-12)
    np.testing.assert_allclose(out, ref_w @ v, rtol=0, atol=1e-12)
    assert (w[:, ~mask] == 0).all()


def test_backward_shapes():
    rng = np.random.default_rng(1)
    q, k, v, up = (rng.standard_normal((1, 4, 2)) for _ in range(4))
    dq, dk, dv = ragsr.attention_backward(q, k, v, up)
    assert dq.shape == dk.shape == dv.shape == (1, 4, 2)


def test_gate_and_degenerate_scene():
    trace, latent = ragsr.run_loop(scene(), injection_steps=5, level=8)
    assert [s["regional_applied"] for s in trace] == [i < 5 for i in range(50)]
    assert latent.shape == (64, 8)
    empty = ragsr.load_scene(str(DATA / "below_threshold.json"))
    _, a = ragsr.run_loop(empty, injection_steps=50, level=8)
    _, b = ragsr.run_loop(empty, injection_steps=0, level=8)
    assert np.array_equal(a, b)


def test_degrade_and_psnr():
    img = np.random.default_rng(2).random((64, 64, 3))
    lr = ragsr.degrade(img, seed=3)
    assert lr.shape == (16, 16, 3)
    assert np.array_equal(lr, ragsr.degrade(img, seed=3))
    a = np.full((8, 8), 100 / 255)
    assert ragsr.psnr(a, a + 16 / 255) == pytest.approx(20 * math.log10(255 / 16), abs=1e-6)


def test_errors_are_translated():
    with pytest.raises(ragsr.RagsrError, match="scene_io"):
        ragsr.load_scene(str(DATA / "missing.json"))
    with pytest.raises(ragsr.RagsrError):
        ragsr.run_loop(scene(), injection_steps=51)


def test_verify_prep_suite():
    report = ragsr.verify("prep", scenes=100)
    assert report["passed"]
