"""Shared fixtures and independent oracle implementations.

The oracles here deliberately avoid the vectorized routes used by the
package (im2col, GEMM batching) so that agreement between the two is
meaningful evidence of correctness.
"""

from __future__ import annotations

import numpy as np
import pytest

import glyphfuse as gf


@pytest.fixture(scope="session")
def font():
    return gf.load_bdf(gf.fixture_path("font.bdf"))


@pytest.fixture(scope="session")
def glyph_task():
    return {
        "train": gf.read_tsv(gf.fixture_path("glyph_train.tsv")),
        "dev": gf.read_tsv(gf.fixture_path("glyph_dev.tsv")),
        "test": gf.read_tsv(gf.fixture_path("glyph_test.tsv")),
        "vocab": gf.read_vocab(gf.fixture_path("glyph_vocab.txt")),
    }


# ---------------------------------------------------------------------------
# naive oracles


def naive_linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    out = np.zeros(weight.shape[0], dtype=np.float64)
    for o in range(weight.shape[0]):
        acc = float(bias[o])
        for d in range(weight.shape[1]):
            acc += float(weight[o, d]) * float(x[d])
        out[o] = acc
    return out


def naive_conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, padding: int) -> np.ndarray:
    c_out = kernel.shape[0]
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    h_out = xp.shape[1] - 2
    w_out = xp.shape[2] - 2
    out = np.zeros((c_out, h_out, w_out), dtype=np.float64)
    for co in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                window = xp[:, i : i + 3, j : j + 3]
                out[co, i, j] = float((window * kernel[co]).sum()) + float(bias[co])
    return out


def naive_maxpool2d(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    out = np.zeros((c, h // 2, w // 2), dtype=x.dtype)
    for ch in range(c):
        for i in range(h // 2):
            for j in range(w // 2):
                out[ch, i, j] = max(
                    x[ch, 2 * i, 2 * j],
                    x[ch, 2 * i, 2 * j + 1],
                    x[ch, 2 * i + 1, 2 * j],
                    x[ch, 2 * i + 1, 2 * j + 1],
                )
    return out


# ---------------------------------------------------------------------------
# finite differences


def fd_check(build_loss, leaves, step=1e-5, rel_tol=1e-4, max_coords=None, rng=None):
    """Compare analytic gradients of a scalar against central differences.

    build_loss() must rebuild the graph from `leaves` (float64 tensors with
    requires_grad) on every call. Checks every coordinate unless max_coords
    caps the sample per leaf. Returns the worst relative error seen.
    """
    for leaf in leaves:
        assert leaf.data.dtype == np.float64, "finite differences need float64 leaves"
        leaf.grad = None
    build_loss().backward()
    analytic = [leaf.grad.copy() for leaf in leaves]
    worst = 0.0
    for leaf, grad in zip(leaves, analytic):
        assert grad is not None and grad.shape == leaf.data.shape
        flat = leaf.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = (rng or np.random.default_rng(0)).choice(flat.size, size=max_coords, replace=False)
        for i in coords:
            original = flat[i]
            flat[i] = original + step
            f_plus = build_loss().item()
            flat[i] = original - step
            f_minus = build_loss().item()
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = float(grad.reshape(-1)[i])
            scale = max(1e-6, abs(a), abs(numeric))
            rel = abs(a - numeric) / scale
            worst = max(worst, rel)
            assert rel < rel_tol, f"rel err {rel:.3e} at coord {i}: analytic {a}, numeric {numeric}"
    return worst
