import numpy as np
import pytest

from ncae import presets
from ncae.manifold import retract
from ncae.network import Variant, init_model

VARIANTS = [v.value for v in Variant]


def random_model(spec, seed, spread=0.2, nmd_std=0.5):
    """A generic parameter draw: off-orthonormal pairs, nonzero biases and modulation."""
    rng = np.random.default_rng(seed)
    p = init_model(spec, rng)
    new = {}
    for l, pair in enumerate(p.pairs):
        moved = retract(pair, spread * rng.normal(size=pair.phi.shape), spread * rng.normal(size=pair.psi.shape))
        new[f"pairs.{l}.phi"], new[f"pairs.{l}.psi"] = moved.phi, moved.psi
    for name, arr in p.tensors().items():
        if name.startswith("biases."):
            new[name] = spread * rng.normal(size=arr.shape)
        elif name.startswith("nmd."):
            new[name] = nmd_std * rng.normal(size=arr.shape)
    return p.with_tensors(new)


def lorenz_batch(n, seed):
    rng = np.random.default_rng(seed)
    x = 1.1 + 1.5 * rng.normal(size=(n, 36))
    xd = 4.0 * rng.normal(size=(n, 36))
    c = rng.uniform(3.133, 3.193, (n, 1))
    return x, xd, c


def fd_gradient(params, name, f, h=1e-4):
    """Fourth-order central differences, one coordinate at a time."""
    arr = params.tensors()[name]
    out = np.zeros_like(arr)

    def at(idx, t):
        moved = arr.copy()
        moved[idx] += t
        return f(params.with_tensors({name: moved}))

    for idx in np.ndindex(arr.shape):
        out[idx] = (8 * (at(idx, h) - at(idx, -h)) - (at(idx, 2 * h) - at(idx, -2 * h))) / (12 * h)
    return out


@pytest.fixture(params=VARIANTS)
def variant(request):
    return request.param


@pytest.fixture
def lorenz_spec(variant):
    return presets.architecture("lorenz96", variant)


@pytest.fixture
def pendulum_spec(variant):
    return presets.architecture("pendulum", variant)


# criterion number -> (passed, detail); filled by test_acceptance, printed after the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
