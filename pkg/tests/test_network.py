import numpy as np
import pytest

from ncae import presets
from ncae.activations import STATIC_ALPHA, sigma_minus, sigma_plus
from ncae.errors import DimensionError
from ncae.manifold import BiorthogonalPair, biorthogonality_defect
from ncae.network import (
    ArchitectureSpec, ModelParams, Variant, decode, decode_jvp, encode, encode_jvp,
    encode_with_velocity, init_model, project, project_jvp, static_equivalent,
)

from conftest import random_model


def inputs(spec, n, seed):
    """States (plus context where the variant takes one) for ``spec``."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, spec.state_dim))
    c = rng.uniform(0.3, 0.7, (n, max(spec.context_dim, 1)))
    return x, (None if spec.variant is Variant.CAE else c)


def identity_model(n, alpha=STATIC_ALPHA):
    spec = ArchitectureSpec(Variant.CAE, state_dim=n, latent_dim=n, layer_widths=(n,), static_alpha=alpha)
    return ModelParams(spec, [BiorthogonalPair(np.eye(n), np.eye(n))], [np.zeros(n)])


def test_table_shapes():
    nc = presets.architecture("pendulum", "NcAE")
    assert nc.widths == (4, 8, 12, 14, 16)
    p = init_model(nc, np.random.default_rng(0))
    assert encode(p, np.ones(16), np.full(4, 0.5)).shape == (4,)
    lz = presets.architecture("lorenz96", "NcAE")
    assert lz.widths == (2, 18, 36) and lz.mlp_topology == (1, 2, 2, 2)
    p = init_model(lz, np.random.default_rng(0))
    assert encode(p, np.ones(36), [3.15]).shape == (2,)
    assert presets.architecture("lorenz96", "Context-cAE").input_dim == 37
    assert presets.architecture("pendulum", "Context-cAE").input_dim == 20


def test_spec_validation():
    with pytest.raises(DimensionError):
        ArchitectureSpec(Variant.CAE, state_dim=36, latent_dim=2, layer_widths=(18, 12, 36))
    with pytest.raises(DimensionError):
        ArchitectureSpec(Variant.CAE, state_dim=36, latent_dim=2, layer_widths=(18, 35))
    with pytest.raises(DimensionError):
        ArchitectureSpec(Variant.CONTEXT_CAE, state_dim=36, latent_dim=2, layer_widths=(18, 36), context_dim=1)
    with pytest.raises(DimensionError):
        ArchitectureSpec(Variant.NCAE, state_dim=36, latent_dim=2, layer_widths=(18, 36), context_dim=1,
                         mlp_topology=(4, 2))
    spec = presets.architecture("pendulum", "NcAE")
    assert ArchitectureSpec.from_dict(spec.to_dict()) == spec


def test_equal_width_layers_allowed():
    spec = ArchitectureSpec(Variant.CAE, state_dim=6, latent_dim=3, layer_widths=(3, 6, 6))
    p = random_model(spec, 0)
    x = np.random.default_rng(0).normal(size=(4, 6))
    np.testing.assert_allclose(project(p, project(p, x)), project(p, x), atol=1e-9)


def test_single_identity_layer():
    p = identity_model(3)
    x = np.array([0.4, -1.3, 2.0])
    np.testing.assert_allclose(encode(p, x), sigma_minus(x, STATIC_ALPHA), rtol=1e-15)
    np.testing.assert_allclose(decode(p, x), sigma_plus(x, STATIC_ALPHA), rtol=1e-15)
    np.testing.assert_allclose(project(p, x), x, atol=1e-14)


def test_latent_identity(lorenz_spec):
    p = random_model(lorenz_spec, 1)
    rng = np.random.default_rng(2)
    z = rng.normal(size=(32, 2))
    c = rng.uniform(3.1, 3.2, (32, 1))
    if lorenz_spec.variant is Variant.NCAE:
        back = encode(p, decode(p, z, c), c)
    else:
        back = encode(p, decode(p, z))
    assert np.max(np.abs(back - z)) < 1e-9


def test_ncae_latent_identity_for_every_context():
    p = random_model(presets.architecture("pendulum", "NcAE"), 4, nmd_std=1.0)
    rng = np.random.default_rng(5)
    z = rng.normal(size=4)
    for _ in range(20):
        c = rng.uniform(0.3, 0.7, 4)
        assert np.max(np.abs(encode(p, decode(p, z, c), c) - z)) < 1e-9


def test_idempotent(pendulum_spec):
    p = random_model(pendulum_spec, 3)
    x, c = inputs(pendulum_spec, 20, 4)
    if pendulum_spec.variant is Variant.CONTEXT_CAE:
        # P acts on the concatenated input [x; c]
        x, c = np.concatenate([x, c], axis=1), None
    px = project(p, x, c)
    assert np.max(np.abs(project(p, px, c) - px)) < 1e-8


def test_manifold_points_are_fixed(lorenz_spec):
    p = random_model(lorenz_spec, 6)
    rng = np.random.default_rng(7)
    z = rng.normal(size=(10, 2))
    if lorenz_spec.variant is Variant.NCAE:
        c = rng.uniform(3.1, 3.2, (10, 1))
        x = decode(p, z, c)
        assert np.max(np.abs(project(p, x, c) - x)) < 1e-9
    else:
        x = decode(p, z)
        assert np.max(np.abs(project(p, x) - x)) < 1e-9


def test_square_identity_is_identity_map():
    spec = ArchitectureSpec(Variant.CAE, state_dim=4, latent_dim=4, layer_widths=(4, 4))
    p = ModelParams(spec, [BiorthogonalPair(np.eye(4), np.eye(4))] * 2, [np.zeros(4)] * 2)
    x = np.random.default_rng(0).normal(size=(5, 4))
    np.testing.assert_allclose(project(p, x), x, atol=1e-13)


def test_context_ignored_by_cae():
    p = random_model(presets.architecture("lorenz96", "cAE"), 0)
    x = np.random.default_rng(1).normal(size=(5, 36))
    np.testing.assert_array_equal(project(p, x, np.full((5, 1), 3.1)), project(p, x, np.full((5, 1), 9.0)))
    np.testing.assert_array_equal(project(p, x), project(p, x, np.full((5, 1), 3.1)))


def test_context_required():
    for v in ("NcAE", "Context-cAE"):
        p = init_model(presets.architecture("lorenz96", v), np.random.default_rng(0))
        with pytest.raises(DimensionError):
            encode(p, np.ones(36))
    p = init_model(presets.architecture("lorenz96", "NcAE"), np.random.default_rng(0))
    with pytest.raises(DimensionError):
        encode(p, np.ones(35), [3.1])
    with pytest.raises(DimensionError):
        encode(p, np.ones(36), [3.1, 2.0])


def test_context_cae_concatenates():
    p = random_model(presets.architecture("lorenz96", "Context-cAE"), 2)
    x = np.random.default_rng(3).normal(size=(3, 36))
    c = np.full((3, 1), 3.15)
    np.testing.assert_array_equal(encode(p, x, c), encode(p, np.concatenate([x, c], axis=1)))
    assert project(p, x, c).shape == (3, 37)


def _fd(f, x, v, h=1e-6):
    return (f(x + h * v) - f(x - h * v)) / (2 * h)


def test_project_jvp_fd(pendulum_spec):
    p = random_model(pendulum_spec, 8)
    x, c = inputs(pendulum_spec, 6, 9)
    v = np.random.default_rng(10).normal(size=x.shape)
    jv = project_jvp(p, x, v, c)
    fd = _fd(lambda y: project(p, y, c), x, v)
    np.testing.assert_allclose(jv, fd, rtol=1e-5, atol=1e-8)


def test_encode_jvp_fd(lorenz_spec):
    p = random_model(lorenz_spec, 11)
    x, c = inputs(lorenz_spec, 6, 12)
    v = np.random.default_rng(13).normal(size=x.shape)
    jv = encode_jvp(p, x, v, c)
    np.testing.assert_allclose(jv, _fd(lambda y: encode(p, y, c), x, v), rtol=1e-5, atol=1e-8)
    np.testing.assert_array_equal(encode_jvp(p, x, np.zeros_like(x), c), 0.0)


def test_jvp_linear():
    spec = presets.architecture("pendulum", "NcAE")
    p = random_model(spec, 14)
    x, c = inputs(spec, 4, 15)
    rng = np.random.default_rng(16)
    v1, v2 = rng.normal(size=x.shape), rng.normal(size=x.shape)
    lhs = project_jvp(p, x, 0.3 * v1 - 2.0 * v2, c)
    rhs = 0.3 * project_jvp(p, x, v1, c) - 2.0 * project_jvp(p, x, v2, c)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_chain_rule_consistency():
    spec = presets.architecture("pendulum", "NcAE")
    p = random_model(spec, 17)
    x, c = inputs(spec, 5, 18)
    v = np.random.default_rng(19).normal(size=x.shape)
    z, zd = encode_with_velocity(p, x, v, c)
    np.testing.assert_allclose(decode_jvp(p, z, zd, c), project_jvp(p, x, v, c), atol=1e-9)


def test_tangent_vectors_are_preserved():
    spec = presets.architecture("lorenz96", "NcAE")
    p = random_model(spec, 20)
    rng = np.random.default_rng(21)
    z, w = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
    c = rng.uniform(3.1, 3.2, (5, 1))
    x = decode(p, z, c)
    v = decode_jvp(p, z, w, c)
    assert np.max(np.abs(project_jvp(p, x, v, c) - v)) < 1e-6


def test_static_modulation_matches_cae():
    """NcAE whose modulation is pinned to (pi/8, b_l) behaves like the cAE with the same pairs."""
    spec = ArchitectureSpec(Variant.NCAE, state_dim=16, latent_dim=4, layer_widths=(8, 12, 14, 16),
                            context_dim=4, mlp_topology=(4, 4, 4), alpha_min=1e-5, alpha_max=0.39)
    p = random_model(spec, 22)
    nm = p.neuromod
    # zero signal: output-layer weights and bias vanish, bias maps do nothing
    t = {f"nmd.mlp.{len(nm.mlp_weights) - 1}.weight": np.zeros_like(nm.mlp_weights[-1]),
         f"nmd.mlp.{len(nm.mlp_weights) - 1}.bias": np.zeros_like(nm.mlp_biases[-1])}
    p = p.with_tensors(t)
    mid = (spec.alpha_min + spec.alpha_max) / 2
    x, c = inputs(spec, 7, 23)
    np.testing.assert_allclose(project(p, x, c), project(static_equivalent(p, mid), x), rtol=0, atol=1e-13)


def test_params_validation():
    spec = presets.architecture("lorenz96", "NcAE")
    p = init_model(spec, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        ModelParams(spec, p.pairs, p.base_biases, None)
    with pytest.raises(DimensionError):
        p.with_tensors({"biases.0": np.zeros(17)})
    with pytest.raises(KeyError):
        p.with_tensors({"bogus": np.zeros(1)})
    for pair in p.pairs:
        assert biorthogonality_defect(pair) < 1e-12


def test_init_is_seeded(lorenz_spec):
    a = init_model(lorenz_spec, np.random.default_rng(5)).tensors()
    b = init_model(lorenz_spec, np.random.default_rng(5)).tensors()
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])
