import numpy as np
import pytest

from element import FixedEncoder, InvalidArgument, identity_encoder, new_encoder


def test_same_seed_identical_weights():
    a = new_encoder(7, 4, 2)
    b = new_encoder(7, 4, 2)
    assert np.array_equal(a.weights, b.weights)
    obs = np.array([0.3, -1.2, 0.5, 2.0])
    assert np.array_equal(a.encode(obs), b.encode(obs))


def test_different_seed_different_weights():
    a = new_encoder(7, 4, 2)
    b = new_encoder(8, 4, 2)
    assert not np.array_equal(a.weights, b.weights)


@pytest.mark.parametrize("in_dim,out_dim", [(0, 2), (4, 0), (0, 0)])
def test_zero_dimension_rejected(in_dim, out_dim):
    with pytest.raises(InvalidArgument):
        new_encoder(1, in_dim, out_dim)


def test_zero_observation_maps_to_zero():
    enc = new_encoder(3, 5, 3)
    assert np.array_equal(enc.encode(np.zeros(5)), np.zeros(3))


def test_encode_is_pure():
    enc = new_encoder(11, 3, 4)
    obs = np.array([1.0, -2.0, 0.25])
    assert np.array_equal(enc.encode(obs), enc.encode(obs))


def test_wrong_length_rejected():
    enc = new_encoder(1, 3, 2)
    with pytest.raises(InvalidArgument):
        enc.encode(np.zeros(4))


def test_outputs_strictly_bounded():
    enc = new_encoder(5, 6, 4)
    rng = np.random.default_rng(0)
    for _ in range(50):
        out = enc.encode(rng.uniform(-10, 10, size=6))
        assert np.all(out > -1.0) and np.all(out < 1.0)


def test_weights_drawn_from_expected_range():
    enc = new_encoder(42, 16, 8)
    bound = 1.0 / np.sqrt(16)
    assert np.all(np.abs(enc.weights) <= bound)
    assert np.array_equal(enc.bias, np.zeros(8))


def test_weights_immutable():
    enc = new_encoder(1, 2, 2)
    with pytest.raises(ValueError):
        enc.weights[0, 0] = 5.0


def test_identity_mode_passthrough():
    enc = identity_encoder(2, scale=0.5)
    obs = np.array([4.0, -6.0])
    assert np.array_equal(enc.encode(obs), np.array([2.0, -3.0]))
    # no squash: values outside (-1, 1) survive
    assert enc.encode(np.array([10.0, 0.0]))[0] == 5.0


def test_identity_requires_square():
    with pytest.raises(InvalidArgument):
        FixedEncoder(0, 3, 2, identity=True)


def test_batch_matches_single():
    # BLAS may reorder sums for different shapes: agreement to ~1 ulp, and
    # identity mode exactly
    enc = new_encoder(9, 4, 3)
    rng = np.random.default_rng(1)
    obs = rng.normal(size=(10, 4))
    batch = enc.encode_batch(obs)
    for i in range(10):
        assert np.allclose(batch[i], enc.encode(obs[i]), atol=1e-15, rtol=1e-12)
    ident = identity_encoder(4, scale=2.0)
    assert np.array_equal(ident.encode_batch(obs), 2.0 * obs)
