import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from evoqml.encoding import (
    BinaryParityEncoding,
    LossKind,
    MultiHotEncoding,
    dataset_loss,
    default_partition,
    loss_and_grad,
    multiclass_estimates,
    parity_estimate,
    predict_label,
)
from evoqml.statevector import Gate, GateKind, PauliZObservable, StateVector, run_circuit

IRIS = ((1, 2, 3, 4, 5), (6, 7, 8, 9, 10), (11, 12, 13, 14, 15))


def distributions(dim):
    return arrays(float, dim, elements=st.floats(0, 1)).filter(lambda a: a.sum() > 1e-3).map(lambda a: a / a.sum())


def test_parity_examples():
    enc = BinaryParityEncoding(PauliZObservable.from_string("ZZ"))
    assert parity_estimate(StateVector.zero(2), enc) == 1.0
    uniform = run_circuit(2, [Gate(GateKind.H, (0,)), Gate(GateKind.H, (1,))])
    assert parity_estimate(uniform, enc) == pytest.approx(0.0, abs=1e-15)
    single = BinaryParityEncoding(PauliZObservable((True,)))
    assert parity_estimate(run_circuit(1, [Gate(GateKind.RX, (0,), 0.8)]), single) == pytest.approx(np.cos(0.8))
    with pytest.raises(ValueError):
        parity_estimate(StateVector.zero(3), enc)


def test_multiclass_examples():
    enc = MultiHotEncoding(4, IRIS)
    omega = np.zeros(16)
    omega[0] = 1
    assert np.array_equal(multiclass_estimates(omega, enc), [0, 0, 0])
    assert multiclass_estimates(np.full(16, 1 / 16), enc) == pytest.approx([5 / 16] * 3)
    omega = np.zeros(16)
    omega[7] = 1
    assert np.array_equal(multiclass_estimates(omega, enc), [0, 1, 0])
    assert enc.excluded == (0,)


def test_multiclass_rejects_unnormalized():
    with pytest.raises(ValueError):
        multiclass_estimates(np.full(16, 0.1), MultiHotEncoding(4, IRIS))


def test_bucket_validation():
    with pytest.raises(ValueError, match="out of range"):
        MultiHotEncoding(2, ((1,), (4,)))
    with pytest.raises(ValueError, match="more than one"):
        MultiHotEncoding(2, ((1, 2), (2, 3)))
    with pytest.raises(ValueError):
        MultiHotEncoding(2, ((1, 2, 3),))


def test_default_partition():
    assert default_partition(4, 3).buckets == IRIS
    assert default_partition(2, 3).buckets == ((1,), (2,), (3,))
    p = default_partition(3, 2)
    assert p.buckets == ((1, 2, 3), (4, 5, 6)) and p.excluded == (0, 7)
    with pytest.raises(ValueError):
        default_partition(2, 4)


@given(a=distributions(16), b=distributions(16), w=st.floats(0, 1))
def test_multiclass_linear(a, b, w):
    enc = MultiHotEncoding(4, IRIS)
    mix = w * a + (1 - w) * b
    expected = w * multiclass_estimates(a, enc) + (1 - w) * multiclass_estimates(b, enc)
    assert np.allclose(multiclass_estimates(mix, enc), expected, atol=1e-12)


@given(omega=distributions(16), perm=st.permutations([0, 1, 2]))
def test_multiclass_permutation_equivariant(omega, perm):
    base = multiclass_estimates(omega, MultiHotEncoding(4, IRIS))
    relabeled = multiclass_estimates(omega, MultiHotEncoding(4, tuple(IRIS[p] for p in perm)))
    assert np.allclose(relabeled, base[list(perm)])


@given(omega=distributions(16))
def test_estimates_bounded(omega):
    y = multiclass_estimates(omega, MultiHotEncoding(4, IRIS))
    assert np.all((y >= 0) & (y <= 1 + 1e-12)) and y.sum() <= 1 + 1e-9


def test_predict_label_examples():
    multi = MultiHotEncoding(4, IRIS)
    binary = BinaryParityEncoding(PauliZObservable.from_string("Z"))
    assert predict_label([0.1, 0.5, 0.2], multi) == 1
    assert predict_label(-0.3, binary) == -1
    assert predict_label(0.0, binary) == 1
    assert predict_label([0.3, 0.3, 0.1], multi) == 0


@given(est=arrays(float, 3, elements=st.floats(0, 1)), c=st.floats(1e-3, 1e3))
def test_prediction_invariant_to_scaling(est, c):
    multi = MultiHotEncoding(4, IRIS)
    assert predict_label(est * c, multi) == predict_label(est, multi)


def test_loss_examples():
    y = np.array([1, -1, 1])
    assert dataset_loss(y.astype(float), y, LossKind.MSE) == 0.0
    assert dataset_loss(np.zeros(3), y, LossKind.MSE) == 1.0
    onehot = np.eye(3)[[0, 2, 1]]
    assert dataset_loss(onehot, [0, 2, 1], LossKind.CROSS_ENTROPY) <= 1e-9
    assert dataset_loss(onehot, onehot, LossKind.CROSS_ENTROPY) <= 1e-9
    assert dataset_loss([0.99, -0.99], [1, -1], LossKind.LOG_LOSS) == pytest.approx(-np.log(0.995 + 1e-10))


def test_loss_errors():
    with pytest.raises(ValueError, match="empty"):
        dataset_loss(np.zeros(0), np.zeros(0), LossKind.MSE)
    with pytest.raises(ValueError):
        dataset_loss([0.1, 0.2], [1, 0], LossKind.MSE)
    with pytest.raises(ValueError):
        dataset_loss(np.full((2, 3), 0.2), [0, 3], LossKind.CROSS_ENTROPY)


@given(p=arrays(float, 5, elements=st.floats(-1, 1)), y=arrays(int, 5, elements=st.sampled_from([-1, 1])))
def test_binary_losses_non_negative(p, y):
    assert dataset_loss(p, y, LossKind.MSE) >= 0
    assert dataset_loss(p, y, LossKind.LOG_LOSS) >= 0


@given(est=arrays(float, (4, 3), elements=st.floats(0, 1 / 3)), y=arrays(int, 4, elements=st.integers(0, 2)))
def test_cross_entropy_non_negative(est, y):
    assert dataset_loss(est, y, LossKind.CROSS_ENTROPY) >= 0


@pytest.mark.parametrize("kind", list(LossKind))
def test_loss_gradient_matches_finite_differences(kind):
    rng = np.random.default_rng(2)
    if kind is LossKind.CROSS_ENTROPY:
        out = rng.dirichlet(np.ones(4), size=6)[:, :3]
        y = rng.integers(0, 3, 6)
    else:
        out = rng.uniform(-0.9, 0.9, 6)
        y = rng.choice([-1, 1], 6)
    _, grad = loss_and_grad(out, y, kind)
    h = 1e-6
    fd = np.zeros_like(out)
    for idx in np.ndindex(out.shape):
        up, dn = out.copy(), out.copy()
        up[idx] += h
        dn[idx] -= h
        fd[idx] = (dataset_loss(up, y, kind) - dataset_loss(dn, y, kind)) / (2 * h)
    assert np.allclose(grad, fd, rtol=1e-5, atol=1e-8)
