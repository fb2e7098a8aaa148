import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import central_difference_check, dense_fuse
from hadeskit.exceptions import ConfigError, NumericalError, ShapeError
from hadeskit.model import (
    ArchConfig,
    CrossModalFusion,
    DetectionHead,
    HadesNet,
    ablation_config,
    arch_preset,
    classify,
    fuse,
    predictions_from_logits,
)

D64 = torch.float64


def seeded(*shape, seed):
    return torch.randn(*shape, dtype=D64, generator=torch.Generator().manual_seed(seed))


def selector_W_a(D):
    """W_a that passes the attended half straight through."""
    return torch.cat([torch.eye(D, dtype=D64), torch.zeros(D, D, dtype=D64)])


# -- fuse -------------------------------------------------------------------------------

def test_fuse_matches_dense_oracle():
    Q, K, V = seeded(1, 2, 2, seed=1), seeded(1, 2, 2, seed=2), seeded(1, 2, 2, seed=3)
    W_s, W_a = seeded(2, 2, seed=4), seeded(4, 2, seed=5)
    got = fuse(Q, K, V, W_s, W_a)[0]
    oracle = dense_fuse(Q[0].tolist(), K[0].tolist(), V[0].tolist(), W_s.tolist(), W_a.tolist())
    assert np.max(np.abs(got.numpy() - np.array(oracle))) < 1e-10


def test_zero_score_map_attends_to_column_mean():
    Q, K, V = seeded(1, 3, 4, seed=1), seeded(1, 5, 4, seed=2), seeded(1, 5, 4, seed=3)
    out = fuse(Q, K, V, torch.zeros(4, 4, dtype=D64), selector_W_a(4))
    torch.testing.assert_close(out[0], torch.tanh(V[0].mean(0)).expand(3, 4), atol=1e-12, rtol=0)


def test_single_key_attends_to_its_value():
    Q, K, V = seeded(1, 3, 4, seed=1), seeded(1, 1, 4, seed=2), seeded(1, 1, 4, seed=3)
    out = fuse(Q, K, V, seeded(4, 4, seed=9), selector_W_a(4))
    torch.testing.assert_close(out[0], torch.tanh(V[0, 0]).expand(3, 4), atol=1e-12, rtol=0)


def test_attention_rows_sum_to_one_and_masked_keys_get_nothing():
    Q, K, V = seeded(2, 3, 4, seed=1), seeded(2, 5, 4, seed=2), seeded(2, 5, 4, seed=3)
    mask = torch.tensor([[1, 1, 1, 0, 0], [1, 0, 0, 0, 0]], dtype=torch.bool)
    _, attn = fuse(Q, K, V, seeded(4, 4, seed=4), seeded(8, 4, seed=5), key_mask=mask, return_attention=True)
    torch.testing.assert_close(attn.sum(-1), torch.ones(2, 3, dtype=D64), atol=1e-6, rtol=0)
    assert torch.all(attn[0, :, 3:] == 0) and torch.all(attn[1, :, 1:] == 0)


def test_all_keys_masked_attends_to_zero():
    Q, K, V = seeded(1, 2, 3, seed=1), seeded(1, 4, 3, seed=2), seeded(1, 4, 3, seed=3)
    out = fuse(Q, K, V, seeded(3, 3, seed=4), selector_W_a(3), key_mask=torch.zeros(1, 4, dtype=torch.bool))
    assert torch.all(out == 0)


def test_fuse_shape_errors():
    Q = torch.zeros(1, 2, 3)
    with pytest.raises(ShapeError):
        fuse(Q, torch.zeros(1, 4, 3), torch.zeros(1, 5, 3), torch.zeros(3, 3), torch.zeros(6, 3))
    with pytest.raises(ShapeError):
        fuse(Q, torch.zeros(1, 4, 3), torch.zeros(1, 4, 3), torch.zeros(2, 2), torch.zeros(6, 3))


def test_fuse_gradient_check():
    tensors = [seeded(1, 2, 2, seed=s).requires_grad_() for s in (1, 2, 3)]
    tensors += [seeded(2, 2, seed=4).requires_grad_(), seeded(4, 2, seed=5).requires_grad_()]
    w = seeded(1, 2, 2, seed=6)
    err = central_difference_check(lambda: (fuse(*tensors) * w).sum(), tensors)
    assert err < 1e-3


# -- global representation -------------------------------------------------------------

def reps(T=4, L=5, D=3, n_real=3, seed=0):
    R_l = seeded(1, L, D, seed=seed)
    mask = torch.zeros(1, L, dtype=torch.bool)
    mask[0, :n_real] = True
    R_l = R_l * mask[..., None]
    return R_l, seeded(1, T, D, seed=seed + 1), mask


def test_global_representation_shape_and_range():
    torch.manual_seed(0)
    fusion = CrossModalFusion(3).double()
    R_l, R_m, mask = reps()
    R_g = fusion(R_l, R_m, mask)
    assert R_g.shape == (1, 4 + 5, 3)
    assert torch.all(R_g.abs() < 1)
    assert torch.all(R_g[0, 4 + 3 :] == 0)  # padded log queries


def tiny_arch():
    return ArchConfig(embed_dim=3, d_model=4, n_heads=2, d_ff=4, n_layers=1, out_dim=3,
                      intra_channels=(2,), inter_channels=(3,), head_hidden=(4,), L_max=5)


def tiny_net(variant, seed=0):
    torch.manual_seed(seed)
    return HadesNet(tiny_arch(), ablation_config(variant), 3, [[0, 1], [2]]).double().eval()


def tiny_inputs(seed=0):
    logs = seeded(1, 5, 3, seed=seed)
    mask = torch.tensor([[1, 1, 1, 0, 0]], dtype=torch.bool)
    return logs * mask[..., None], mask, seeded(1, 4, 3, seed=seed + 1)


def test_concat_ablation_equals_plain_concatenation():
    logs, mask, metrics = tiny_inputs()
    r = tiny_net("woA").representations(logs, mask, metrics)
    assert torch.equal(r["R_g"], torch.cat([r["R_m"], r["R_l"]], dim=1))


def test_self_attention_ablation_shape():
    logs, mask, metrics = tiny_inputs()
    r = tiny_net("woC").representations(logs, mask, metrics)
    assert r["R_g"].shape == (1, 4 + 5, 3)


def test_modal_sensitivity():
    net = tiny_net("full")
    logs, mask, metrics = tiny_inputs()
    T = metrics.shape[1]
    base = net.representations(logs, mask, metrics)["R_g"]
    for i in range(3):
        bumped = logs.clone()
        bumped[0, i] += 0.5
        out = net.representations(bumped, mask, metrics)["R_g"]
        assert not torch.equal(out[:, :T], base[:, :T])  # metric queries see every real log row
    for t in range(T):
        bumped = metrics.clone()
        bumped[0, t] += 0.5
        out = net.representations(logs, mask, bumped)["R_g"]
        assert not torch.equal(out[:, T:], base[:, T:])  # log queries see every metric row


def test_single_modality_wirings_need_only_their_input():
    logs, mask, metrics = tiny_inputs()
    assert tiny_net("woM")(logs=logs, log_mask=mask).shape == (1, 2)
    assert tiny_net("woL")(metrics=metrics).shape == (1, 2)


def test_wiring_table():
    assert ablation_config("woF").or_combine
    assert not ablation_config("woH").hierarchical and not ablation_config("woS").semantic
    with pytest.raises(ConfigError):
        ablation_config("woX")
    with pytest.raises(ConfigError):
        HadesNet(tiny_arch(), ablation_config("woF"), 3, [[0]])


def test_presets():
    impl, arch = arch_preset("paper-impl"), arch_preset("paper-arch")
    assert (arch.n_layers, impl.n_layers) == (2, 4)
    assert impl.d_model == 1024 and impl.out_dim == 256
    assert impl.head_hidden == (512, 512, 512)  # three hidden layers plus the output layer
    assert impl.inter_channels == (256, 256)  # three inter-aspect layers counting the output
    assert arch_preset("desk", L_max=8).L_max == 8
    with pytest.raises(ConfigError):
        arch_preset("huge")


# -- classification head ----------------------------------------------------------------

def test_equal_logits_tie_goes_to_normal():
    (p,) = predictions_from_logits(np.array([[0.3, 0.3]]))
    assert p.label == 0 and p.confidence == 0.5


def test_hand_set_head():
    head = DetectionHead(2, hidden=(2,)).double()
    with torch.no_grad():
        head.net[0].weight.copy_(torch.tensor([[1.0, -1.0], [0.5, 0.5]]))
        head.net[0].bias.copy_(torch.tensor([0.0, -1.0]))
        head.net[2].weight.copy_(torch.tensor([[1.0, 0.0], [-1.0, 2.0]]))
        head.net[2].bias.copy_(torch.tensor([0.1, 0.0], dtype=D64))
    x = [2.0, 4.0]
    h = [max(0.0, x[0] - x[1]), max(0.0, 0.5 * x[0] + 0.5 * x[1] - 1.0)]  # [0, 2]
    z = [h[0] + 0.1, -h[0] + 2 * h[1]]  # [0.1, 4]
    p1 = math.exp(z[1]) / (math.exp(z[0]) + math.exp(z[1]))
    (pred,) = classify(head, torch.tensor([[x]], dtype=D64))
    assert pred.label == 1
    assert abs(pred.probabilities[1] - p1) < 1e-12 and abs(pred.confidence - p1) < 1e-12


def test_head_pools_over_rows():
    torch.manual_seed(0)
    head = DetectionHead(3, hidden=(4,)).double()
    R = seeded(1, 6, 3, seed=2)
    torch.testing.assert_close(head(R), head(R.mean(1, keepdim=True)), atol=1e-14, rtol=0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=2, max_size=2), st.floats(-100, 100))
def test_softmax_shift_invariance(logits, c):
    (a,) = predictions_from_logits(np.array([logits]))
    (b,) = predictions_from_logits(np.array([logits]) + c)
    if abs(logits[1] - logits[0]) > 1e-9:  # shifting may round away a sub-ulp margin
        assert a.label == b.label
    assert abs(a.probabilities[0] - b.probabilities[0]) < 1e-9
    assert abs(sum(a.probabilities) - 1) < 1e-9 and 0.5 <= a.confidence <= 1


def test_classify_rejects_non_finite():
    head = DetectionHead(2, hidden=(2,))
    with pytest.raises(NumericalError):
        classify(head, torch.tensor([[[float("nan"), 0.0]]]))
