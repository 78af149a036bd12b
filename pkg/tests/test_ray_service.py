from hypothesis import given, strategies as st
from pytest import raises

from services.gadget_service import ParameterError
from services.ray_service import RayService, RayVariant, default_halfwidth, ray_address, tp
from services.tree_service import Kind


def test_tp_zero_is_a_single_step():
    assert [tp(0, j) for j in range(-3, 4)] == [0, 0, 0, 0, 1, 1, 1]


def test_tp_s_has_a_centre_at_zero():
    assert [tp(2, j) for j in range(-2, 5)] == [0, 0, 1, 0, 0, 1, 1]


@given(s=st.integers(1, 6))
def test_families_have_their_centre_at_zero(s):
    window = RayService.build_ray(s, -default_halfwidth(s), default_halfwidth(s), gadgets=False)
    assert RayService.find_centre(window.assignment) == 0


def test_tp_zero_has_no_centre():
    window = RayService.build_ray(0, -6, 6, gadgets=False)
    assert RayService.find_centre(window.assignment) is None


def test_window_size_with_gadgets():
    window = RayService.build_ray(1, -3, 3)
    ones = sum(window.assignment.values())
    assert len(window.tree) == 7 + 5 * (7 - ones) + 6 * ones
    assert window.vertex(2) == window.tree.index(ray_address(2))
    assert window.tree.records[window.vertex(-3)].frontier


def test_poset_variant_types_even_indices():
    window = RayService.build_ray(1, -4, 4, RayVariant.POSET)
    assert set(window.assignment) == {-4, -2, 0, 2, 4}
    assert window.assignment[2] == tp(1, 1)
    odd = window.tree.records[window.vertex(1)]
    assert odd.kind is Kind.RAY and odd.raytype is None


def test_dominated_pairs_embed_centred():
    assert RayService.centred_shift_embeds(2, 1, 8)
    assert not RayService.centred_shift_embeds(1, 2, 8)
    assert not RayService.centred_shift_embeds(0, 1, 8)


def test_siblings_have_nonzero_shift_witnesses():
    assert [d for d in RayService.shift_witnesses(0, 1, 8) if d > 0] == [1, 2, 3, 4]
    assert RayService.shift_witnesses(1, 0, 8)


def test_no_reflection_between_families():
    for s in range(3):
        for s2 in range(3):
            assert not RayService.reflection_embeds(s, s2, 8)


def test_gadget_level_shift_agrees_with_bits():
    for d in (-2, 0, 1, 3, 4):
        bits = RayService.shift_valid(0, 1, d, -2, 2) or RayService.reflection_valid(0, 1, d, -2, 2)
        assert RayService.gadget_shift_embeds(0, 1, d, guest_halfwidth=2, host_halfwidth=6) == bits


def test_bad_windows():
    with raises(ParameterError):
        RayService.build_ray(0, 1, 3)
    with raises(ParameterError):
        tp(-1, 0)
    with raises(ParameterError):
        RayService.centred_shift_embeds(3, 3, 4)
    with raises(ParameterError):
        RayService.gadget_shift_embeds(0, 0, 5, guest_halfwidth=4, host_halfwidth=8)
