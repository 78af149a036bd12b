from hypothesis import given, strategies as st
from pytest import fixture, raises

from services.gadget_service import GadgetPurpose, GadgetService, GadgetSpec, ParameterError
from services.tree_service import TreeService


@fixture(scope="module")
def table():
    return GadgetService.embedding_table()


def test_pk_2_2_has_six_vertices():
    assert len(GadgetService.build_pk(GadgetSpec(2, 2))) == 6


@given(n=st.integers(1, 12), m=st.integers(1, 4))
def test_size(n, m):
    assert len(GadgetService.build_pk(GadgetSpec(n, m))) == GadgetSpec(n, m).size == n + m + 2


@given(a=st.tuples(st.integers(1, 6), st.integers(1, 4)), b=st.tuples(st.integers(1, 6), st.integers(1, 4)))
def test_closed_form_matches_engine(a, b):
    ga, gb = GadgetSpec(*a), GadgetSpec(*b)
    engine = TreeService.find_embedding(GadgetService.build_pk(ga), GadgetService.build_pk(gb), rooted=True)
    assert (engine is not None) == GadgetService.pk_embeds(ga, gb)


def test_table_agrees_everywhere(table):
    assert len(table) == 48 * 48
    assert table["agree"].all()


def test_equal_path_rule_misses_fan_one_paths(table):
    wrong = table[table["engine"] != table["equal_path_rule"]]
    assert len(wrong) == 264
    assert (wrong["guest_fan"] == 1).all()
    assert (wrong["guest_pathlen"] < wrong["host_pathlen"]).all()


def test_named_gadgets():
    assert GadgetSpec.for_label(3).pathlen == 12
    assert (GadgetSpec.for_type(0).pathlen, GadgetSpec.for_type(0).fan) == (2, 2)
    assert (GadgetSpec.for_type(1).pathlen, GadgetSpec.for_type(1).fan) == (2, 3)
    assert (GadgetSpec.poset_odd().pathlen, GadgetSpec.poset_odd().fan) == (4, 2)
    assert len(GadgetService.named_gadgets(2)) == 6


def test_type_gadgets_are_ordered():
    assert GadgetService.pk_embeds(GadgetSpec.for_type(0), GadgetSpec.for_type(1))
    assert not GadgetService.pk_embeds(GadgetSpec.for_type(1), GadgetSpec.for_type(0))


def test_label_gadgets_are_pairwise_incomparable():
    specs = [GadgetSpec.for_label(label) for label in range(4)]
    for a in specs:
        for b in specs:
            assert GadgetService.pk_embeds(a, b) == (a == b)


def test_bad_parameters():
    with raises(ParameterError):
        GadgetSpec(0, 2)
    with raises(ParameterError):
        GadgetSpec(2, 0)
    with raises(ParameterError):
        GadgetSpec(4, 2, GadgetPurpose.LABEL, label=3)
    with raises(ParameterError):
        GadgetSpec(2, 4, GadgetPurpose.TYPE1)
