from pytest import raises

from services.rtree_service import UndefinedAtBaseError
from services.spine_service import SpineService
from services.tree_service import Kind


def test_stage_zero_activates_only_the_central_ray(spine0):
    assert list(spine0.rays) == [0]
    assert sorted(spine0.rays[0]) == list(range(-5, 6))
    assert spine0.rounds == []
    tree = spine0.tree
    assert all(tree.records[v].kind is not Kind.RAY or tree.records[v].ray == 0 for v in spine0.core_vertices())


def test_central_ray_addresses(spine0):
    tree = spine0.tree
    assert spine0.central(0) == spine0.centre == 0
    assert tree.records[spine0.central(3)].address == ("r+", "r+", "r+")
    assert tree.records[spine0.central(-2)].address == ("r-", "r-")
    assert spine0.is_copy_root(spine0.central(2))


def test_stage_one_amalgamates_height_one_vertices(spine1):
    assert len(spine1.rays) > 1
    assert spine1.rounds and spine1.rounds[0] >= 1
    report = SpineService.verify_structure(spine1)
    assert report.cases > 0
    assert report.passed, report.violations[:5]


def test_structure_at_stage_zero(spine0):
    assert SpineService.verify_structure(spine0).passed


def test_ids_follow_shortlex_addresses(spine1):
    addresses = [rec.address for rec in spine1.tree.records]
    assert addresses == sorted(addresses, key=lambda a: (len(a), a))


def test_global_functions_at_a_copy_entry(spine0):
    z = spine0.centre
    r1 = spine0.central(1)
    assert SpineService.entry_vertex(spine0, z, r1) == r1
    assert SpineService.gcol(spine0, z, r1) == 0
    with raises(UndefinedAtBaseError):
        SpineService.gspin(spine0, z, r1)
    with raises(UndefinedAtBaseError):
        SpineService.gsign(spine0, z, r1)


def test_global_height_along_a_path(spine0):
    tree = spine0.tree
    z = spine0.centre
    far = tree.index(("r+", "c0", "c1"))
    assert SpineService.ghth(spine0, z, far) == max(tree.records[x].label for x in tree.path(z, far))
    assert SpineService.entry_vertex(spine0, z, far) == spine0.central(1)


def test_global_lemmas_on_sampled_pairs(spine1):
    pairs = SpineService.sample_pairs(spine1, 6, seed=0)
    assert len(pairs) == 6
    assert pairs == SpineService.sample_pairs(spine1, 6, seed=0)
    report = SpineService.verify_global_lemmas(spine1, pairs)
    assert report.passed, report.violations[:5]


def test_degree_census_untyped():
    sb = SpineService.build_spine(1, 5, with_gadgets=True)
    report = SpineService.degree_census(sb.tree, typed=False)
    assert report.cases > 0
    assert report.passed, report.violations[:5]


def test_negative_stage():
    with raises(ValueError):
        SpineService.build_spine(-1, 4)
