from pytest import fixture, raises

from services.gadget_service import GadgetSpec, ParameterError
from services.poset_service import PosetService, gadget_covers
from services.ray_service import RayService, RayVariant
from services.rtree_service import RTreeService
from services.tree_service import DecorationMatch, TreeService


@fixture(scope="module")
def fence():
    return PosetService.order_gadget(GadgetSpec(2, 2))


def test_gadget_fence(fence):
    tree = fence.base
    root, u1, u2, hub = (tree.index(a) for a in [(), ("g1",), ("g2",), ("gh",)])
    leaves = [tree.index(("gl0",)), tree.index(("gl1",))]
    assert fence.covers == frozenset({(root, u1), (u2, u1), (u2, hub), (hub, leaves[0]), (hub, leaves[1])})
    assert fence.is_partial_order()
    assert fence.less(u2, leaves[1])
    assert not fence.less(root, hub) and not fence.less(hub, root)


def test_gadget_fence_needs_even_path():
    with raises(ParameterError):
        PosetService.order_gadget(GadgetSpec(3, 2))


def test_fence_cover_count():
    for n in (2, 4, 6):
        overlay = PosetService.order_gadget(GadgetSpec(n, 3))
        assert len(overlay.covers) == n + 3 + 1 == len(overlay.base.edges())


def test_covers_must_be_edges(fence):
    with raises(ValueError):
        type(fence)(fence.base, frozenset({(0, 3)}))


def test_flip_cover_breaks_the_order_embedding(fence):
    flipped = PosetService.flip_cover(fence, min(fence.covers))
    assert flipped.is_partial_order()
    assert PosetService.order_embeds(fence, fence, rooted=True) is not None
    assert PosetService.order_embeds(fence, flipped, rooted=True) is None
    with raises(ValueError):
        PosetService.flip_cover(fence, (max(fence.covers)[1], max(fence.covers)[0]))


def test_hasse_automorphisms_of_a_gadget(fence):
    assert len(PosetService.hasse_automorphisms(fence)) == 1


def test_ray_fence_alternates():
    window = RayService.build_ray(1, -2, 2, RayVariant.POSET, gadgets=False)
    overlay = PosetService.order_ray(window)
    assert (window.vertex(0), window.vertex(1)) in overlay.covers
    assert (window.vertex(2), window.vertex(1)) in overlay.covers
    assert (window.vertex(-2), window.vertex(-1)) in overlay.covers
    assert overlay.is_partial_order()


def test_ray_fence_needs_the_poset_variant():
    with raises(ParameterError):
        PosetService.order_ray(RayService.build_ray(1, -2, 2))


def test_odd_index_gadgets_are_fenced():
    window = RayService.build_ray(0, -1, 1, RayVariant.POSET)
    covers = gadget_covers(window.tree)
    assert len(covers) == 7 + 5 + 7
    assert PosetService.order_ray(window).is_partial_order()


def test_r_ball_orientation_covers_every_edge():
    ball = RTreeService.build_rball(3)
    overlay = PosetService.order_r(ball, RTreeService.build_rball(6))
    assert len(overlay.covers) == len(ball.tree.edges())
    assert overlay.is_partial_order()
    assert overlay.to_dot().count("->") == len(overlay.covers)


def test_small_gadget_monoids_agree():
    report = PosetService.gadget_monoids(pathlens=(2, 4), fans=(2, 3))
    assert report.cases == 16
    assert report.passed, report.violations
    assert report.exceptions == []


def test_fan_one_gadgets_embed_into_longer_paths_only_as_graphs():
    report = PosetService.gadget_monoids(pathlens=(2, 4), fans=(1, 2))
    assert report.cases == 16
    assert report.passed, report.violations
    assert sorted(e["pair"] for e in report.exceptions) == ["PK(2,1)->PK(4,1)", "PK(2,1)->PK(4,2)"]
    assert all(e["check"] == "fan-one" and e["reversed"] == ["gh", "gl0"] for e in report.exceptions)


def test_fan_one_path_step_reverses_the_hub_cover():
    guest = PosetService.order_gadget(GadgetSpec(2, 1))
    host = PosetService.order_gadget(GadgetSpec(4, 2))
    graph = TreeService.find_embedding(guest.base, host.base, rooted=True)
    assert graph is not None
    assert PosetService.order_embeds(guest, host, rooted=True) is None
    flipped = PosetService.reversed_covers(guest, host, graph.pairs)
    assert [[guest.base.records[v].address for v in pair] for pair in flipped] == [[("gh",), ("gl0",)]]


@fixture(scope="module")
def ordered_ball():
    ball = RTreeService.build_rball(3)
    return ball, PosetService.order_r(ball, RTreeService.build_rball(6))


def test_r_ball_swap_is_the_only_graph_only_map(ordered_ball):
    report = PosetService.compare_rball(*ordered_ball)
    assert report.passed, report.violations
    assert report.details == {"graph": 2, "order": 1}
    assert [e["check"] for e in report.exceptions] == ["sign-reversing"]


def test_sign_changes_of_the_root_swap(ordered_ball):
    ball, _ = ordered_ball
    tree = ball.tree
    identity = {v: v for v in range(len(tree))}
    kept, flipped = PosetService.sign_changes(ball, identity)
    assert kept > 0 and flipped == 0
    swap = next(e.pairs for e in TreeService.iter_embeddings(tree, tree, rooted=True) if e.pairs != identity)
    kept, flipped = PosetService.sign_changes(ball, swap)
    assert kept == 0 and flipped > 0


def test_every_flipped_r_ball_cover_is_flagged(ordered_ball):
    ball, overlay = ordered_ball
    for pair in sorted(overlay.covers):
        report = PosetService.compare_rball(ball, PosetService.flip_cover(overlay, pair))
        assert not report.passed, pair


def test_ray_window_monoids_agree():
    report = PosetService.ray_monoids(sib_count=2, halfwidth=4, guest_halfwidth=2)
    assert report.cases == 4
    assert report.passed, report.violations


def test_flipped_ray_cover_separates_the_monoids():
    guest = PosetService.order_ray(RayService.build_ray(0, -2, 2, RayVariant.POSET))
    window = RayService.build_ray(0, -4, 4, RayVariant.POSET)
    host = PosetService.order_ray(window)
    flipped = PosetService.flip_cover(host, (window.vertex(0), window.vertex(1)))
    graph = {e.key() for e in TreeService.iter_embeddings(guest.base, host.base, rooted=False,
                                                           match=DecorationMatch.KIND)}
    order = {e.key() for e in PosetService.iter_order_embeddings(guest, flipped, rooted=False)}
    assert graph
    assert graph != order


def test_negative_control_is_detected():
    report = PosetService.monoid_equality_check("negative-control")
    assert report.details["gadget"] and report.details["r-ball"]
    assert report.details["detected"]
    assert report.passed


def test_unknown_domain():
    with raises(ValueError):
        PosetService.monoid_equality_check("nowhere")
