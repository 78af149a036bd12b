from pytest import mark, raises

from services.rtree_service import LABEL_TAG, RTreeService, UndefinedAtBaseError, child_labels, path_parity


@mark.parametrize("radius", range(1, 8))
def test_vertex_count_matches_built_ball(radius):
    assert len(RTreeService.build_rball(radius).tree) == RTreeService.vertex_count(radius)


def test_vertex_count_with_maxlabel():
    assert len(RTreeService.build_rball(6, maxlabel=2).tree) == RTreeService.vertex_count(6, maxlabel=2)


def test_child_labels():
    assert child_labels(0, None, True) == [1, 1]
    assert child_labels(0, 1, False) == [1]
    assert child_labels(2, 1, False) == [2, 3]
    assert child_labels(2, 2, False) == [1, 3]


def test_ball_shape(rball6):
    tree = rball6.tree
    assert tree.records[rball6.centre].label == 0
    for v in tree.core_vertices():
        rec = tree.records[v]
        if rec.frontier:
            continue
        assert tree.degree(v) == (2 if rec.label == 0 else 3)


def test_gadgets_add_one_label_gadget_per_vertex():
    plain = RTreeService.build_rball(3)
    decorated = RTreeService.build_rball(3, with_gadgets=True)
    extra = sum(2 * rec.label + 9 for rec in plain.tree.records)
    assert len(decorated.tree) == len(plain.tree) + extra
    assert all(rec.address[-1].startswith(LABEL_TAG) for rec in decorated.tree.records if not rec.is_core)


def test_labels_reconstruct_from_degrees():
    report = RTreeService.lab_check(RTreeService.build_rball(8))
    assert report.cases > 0
    assert report.passed, report.violations


def test_colour_lemma():
    report = RTreeService.verify_colour_sweep(RTreeService.build_rball(4))
    assert report.passed, report.violations[:5]


def test_height_preservation(rball6):
    assert RTreeService.verify_hthpreserv(rball6).passed


def test_spin_lemmas(rball6):
    report = RTreeService.verify_spin_lemmas(rball6)
    assert report.cases > 0
    assert report.passed, report.violations[:5]


def test_unisign():
    report = RTreeService.verify_unisign(RTreeService.build_rball(8), max_peak=3)
    assert report.cases > 0
    assert report.passed


def test_homogeneity(rball6):
    assert RTreeService.verify_homogeneity(rball6).passed


def test_sign_is_undefined_at_its_base(rball6):
    ctx = RTreeService.sign_context(rball6, rball6.centre)
    with raises(UndefinedAtBaseError):
        RTreeService.sign(rball6, ctx, rball6.centre)
    assert sorted(ctx.orientation.values()) == [-1, 1]


def test_path_parity_counts_pairs_and_zeros(rball6):
    tree = rball6.tree
    c0 = tree.index(("c0",))
    assert path_parity(tree, [rball6.centre, c0]) == -1
    c0c0 = tree.index(("c0", "c0"))
    assert tree.records[c0c0].label == 1
    assert path_parity(tree, [rball6.centre, c0, c0c0]) == 1


def test_radius_must_be_positive():
    with raises(ValueError):
        RTreeService.build_rball(0)
