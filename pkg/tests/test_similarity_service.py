from pytest import raises

from services.similarity_service import Fingerprint, SimilarityError, SimilarityService
from services.tree_service import TruncationError


def test_fingerprint_of_a_ray_step(spine0):
    z = spine0.centre
    r1 = spine0.central(1)
    fp = SimilarityService.fingerprint(spine0, z, r1)
    assert fp.symbols == (("ray", 1), ("label", 0))
    assert fp.to_ascii() == "< 0"
    assert SimilarityService.fingerprint(spine0, r1, z).to_ascii() == "> 0"


def test_fingerprint_starts_with_the_branch_sign(spine0):
    z = spine0.centre
    fp = SimilarityService.fingerprint(spine0, z, spine0.tree.index(("c0",)))
    assert fp.to_ascii() == "+1 1"
    assert Fingerprint.from_ascii("+1 1") == fp
    assert SimilarityService.fingerprint(spine0, z, z).to_ascii() == "0"


def test_ascii_parsing():
    fp = Fingerprint.from_ascii("< > -1 2 0")
    assert fp.symbols == (("ray", 1), ("ray", -1), ("sign", -1), ("label", 2), ("label", 0))
    assert len(fp) == 5


def test_walk_follows_a_fingerprint(spine0):
    z = spine0.centre
    far = spine0.tree.index(("r+", "c1", "c0"))
    fp = SimilarityService.fingerprint(spine0, z, far)
    assert SimilarityService.walk(spine0, z, fp) == far
    shifted = SimilarityService.walk(spine0, spine0.central(-1), fp)
    assert spine0.tree.records[shifted].address == ("c1", "c0")


def test_walk_fails_on_a_missing_step(spine0):
    with raises(SimilarityError):
        SimilarityService.walk(spine0, spine0.centre, Fingerprint.from_ascii("+1 7"))


def test_fingerprint_crossing_the_frontier(spine0):
    assert spine0.tree.records[spine0.central(5)].frontier
    with raises(TruncationError):
        SimilarityService.fingerprint(spine0, spine0.central(5), spine0.central(3))


def test_similarity_at_the_identity(spine0):
    z = spine0.centre
    phi = SimilarityService.build_similarity(spine0, z, z)
    assert phi(z) == z
    assert all(w == y for w, y in phi.mapping.items())
    assert len(phi.mapping) == len(spine0.core_vertices())


def test_similarity_shift_matches_translation(spine0):
    phi = SimilarityService.build_similarity(spine0, spine0.centre, spine0.central(1))
    explicit = SimilarityService.translation(spine0, 1)
    assert explicit[spine0.centre] == spine0.central(1)
    assert all(explicit[w] == y for w, y in phi.mapping.items() if w in explicit)
    assert SimilarityService.check_similarity_properties(spine0, phi).passed


def test_similarity_needs_label_zero_anchors(spine0):
    with raises(SimilarityError):
        SimilarityService.build_similarity(spine0, spine0.tree.index(("c0",)), spine0.centre)


def test_outside_the_determined_part(spine0):
    phi = SimilarityService.build_similarity(spine0, spine0.centre, spine0.central(4))
    assert spine0.central(2) not in phi.mapping
    with raises(TruncationError):
        phi(spine0.central(2))
    assert phi.frontier


def test_uniqueness_on_the_central_ray(spine0):
    report = SimilarityService.verify_uniqueness(spine0, spine0.centre, spine0.central(1), radius=3)
    assert report.cases > 0
    assert report.passed, report.violations[:5]


def test_composition_of_shifts(spine0):
    first = SimilarityService.build_similarity(spine0, spine0.centre, spine0.central(1))
    second = SimilarityService.build_similarity(spine0, spine0.central(1), spine0.central(2))
    report = SimilarityService.check_composition(spine0, first, second)
    assert report.cases > 0
    assert report.passed


def test_mirror_map_is_caught(spine1):
    tree = spine1.tree
    mirror = SimilarityService.mirror_map(tree, tree.index(("r+",)))
    assert mirror[tree.index(("r+", "c0"))] == tree.index(("r+", "c1"))
    report = SimilarityService.embedding_induces_similarity(spine1, tree, mirror)
    assert not report.passed


def test_identity_induces_a_similarity(spine1):
    tree = spine1.tree
    identity = SimilarityService.extend_to_gadgets(tree, {v: v for v in spine1.core_vertices()})
    assert SimilarityService.embedding_induces_similarity(spine1, tree, identity).passed
