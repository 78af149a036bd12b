import json

from pytest import fixture, mark, raises

from services.construct_service import (
    ConfigurationError,
    ConstructService,
    Seed,
    SiblingSpec,
    address_index,
)
from services.gadget_service import ParameterError
from services.ray_service import tp
from services.similarity_service import SimilarityService
from services.tree_service import EmbeddingMap, FrontierPolicy, Kind, TreeService


@fixture(scope="module")
def t01(registry):
    return ConstructService.build_t(0, 1, 6, registry)


@mark.parametrize("k, expected", [(1, (0, 0)), (2, (1, 0)), (3, (0, 1)), (4, (2, 0)), (6, (1, 1)), (12, (2, 1))])
def test_stage_decode(k, expected):
    i, j = ConstructService.stage_decode(k)
    assert (i, j) == expected
    assert 2 ** i * (2 * j + 1) == k


def test_stage_decode_rejects_zero():
    with raises(ParameterError):
        ConstructService.stage_decode(0)


def test_address_index():
    assert address_index(()) == 0
    assert address_index(("r+", "r+")) == 2
    assert address_index(("r-",)) == -1
    with raises(ValueError):
        address_index(("r+", "c0"))


def test_seed_overrides_and_offset():
    seed = Seed(0, ((3, 0),), offset=2)
    assert seed.bit(1) == 0
    assert seed.bit(0) == 1
    assert seed.bit(-2) == 0
    assert Seed(2).window(-1, 1) == {-1: 0, 0: 1, 1: 0}


def test_first_sibling_key():
    bits = Seed(0, ((3, 0),)).window(-8, 8)
    assert ConstructService.sibling_key(bits) == "110"
    assert ConstructService.sibling_key(Seed(0).window(-8, 8)) == ""
    assert ConstructService.sibling_key({j: tp(2, j) for j in range(-8, 9)}) == "100"


def test_candidate_order():
    assert ConstructService.candidate_order(2) == [0, 1, -1, 2, -2]


def test_frozen_registry(registry):
    assert set(registry) == {(0, 0), (1, 0)}
    spec = registry[(0, 0)]
    assert spec.centre == ("r+", "r+")
    assert spec.overrides == ((("r+", "r+", "r+"), 0),)
    assert spec.tag == "S_{0,0}"
    assert spec.seed() == Seed(0, ((3, 0),), 2)
    assert SiblingSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_enumeration_reproduces_the_first_sibling(registry):
    found = ConstructService.enumerate_siblings(0, 1, {}, sib_count=3)
    assert found == [registry[(0, 0)]]


def test_save_and_diff_registry(registry, tmp_path):
    path = str(tmp_path / "registry.json")
    ok, _ = ConstructService.save_registry(registry, path)
    assert ok
    assert ConstructService.load_registry(path) == registry
    assert ConstructService.diff_registry(registry, registry) == []
    smaller = {(0, 0): registry[(0, 0)]}
    assert len(ConstructService.diff_registry(registry, smaller)) == 1


def test_missing_registry_entry():
    with raises(ConfigurationError):
        ConstructService.build_t(0, 1, 6, {})


def test_stage_zero_central_typing(registry):
    tb = ConstructService.build_t(1, 0, 4, registry, with_gadgets=False)
    for index, v in tb.spine.rays[0].items():
        assert tb.typing[v] == tp(1, index)
        assert tb.core.records[v].raytype == tp(1, index)
    assert tb.amalgam_log == []


def test_stage_one_truncation(t01, registry):
    sb = t01.spine
    for index, v in sb.rays[0].items():
        assert t01.typing[v] == tp(0, index)
    assert t01.amalgam_log
    assert {tag for _, _, _, tag in t01.amalgam_log} <= {"T(0)", "S_{0,0}"}
    for _, height, spin, tag in t01.amalgam_log:
        assert height == 1
        assert tag == ("T(0)" if spin == -1 else "S_{0,0}")
    assert t01.targets[0] == (sb.centre, 0)


def test_every_typed_vertex_is_a_ray_vertex(t01):
    for v in t01.typing:
        assert t01.core.records[v].kind is Kind.RAY


def test_type_gadgets_are_stripped_back_to_the_spine(t01):
    assert ConstructService.verify_spine_recovery(t01).passed


def test_families_and_sibling_are_pairwise_nonisomorphic(registry):
    report = ConstructService.verify_nonisomorphism(0, 6, 3, registry)
    assert report.details["stage0.siblings"] == 1
    assert report.passed, report.violations


def test_sibling_truncation_has_a_centre(registry):
    spec = registry[(0, 0)]
    tb = ConstructService.build_t(0, 0, 4, registry, seed=spec.seed(), with_gadgets=False)
    bits = {index: tb.typing[v] for index, v in tb.spine.rays[0].items()}
    assert bits[0] == 1 and bits[1] == 0


@fixture(scope="module")
def witnesses(t01):
    return SimilarityService.witness_embeddings(t01)


def identity(tb):
    return EmbeddingMap({v: v for v in range(len(tb.tree))})


def test_witnesses_start_with_the_identity(t01, witnesses):
    assert witnesses[0][0] == "identity"
    for name, phi in witnesses:
        assert TreeService.check_embedding(t01.tree, t01.tree, phi, policy=FrontierPolicy.OPEN) == [], name


def test_witnesses_leave_only_type_leaves_uncovered(t01, witnesses):
    report = ConstructService.verify_embfinite(t01, witnesses)
    assert report.cases == len(witnesses)
    assert report.details["identity"] == 0
    assert report.passed, report.violations


def test_missing_gadget_image_is_reported(t01):
    leaf = next(v for v, rec in enumerate(t01.tree.records)
                if rec.kind is Kind.GADGET and rec.anchor == t01.centre)
    pairs = {v: v for v in range(len(t01.tree)) if v != leaf}
    report = ConstructService.verify_embfinite(t01, [("partial", EmbeddingMap(pairs))])
    assert not report.passed
    assert report.violations[0]["witness"] == "partial"


def test_witnesses_keep_amalgamated_vertices(t01, witnesses):
    for name, phi in witnesses:
        report = ConstructService.verify_embedkcopies(t01, phi)
        assert report.passed, (name, report.violations[:3])
    assert ConstructService.verify_embedkcopies(t01, identity(t01)).cases > 0


def test_ray_vertex_sent_off_the_ray_is_reported(t01):
    sb = t01.spine
    mapping = EmbeddingMap({sb.central(1): t01.tree.index(("c0",))})
    report = ConstructService.verify_embedkcopies(t01, mapping)
    assert [v["check"] for v in report.violations] == ["amalgamated"]


def test_margin_skips_vertices_near_the_frontier(t01):
    report = ConstructService.verify_embedkcopies(t01, identity(t01), margin=t01.spine.radius + 1)
    assert report.cases == 0
