import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csmkit import ks
from csmkit.acceptance import spin_registry
from csmkit.data import data_path
from csmkit.interferometer import BeamSplitter, Network, extravalence_links_from_network, permutation_network
from csmkit.linalg import ProjectorFrame, frame_from_unitary, haar_unitary
from csmkit.modality import (
    Context,
    ExclusivityError,
    ExtravalenceRegistry,
    Modality,
    RegistryError,
    born_class_prob,
    transition_between,
    validate_rule_I,
    validate_rule_II,
    validate_rule_II_statistical,
)
from csmkit.unistochastic import certify_unistochastic


def two_contexts(n=3, frames=(None, None)):
    reg = ExtravalenceRegistry(n)
    labels = tuple(str(k) for k in range(n))
    a, b = Context("a", labels, frames[0]), Context("b", labels, frames[1])
    reg.register_context(a).register_context(b)
    return reg, a, b


def cabello_registry():
    s = ks.parse_structure(data_path("cabello_shape.txt").read_text())
    reg = ExtravalenceRegistry(4)
    for k in range(s.n_contexts):
        reg.register_context(Context(k, tuple("abcd")))
    first = {}
    for k, ctx in enumerate(s.contexts):
        for idx, c in enumerate(ctx):
            if c in first:
                reg.link_certain(first[c], (k, idx))
            else:
                first[c] = (k, idx)
    return reg


class TestRegistry:
    def test_singletons(self):
        reg, _, _ = two_contexts()
        assert reg.n_classes == 6 and len(reg) == 6
        assert reg.class_of(("b", 2)) == Modality("b", 2)

    def test_link_and_canonical_id(self):
        reg, _, _ = two_contexts()
        reg.link_certain(("b", 2), ("a", 1))
        assert reg.class_of(("b", 2)) == Modality("a", 1)
        assert reg.members(("b", 2)) == [Modality("a", 1), Modality("b", 2)]
        assert reg.n_classes == 5

    def test_link_idempotent(self):
        reg, _, _ = two_contexts()
        reg.link_certain(("a", 0), ("b", 0)).link_certain(("b", 0), ("a", 0))
        assert reg.n_classes == 5

    def test_exclusivity(self):
        reg, _, _ = two_contexts()
        reg.link_certain(("a", 0), ("b", 0))
        with pytest.raises(ExclusivityError):
            reg.link_certain(("a", 1), ("b", 0))

    def test_exclusivity_through_transitivity(self):
        reg = ExtravalenceRegistry(2)
        for c in "xyz":
            reg.register_context(Context(c, ("0", "1")))
        reg.link_certain(("x", 0), ("y", 0)).link_certain(("y", 1), ("z", 0))
        with pytest.raises(ExclusivityError):
            reg.link_certain(("z", 0), ("x", 0))

    def test_unregistered(self):
        reg, _, _ = two_contexts()
        with pytest.raises(RegistryError):
            reg.link_certain(("a", 0), ("c", 0))

    def test_duplicate_context(self):
        reg, a, _ = two_contexts()
        with pytest.raises(RegistryError):
            reg.register_context(a)

    def test_outcome_count(self):
        reg = ExtravalenceRegistry(3)
        with pytest.raises(RegistryError):
            reg.register_context(Context("x", ("0", "1")))
        with pytest.raises(RegistryError):
            ExtravalenceRegistry(1)

    def test_context_validation(self):
        with pytest.raises(RegistryError):
            Context("x", ("a", "a"))
        with pytest.raises(RegistryError):
            Context("x", ("a", "b", "c"), ProjectorFrame(np.eye(2)))

    def test_json_round_trip(self):
        reg = cabello_registry()
        back = ExtravalenceRegistry.from_json(reg.to_json())
        assert back.to_dict() == reg.to_dict()
        assert back.classes() == reg.classes()


def test_cabello_registry_shape():
    reg = cabello_registry()
    assert len(reg.contexts) == 9 and len(reg) == 36
    assert reg.n_classes == 18
    assert all(len(ms) == 2 for ms in reg.classes().values())


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2), st.integers(0, 3), st.integers(0, 2)),
                max_size=25))
def test_union_find_matches_naive_partition(links):
    reg = ExtravalenceRegistry(3)
    for c in range(4):
        reg.register_context(Context(c, ("0", "1", "2")))
    blocks = [{(c, i)} for c in range(4) for i in range(3)]
    for c1, i1, c2, i2 in links:
        b1 = next(b for b in blocks if (c1, i1) in b)
        b2 = next(b for b in blocks if (c2, i2) in b)
        clash = b1 is not b2 and {m[0] for m in b1} & {m[0] for m in b2}
        if clash:
            with pytest.raises(ExclusivityError):
                reg.link_certain((c1, i1), (c2, i2))
            continue
        reg.link_certain((c1, i1), (c2, i2))
        if b1 is not b2:
            blocks.remove(b2)
            b1 |= b2
    got = {frozenset(tuple(m) for m in ms) for ms in reg.classes().values()}
    assert got == {frozenset(b) for b in blocks}
    for root, ms in reg.classes().items():
        assert root == min(ms, key=lambda m: (m.context, m.index))
        assert len({m.context for m in ms}) == len(ms)


class TestRules:
    def test_rule_I(self):
        assert validate_rule_I([[0.5, 0.5], [1.0, 0.0]])
        rep = validate_rule_I([[0.6, 0.5]])
        assert not rep and rep.violations[0]["kind"] == "sum"

    def test_rule_II_exact(self):
        reg, _, _ = two_contexts()
        reg.link_certain(("a", 0), ("b", 0))
        obs = [(("a", 0), ("b", 1), 0.3), (("b", 0), ("b", 1), 0.3)]
        assert validate_rule_II(reg, obs)
        obs[1] = (("b", 0), ("b", 1), 0.3 + 1e-6)
        rep = validate_rule_II(reg, obs)
        assert not rep and rep.violations[0]["spread"] == pytest.approx(1e-6)

    def test_rule_II_statistical(self, rng):
        reg, _, _ = two_contexts()
        reg.link_certain(("a", 0), ("b", 0))
        shots = 20_000
        obs = [(("a", 0), ("b", 1), int(rng.binomial(shots, 0.3)), shots),
               (("b", 0), ("b", 1), int(rng.binomial(shots, 0.3)), shots)]
        assert validate_rule_II_statistical(reg, obs)
        obs[1] = (("b", 0), ("b", 1), int(rng.binomial(shots, 0.4)), shots)
        assert not validate_rule_II_statistical(reg, obs)

    def test_spin_registry_rule_II(self):
        reg = spin_registry()
        # |1,1> = |++> and |1,-1> = |--> are the only certainty links
        assert reg.n_classes == 12 - 2
        assert reg.class_of(("product", 0)) == Modality("coupled", 0)
        assert reg.class_of(("product", 3)) == Modality("coupled", 1)


class TestTransitionBetween:
    def test_identity_links(self):
        reg, a, b = two_contexts()
        for i in range(3):
            reg.link_certain(("a", i), ("b", i))
        T = transition_between(reg, a, b, lambda x, y: float(x == y))
        np.testing.assert_array_equal(np.asarray(T), np.eye(3))

    def test_permutation_links(self):
        # 0/1 class probabilities that close into a stochastic matrix give a permutation
        perm = [2, 0, 1]
        reg, a, b = two_contexts()
        for i, j in enumerate(perm):
            reg.link_certain(("a", i), ("b", j))
        T = np.asarray(transition_between(reg, a, b, lambda x, y: float(x == y)))
        # column i is the basis vector e_perm[i]
        np.testing.assert_array_equal(T, np.eye(3)[:, perm])

    def test_born_frames_unistochastic(self, rng):
        reg, a, b = two_contexts(4, (frame_from_unitary(haar_unitary(4, rng)),
                                     frame_from_unitary(haar_unitary(4, rng))))
        T = transition_between(reg, a, b, born_class_prob(reg))
        assert certify_unistochastic(T).certified

    def test_non_stochastic_rejected(self):
        reg, a, b = two_contexts()
        with pytest.raises(ValueError):
            transition_between(reg, a, b, lambda x, y: 0.5)

    def test_unregistered(self):
        reg, a, _ = two_contexts()
        with pytest.raises(RegistryError):
            transition_between(reg, a, Context("z", ("0", "1", "2")), lambda x, y: 0.0)

    def test_class_without_frame(self):
        reg, a, b = two_contexts()
        with pytest.raises(RegistryError):
            transition_between(reg, a, b, born_class_prob(reg))


class TestNetworkLinks:
    def test_permutation_network(self):
        perm = [3, 1, 0, 2]
        net = permutation_network(perm)
        links = extravalence_links_from_network(net)
        assert len(links) == 4
        reg = ExtravalenceRegistry(4)
        reg.register_context(Context("input", tuple("abcd"))).register_context(Context("output", tuple("abcd")))
        for m1, m2 in links:
            reg.link_certain(m1, m2)
        assert reg.n_classes == 4

    def test_block_network(self):
        # swap on lines 0,1 is certain; a balanced splitter on 2,3 is not
        net = Network(4, (BeamSplitter(0, 1, np.pi / 2, 0.0), BeamSplitter(2, 3, np.pi / 4, 0.0)))
        links = extravalence_links_from_network(net)
        assert sorted(links) == [(("input", 0), ("output", 1)), (("input", 1), ("output", 0))]
