"""Certainty links between contexts, kept as equivalence classes of outcomes."""
from csmkit.acceptance import spin_registry
from csmkit.interferometer import BeamSplitter, Network, extravalence_links_from_network
from csmkit.modality import Context, ExclusivityError, ExtravalenceRegistry, born_class_prob, transition_between

reg = spin_registry()
print(f"{len(reg)} outcomes in {len(reg.contexts)} contexts form {reg.n_classes} classes")
for root, members in reg.classes().items():
    if len(members) > 1:
        print("  linked:", [tuple(m) for m in members])

T = transition_between(reg, reg.contexts["coupled"], reg.contexts["product_x"], born_class_prob(reg))
print("coupled -> product_x column sums:", T.p.sum(axis=0))

# a swap on lines 0,1 is certain; a balanced splitter on 2,3 is not
net = Network(4, (BeamSplitter(0, 1, 1.5707963267948966), BeamSplitter(2, 3, 0.7853981633974483)))
links = extravalence_links_from_network(net)
print("\nnetwork links:", links)

r = ExtravalenceRegistry(4)
r.register_context(Context("input", tuple("abcd"))).register_context(Context("output", tuple("abcd")))
for m1, m2 in links:
    r.link_certain(m1, m2)
try:
    r.link_certain(("input", 0), ("output", 0))
except ExclusivityError as exc:
    print("refused:", exc)
print(r.to_json())
