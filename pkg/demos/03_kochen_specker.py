"""No noncontextual truth assignment for the 18-ray structure in dimension 4."""
import json

import numpy as np

from csmkit import ks
from csmkit.data import data_path

s = ks.parse_structure(data_path("cabello_shape.txt").read_text())
print(f"{s.n_contexts} contexts, {s.n_classes} classes, each class in {set(s.multiplicities())} contexts")

# an odd number of contexts each needing one true class, yet every class
# counted twice, is a parity contradiction
print("parity certificate:", ks.parity_check(s))
res = ks.search_assignment(s, use_parity=False)
print("backtracking:", res.status, res.stats)

vecs = json.loads(data_path("cabello_vectors.json").read_text())["vectors"]
unit = [np.array(v) / np.linalg.norm(v) for v in vecs]
print("realized by unit vectors:", bool(ks.realize_with_vectors(s, unit)))

# drop a context and the rest is colourable
smaller = ks.IncidenceStructure(s.contexts[1:], s.n_classes)
res = ks.search_assignment(smaller)
print("without context 0:", res.status, "true classes", res.to_dict()["true_classes"])
