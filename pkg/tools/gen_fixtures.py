"""Regenerate the committed test fixtures.

Run from the repository root:

    python3 tools/gen_fixtures.py

Writes tests/fixtures/la_witness.json (first grid disagreement between the
balanced-optimal and temperature-tau logit-adjusted labels, per tau) and
tests/fixtures/figure1_oracle.json (one-time boundary-angle oracle run on
the skewed two-dimensional sample at m = 50,000, 20 restarts, norm 100).
"""

import json
from pathlib import Path

from imbloss.datagen import figure1_distribution
from imbloss.losses import LossSpec
from imbloss.theory import (bayes_balanced_label, bayes_la_label,
                            find_la_disagreement)
from imbloss.trainer import (BoundedLinearFamily, best_in_class_search,
                             boundary_angle_degrees)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def la_witness():
    out = {}
    for tau in (0.5, 2.0):
        point = find_la_disagreement(tau)
        out[str(tau)] = {
            "cond": point.cond.tolist(),
            "priors": point.priors.tolist(),
            "la_label": bayes_la_label(point, tau),
            "balanced_label": bayes_balanced_label(point),
        }
    return out


def figure1_oracle(data_seed=2, m=50_000, norm_bound=100.0, restarts=20):
    data = figure1_distribution(m, seed=data_seed)
    family = BoundedLinearFamily(n=2, d=2, norm_bound=norm_bound)
    out = {"data_seed": data_seed, "m": m, "norm_bound": norm_bound,
           "restarts": restarts, "search_seed": 0}
    for name, objective in [
        ("balanced", "balanced"),
        ("gca", LossSpec("GCA", q=0.0, margins=(1.0, 1.0))),
        ("la", LossSpec("LA", tau=1.0)),
    ]:
        model, value = best_in_class_search(family, data, objective,
                                            restarts=restarts, seed=0)
        out[name] = {
            "angle_degrees": boundary_angle_degrees(model),
            "objective_value": value,
            "weights": model.weights.tolist(),
        }
    return out


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with open(FIXTURES / "la_witness.json", "w") as fh:
        json.dump(la_witness(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(FIXTURES / "figure1_oracle.json", "w") as fh:
        json.dump(figure1_oracle(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
