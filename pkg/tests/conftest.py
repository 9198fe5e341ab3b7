import random

import pytest

from tanglekit import KripkeModel
from tanglekit import formulas as fm


@pytest.fixture
def cycle_model():
    """Two irreflexive worlds seeing each other; the running example."""
    return KripkeModel(
        ["0", "1"], [(0, 1), (1, 0)],
        {"e": [0], "o": [1], "p": [1], "i": [0, 1]})


def random_formula(rng: random.Random, props, depth: int,
                   bound=(), allow_binders=True) -> fm.MuFormula:
    """Seeded random closed NNF formula over the given atoms."""
    if depth == 0:
        choices = ["top", "bot", "prop", "negprop"] + (["var"] if bound else [])
        kind = rng.choice(choices)
        if kind == "top":
            return fm.top()
        if kind == "bot":
            return fm.bot()
        if kind == "var":
            return fm.var(rng.choice(list(bound)))
        name = rng.choice(props)
        return fm.prop(name) if kind == "prop" else fm.neg_prop(name)
    kinds = ["and", "or", "dia", "box", "leaf"]
    if allow_binders:
        kinds += ["mu", "nu"]
    kind = rng.choice(kinds)
    if kind == "leaf":
        return random_formula(rng, props, 0, bound)
    if kind in ("and", "or"):
        left = random_formula(rng, props, depth - 1, bound, allow_binders)
        right = random_formula(rng, props, depth - 1, bound, allow_binders)
        return fm.conj(left, right) if kind == "and" else fm.disj(left, right)
    if kind in ("dia", "box"):
        arg = random_formula(rng, props, depth - 1, bound, allow_binders)
        return fm.diamond(arg) if kind == "dia" else fm.box(arg)
    v = f"v{len(bound)}"
    body = random_formula(rng, props, depth - 1, bound + (v,), allow_binders)
    return fm.mu(v, body) if kind == "mu" else fm.nu(v, body)
