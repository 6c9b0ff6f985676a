#!/usr/bin/env python3
"""Before/after comparison of the marginal-zeroing transforms.

Shows, for each slot-constant zoo model: the raw conditional expectations, the
same table after a balanced time sign and after layer doubling (both zero),
and the source-conditioned sign as the negative control (nonzero again), with
the pair correlation untouched in every case.
"""
import math

from eprsim import (
    balanced_sign_function,
    condition_sign_on_source,
    conditional_table,
    correlate,
    layer_double,
    s1,
    s2,
    time_symmetrize,
)
from eprsim.util import fmt12
from eprsim.zoo import m_constant_zoo_models

A = s1(0.0)
B = s2(math.pi / 4)


def describe(tag, model):
    conds = conditional_table(model, A)
    e_ab = correlate(model, A, B).e_ab
    cond_str = ", ".join(f"{lam}:{fmt12(v)}" for lam, v in conds.items())
    print(f"  {tag:18s} e_ab = {fmt12(e_ab):>4s}   E[A|state] = {{{cond_str}}}")


def main():
    for model in m_constant_zoo_models():
        print(f"model: {model.name}")
        describe("base", model)
        describe("time sign", time_symmetrize(model, balanced_sign_function(model.grid, 1)))
        describe("layer doubled", layer_double(model))
        describe("state sign", condition_sign_on_source(model, 1))
        print()


if __name__ == "__main__":
    main()
