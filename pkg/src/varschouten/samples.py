"""Seeded random densities for randomized checks.

Monomials carry at most one function atom, drawn from ``exp(q_x)``,
``sin(q)`` and ``cos(q)``, so every exact density built from them stays
inside the antiderivative class that :func:`find_primitive` supports.
"""

from __future__ import annotations

import random

from .expr import Expression, Functional, JetVariable, MultiIndex

__all__ = ["jet", "random_monomial", "random_density", "random_even", "random_functional"]

ATOM_SOURCES = (("exp", 1), ("sin", 0), ("cos", 0))


def jet(odd: bool, order: int, label: str = "x", index: int = 1) -> JetVariable:
    return JetVariable(odd, index, MultiIndex(((label, order),)))


def random_monomial(rng: random.Random, odd_degree: int, max_order: int = 2,
                    label: str = "x", atoms: bool = True, max_even: int = 2) -> Expression:
    orders = rng.sample(range(max_order + 1), odd_degree) if odd_degree <= max_order + 1 else None
    if orders is None:
        raise ValueError("odd degree exceeds the number of distinct odd jet variables")
    out = Expression.constant(rng.choice([-3, -2, -1, 1, 2, 3]))
    for k in orders:
        out = out * Expression.variable(jet(True, k, label))
    for _ in range(rng.randint(0, max_even)):
        v = Expression.variable(jet(False, rng.randint(0, max_order), label))
        out = out * v ** rng.randint(1, 2)
    if atoms and rng.random() < 0.5:
        kind, order = rng.choice(ATOM_SOURCES)
        out = out * Expression.atom(kind, Expression.variable(jet(False, order, label)))
    return out


def random_density(rng: random.Random, odd_degree: int = 1, max_order: int = 2, terms: int = 3,
                   label: str = "x", atoms: bool = True) -> Expression:
    out = Expression()
    for _ in range(rng.randint(1, terms)):
        out = out + random_monomial(rng, odd_degree, max_order, label, atoms)
    return out


def random_even(rng: random.Random, max_order: int = 2, terms: int = 2, label: str = "x") -> Expression:
    """Random polynomial in the even jet variables only."""
    return random_density(rng, 0, max_order, terms, label, atoms=False)


def random_functional(rng: random.Random, odd_degree: int = 1, max_order: int = 2, terms: int = 3,
                      label: str = "x", atoms: bool = True) -> Functional:
    while True:
        d = random_density(rng, odd_degree, max_order, terms, label, atoms)
        if d:
            return Functional(d, label)
