"""Exception types shared across the library."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument falls outside the model's domain."""


class UnreachableTopologyError(RuntimeError):
    """Dissemination cannot cover the target node set on this graph."""


class ModelDegenerateError(ArithmeticError):
    """A closed-form bgp-degree collapsed below the finiteness floor.

    The approximate config-model degree recurrence can drive late steps
    to zero or below; evaluating the convergence-time sum there would be
    meaningless.  The offending (step, sdn_hit_step) pair is attached so
    callers can see where the approximation broke.
    """

    def __init__(self, step: int, sdn_hit_step: int, value: float):
        self.step = step
        self.sdn_hit_step = sdn_hit_step
        self.value = value
        super().__init__(
            f"closed-form bgp-degree degenerated at step i={step}, "
            f"x={sdn_hit_step}: value {value!r} is below the floor"
        )


class DegenerateTailError(ArithmeticError):
    """A residual-degree product hit a nonpositive denominator.

    Raised when N - n(m|x) - 1 <= 0 inside the attenuation product, which
    only happens for step requests outside the model's valid range.
    """

    def __init__(self, m: int, sdn_hit_step: int, denominator: int):
        self.m = m
        self.sdn_hit_step = sdn_hit_step
        self.denominator = denominator
        super().__init__(
            f"residual-degree product denominator N - n({m}|{sdn_hit_step}) - 1 "
            f"= {denominator} is not positive"
        )
