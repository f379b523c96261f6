"""Normed abelian coefficient groups.

Chains carry coefficients in one of three groups: the integers, the reals,
or the integers mod p.  Each group has a norm satisfying |-g| = |g|,
|g + h| <= |g| + |h| and |g| = 0 iff g = 0.  For Z and R the norm is the
absolute value; for Z mod p it is min(k, p - k), the geodesic distance on
a p-cycle, so that mod-2 chains have mass equal to the measure of their
support.
"""

from __future__ import annotations

from dataclasses import dataclass

_INT_TOL = 1e-9


class Group:
    """A coefficient group: Z, R, or Z mod p, with its norm.

    Values are stored as plain Python scalars: ints for Z and Z mod p
    (reduced into [0, p)), floats for R.  Real equality is an exact test on
    the stored value; chains only produce coefficients by finite sums of
    their inputs, so no tolerance is wanted here.
    """

    __slots__ = ("kind", "p")

    def __init__(self, kind: str, p: int | None = None):
        if kind not in ("Z", "R", "Zmod"):
            raise ValueError(f"unknown group kind: {kind!r}")
        if kind == "Zmod":
            if p is None or int(p) < 2:
                raise ValueError("cyclic group needs an integer modulus p >= 2")
            p = int(p)
        elif p is not None:
            raise ValueError("modulus only makes sense for Zmod")
        self.kind = kind
        self.p = p

    # -- raw scalar arithmetic used by the chain machinery ----------------

    @property
    def zero(self):
        return 0.0 if self.kind == "R" else 0

    def canon(self, value):
        """Reduce a raw value into canonical form, or raise if it is not a
        valid element (non-integer value for Z / Z mod p)."""
        if self.kind == "R":
            return float(value)
        r = round(float(value))
        if abs(float(value) - r) > _INT_TOL:
            raise ValueError(f"{value!r} is not an integer element of {self}")
        r = int(r)
        return r % self.p if self.kind == "Zmod" else r

    def add(self, a, b):
        c = a + b
        return c % self.p if self.kind == "Zmod" else c

    def neg(self, a):
        return (-a) % self.p if self.kind == "Zmod" else -a

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def norm(self, a) -> float:
        if self.kind == "Zmod":
            a = a % self.p
            return float(min(a, self.p - a))
        return float(abs(a))

    def is_zero(self, a) -> bool:
        if self.kind == "Zmod":
            return a % self.p == 0
        return a == 0

    # -- element factory ---------------------------------------------------

    def element(self, value) -> "GroupElement":
        return GroupElement(self, self.canon(value))

    # -- identity / serialization -------------------------------------------

    def __eq__(self, other):
        return isinstance(other, Group) and self.kind == other.kind and self.p == other.p

    def __hash__(self):
        return hash((self.kind, self.p))

    def __repr__(self):
        if self.kind == "Zmod":
            return f"Z_{self.p}"
        return self.kind

    def to_json(self):
        if self.kind == "Zmod":
            return {"Zmod": self.p}
        return self.kind

    @staticmethod
    def from_json(tag) -> "Group":
        if tag == "Z":
            return Group("Z")
        if tag == "R":
            return Group("R")
        if isinstance(tag, dict) and "Zmod" in tag:
            return Group("Zmod", int(tag["Zmod"]))
        raise ValueError(f"unknown group tag: {tag!r}")


@dataclass(frozen=True)
class GroupElement:
    """A group element paired with its group, for arithmetic at the API level."""

    group: Group
    value: object

    def _check(self, other: "GroupElement"):
        if self.group != other.group:
            raise ValueError(f"mismatched groups: {self.group} vs {other.group}")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group, self.group.add(self.value, other.value))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group, self.group.sub(self.value, other.value))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.group, self.group.neg(self.value))

    @property
    def norm(self) -> float:
        return self.group.norm(self.value)

    @property
    def is_zero(self) -> bool:
        return self.group.is_zero(self.value)


def integers() -> Group:
    return Group("Z")


def reals() -> Group:
    return Group("R")


def cyclic(p: int) -> Group:
    return Group("Zmod", p)


Z = integers()
R = reals()
Z2 = cyclic(2)
