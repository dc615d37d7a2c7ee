"""Secret-share representation and the multiparty protocol suite.

Two interchangeable backends sit behind one interface:

* ``shamir`` — addition and subtraction are local, multiplication follows the
  classic degree-reduction protocol (local product, reshare, recombine with
  Lagrange coefficients).
* ``dealer`` — the executable axiom: reconstruct, compute on plaintext, reshare.

Division, comparisons and the control logic of the oblivious free always go
through the dealer; everything else obeys the selected backend. All randomness
comes from one seeded stream so traces are replayable. ``rounds`` counts
protocol invocations that exchange shares; ``counts`` tallies invocations per
protocol kind for the round report.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass

from .errors import DivisionByZero, NotEnoughShares, ShapeMismatch

DEFAULT_PRIME = 2305843009213693951  # 2**61 - 1


@dataclass(frozen=True)
class FieldParams:
    p: int = DEFAULT_PRIME
    q: int = 3
    t: int = 1

    def __post_init__(self):
        if not self.t < self.q / 2:
            raise ValueError(f"threshold {self.t} must satisfy t < q/2 (q={self.q})")
        if self.p < 5:
            raise ValueError("field too small")


def to_signed(x: int, p: int) -> int:
    """Interpret a field element as a signed integer in (-p/2, p/2)."""
    x %= p
    return x - p if x > p // 2 else x


def c_div(a: int, b: int) -> int:
    """C integer division: truncation toward zero."""
    if b == 0:
        raise DivisionByZero("integer division by zero")
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


class Protocols:
    """The protocol suite for one simulated run."""

    BACKENDS = ("shamir", "dealer")

    def __init__(self, params: FieldParams = FieldParams(), seed: int = 0,
                 backend: str = "shamir"):
        if backend not in self.BACKENDS:
            raise ValueError(f"unknown backend {backend!r}")
        self.params = params
        self.backend = backend
        self.rng = random.Random(seed)
        self.rounds = 0
        self.counts = Counter()
        self._lambda = self._lagrange_at_zero(params.q)

    # ---------------------------------------------------------------- shares

    def _lagrange_at_zero(self, m: int):
        """Coefficients interpolating points 1..m at x=0."""
        p = self.params.p
        lams = []
        for i in range(1, m + 1):
            num, den = 1, 1
            for j in range(1, m + 1):
                if j != i:
                    num = num * (-j) % p
                    den = den * (i - j) % p
            lams.append(num * pow(den, -1, p) % p)
        return lams

    def share(self, x: int, rng=None):
        """Random degree-t sharing of x; party p holds f(p)."""
        p, q, t = self.params.p, self.params.q, self.params.t
        rng = rng or self.rng
        if t == 1:  # the common threshold: f(i) = x + c*i
            c = rng.randrange(p)
            x %= p
            return tuple((x + c * i) % p for i in range(1, q + 1))
        coeffs = [x % p] + [rng.randrange(p) for _ in range(t)]
        return tuple(self._poly_eval(coeffs, i) for i in range(1, q + 1))

    def const_share(self, x: int):
        """Degree-0 sharing of a public constant; local, no randomness."""
        x %= self.params.p
        return tuple([x] * self.params.q)

    def _poly_eval(self, coeffs, x):
        p = self.params.p
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * x + c) % p
        return acc

    def reconstruct(self, shares, parties=None) -> int:
        """Interpolate at zero; needs at least t+1 shares from distinct parties."""
        p, t = self.params.p, self.params.t
        if parties is None:
            if len(shares) == self.params.q:  # the common full-set case
                return sum(l * s for l, s in zip(self._lambda, shares)) % p
            parties = tuple(range(1, len(shares) + 1))
        if len(shares) != len(parties) or len(set(parties)) != len(parties):
            raise NotEnoughShares("shares must come from distinct parties")
        if len(shares) < t + 1:
            raise NotEnoughShares(f"{len(shares)} shares, need {t + 1}")
        acc = 0
        for i, (pi, si) in enumerate(zip(parties, shares)):
            num, den = 1, 1
            for pj in parties:
                if pj != pi:
                    num = num * (-pj) % p
                    den = den * (pi - pj) % p
            acc = (acc + si * num * pow(den, -1, p)) % p
        return acc

    def open_signed(self, shares) -> int:
        return to_signed(self.reconstruct(shares), self.params.p)

    # ---------------------------------------------------------------- local ops

    def add(self, a, b):
        p = self.params.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a, b):
        p = self.params.p
        return tuple((x - y) % p for x, y in zip(a, b))

    def add_const(self, a, c: int):
        p = self.params.p
        return tuple((x + c) % p for x in a)

    # -------------------------------------------------------------- protocols

    def mult(self, a, b):
        """Degree-t sharing of the product; one share-exchange round."""
        self.rounds += 1
        self.counts["mult"] += 1
        if self.backend == "dealer":
            return self._dealer(lambda x, y: x * y, a, b)
        p, q = self.params.p, self.params.q
        # each party multiplies locally and reshares its sub-product
        sub = [self.share(a[i] * b[i] % p) for i in range(q)]
        return tuple(
            sum(self._lambda[i] * sub[i][j] for i in range(q)) % p
            for j in range(q)
        )

    def _dealer(self, fn, a, b):
        x = to_signed(self.reconstruct(a), self.params.p)
        y = to_signed(self.reconstruct(b), self.params.p)
        return self.share(fn(x, y) % self.params.p)

    def binop(self, bop: str, a, b):
        """MPC dispatch for {*, +, -, /}; +,- are local (no round)."""
        self.counts["binop"] += 1
        if bop == "+":
            return self.add(a, b)
        if bop == "-":
            return self.sub(a, b)
        if bop == "*":
            return self.mult(a, b)
        if bop == "/":
            self.rounds += 1
            self.counts["div"] += 1
            return self._dealer(c_div, a, b)
        raise ValueError(f"binop {bop!r}")

    def cmp(self, op: str, a, b):
        """Comparison over signed plaintexts; fresh sharing of the 0/1 outcome."""
        self.rounds += 1
        self.counts["cmp"] += 1
        x = self.open_signed(a)
        y = self.open_signed(b)
        bit = {"<": x < y, "==": x == y, "!=": x != y}[op]
        return self.share(int(bit))

    def array_read(self, idx, elems):
        """Oblivious selection: sum over m of (idx==m) * elems[m].

        Touches every element exactly once; an out-of-range index reconstructs
        to 0 (the selector is all-zero).
        """
        self.counts["ar"] += 1
        acc = self.const_share(0)
        for m, em in enumerate(elems):
            sel = self.cmp("==", idx, self.const_share(m))
            acc = self.add(acc, self.mult(sel, em))
        return acc

    def array_write(self, idx, elems, value):
        """Every element rewritten: new_m = old_m + (idx==m) * (value - old_m)."""
        self.counts["aw"] += 1
        out = []
        for m, em in enumerate(elems):
            sel = self.cmp("==", idx, self.const_share(m))
            out.append(self.add(em, self.mult(sel, self.sub(value, em))))
        return out

    def deref_read(self, values, tags):
        """Dot product of one-hot tags with candidate values."""
        self.counts["dv"] += 1
        if len(values) != len(tags):
            raise ShapeMismatch("values/tags length mismatch")
        acc = self.const_share(0)
        for v, t in zip(values, tags):
            acc = self.add(acc, self.mult(t, v))
        return acc

    def deref_write(self, old_values, tags, value):
        """Oblivious write through a multi-location pointer."""
        self.counts["dw"] += 1
        out = []
        for ov, t in zip(old_values, tags):
            out.append(self.add(ov, self.mult(t, self.sub(value, ov))))
        return out

    def free_swap(self, contents, tags):
        """Oblivious swap of slot 0's elements with the true slot's elements.

        `contents` is a list of alpha slots, each a list of element shares.
        Returns (new contents, tags re-one-hot over the surviving alpha-1 slots).
        """
        self.counts["free"] += 1
        alpha = len(contents)
        if alpha < 2:
            raise ShapeMismatch("oblivious free needs alpha > 1")
        nelem = len(contents[0])
        if any(len(c) != nelem for c in contents):
            raise ShapeMismatch("slot sizes differ")
        new = [list(slot) for slot in contents]
        for e in range(nelem):
            # slot 0 receives the true slot's element
            acc = self.const_share(0)
            for m in range(alpha):
                acc = self.add(acc, self.mult(tags[m], contents[m][e]))
            new[0][e] = acc
            # every other slot swaps in slot 0's element when it is the true one
            for m in range(1, alpha):
                delta = self.mult(tags[m], self.sub(contents[0][e], contents[m][e]))
                new[m][e] = self.add(contents[m][e], delta)
        # tags collapse onto the survivors; if slot 0 was true, survivor 1 takes over
        new_tags = [self.add(tags[1], tags[0])] + [tags[m] for m in range(2, alpha)]
        return new, new_tags

    def resolve(self, cond, then_val, else_val):
        """Branch resolution: cond*then + (1-cond)*else, one invocation per datum."""
        self.counts["resolve"] += 1
        return self._mux(cond, then_val, else_val)

    def resolve_many(self, cond, then_vals, else_vals):
        """Elementwise resolution of an array; still a single resolve invocation."""
        self.counts["resolve"] += 1
        if len(then_vals) != len(else_vals):
            raise ShapeMismatch(f"array lengths {len(then_vals)} vs {len(else_vals)}")
        return [self._mux(cond, t, e) for t, e in zip(then_vals, else_vals)]

    def _mux(self, cond, a, b):
        return self.add(b, self.mult(cond, self.sub(a, b)))
