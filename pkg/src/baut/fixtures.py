"""Published boundary-form data for genus 2..5 and checks against it.

Each fixture records the cyclic orders, the linking matrix and the
refinement polynomial in the published generators, and the reduced
representative Q~. The published generators come from unrecorded row and
column operations, so agreement is checked up to isometry only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .boundary import SplitLinkingForm, boundary_form, find_form_isometry
from .isometries import enumerate_isometries
from .quadform import QuadFormClass, qplus_equivalent, standard_family, symmetrize

FIXTURE_GENERA = (2, 3, 4, 5)


class FixtureError(ValueError):
    """A fixture file is missing or malformed."""


@dataclass
class Fixture:
    h: int
    orders: tuple[int, ...]
    linking_matrix: tuple[tuple[Fraction, ...], ...]
    refinement_terms: tuple[tuple[int, int, Fraction], ...]
    q_tilde: tuple[tuple[int, ...], ...]
    aut_count: int
    generators: tuple = ()
    q_tilde_unreduced: tuple | None = None

    def form(self) -> SplitLinkingForm:
        return SplitLinkingForm.from_polynomial(self.orders, self.linking_matrix, self.refinement_terms)

    @classmethod
    def from_dict(cls, d: dict) -> "Fixture":
        try:
            k = len(d["orders"])
            lm = tuple(tuple(Fraction(x) for x in row) for row in d["linking_matrix"])
            if len(lm) != k or any(len(r) != k for r in lm):
                raise FixtureError("linking_matrix shape does not match orders")
            terms = tuple((int(i), int(j), Fraction(c)) for i, j, c in d["refinement_terms"])
            if any(not (0 <= i < k and 0 <= j < k) for i, j, _ in terms):
                raise FixtureError("refinement term index out of range")
            unreduced = d.get("q_tilde_unreduced")
            return cls(
                h=int(d["h"]),
                orders=tuple(int(x) for x in d["orders"]),
                linking_matrix=lm,
                refinement_terms=terms,
                q_tilde=tuple(tuple(int(x) for x in row) for row in d["q_tilde"]),
                aut_count=int(d["aut_count"]),
                generators=tuple(tuple(g) for g in d.get("generators", ())),
                q_tilde_unreduced=None if unreduced is None else tuple(tuple(int(x) for x in r) for r in unreduced),
            )
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, FixtureError):
                raise
            raise FixtureError(f"malformed fixture: {exc}") from exc

    def to_dict(self) -> dict:
        d = {
            "h": self.h,
            "orders": list(self.orders),
            "generators": [list(g) for g in self.generators],
            "linking_matrix": [[str(x) for x in row] for row in self.linking_matrix],
            "refinement_terms": [[i, j, str(c)] for i, j, c in self.refinement_terms],
            "q_tilde": [list(r) for r in self.q_tilde],
            "aut_count": self.aut_count,
        }
        if self.q_tilde_unreduced is not None:
            d["q_tilde_unreduced"] = [list(r) for r in self.q_tilde_unreduced]
        return d


def default_fixture_dir() -> Path:
    return Path(str(resources.files("baut") / "data" / "fixtures"))


def load_fixture(h: int, data_dir: Path | None = None) -> Fixture:
    path = Path(data_dir or default_fixture_dir()) / f"h{h}.json"
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise FixtureError(f"fixture file missing: {path}") from exc
    except json.JSONDecodeError as exc:
        raise FixtureError(f"fixture file is not valid JSON: {path}: {exc}") from exc
    return Fixture.from_dict(raw)


@dataclass
class FixtureResult:
    h: int
    checks: dict[str, bool] = field(default_factory=dict)
    details: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def check_fixture(fx: Fixture) -> FixtureResult:
    res = FixtureResult(h=fx.h)
    _, computed = boundary_form(standard_family(fx.h))
    published = fx.form()

    res.checks["orders"] = sorted(computed.orders) == sorted(fx.orders)
    res.details["orders"] = f"computed {computed.orders}, published {fx.orders}"

    iso = find_form_isometry(computed, published)
    res.checks["isometry"] = iso is not None
    res.details["isometry"] = "isometry found" if iso is not None else "isometry not found"

    n_aut = len(enumerate_isometries(symmetrize(standard_family(fx.h))))
    res.checks["aut_count"] = n_aut == fx.aut_count
    res.details["aut_count"] = f"computed {n_aut}, published {fx.aut_count}"

    reduced = QuadFormClass.from_matrix(fx.q_tilde)
    _, from_reduced = boundary_form(reduced)
    res.checks["q_tilde_boundary"] = find_form_isometry(from_reduced, published) is not None
    res.details["q_tilde_boundary"] = "boundary of published Q~ vs published form"
    if fx.q_tilde_unreduced is not None:
        res.checks["q_tilde_relation"] = qplus_equivalent(QuadFormClass.from_matrix(fx.q_tilde_unreduced), reduced)
        res.details["q_tilde_relation"] = "unreduced and reduced Q~ differ by an antisymmetric matrix"
    return res


def validate_fixtures(data_dir: Path | None = None, genera=FIXTURE_GENERA) -> list[FixtureResult]:
    return [check_fixture(load_fixture(h, data_dir)) for h in genera]
