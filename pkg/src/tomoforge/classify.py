"""Moment-lookup classification against a precomputed glossary.

A sample is matched to the glossary entry nearest in mean photon
number.  Errors are measured relative to the entry's quadrature energy
<n> + 1/2 so that zero-photon entries stay comparable.  When several
entries are photon-number degenerate (as the amplified CS, optimal CS
and photon-added CS become for alpha around 2), the x-quadrature
variance breaks the tie: squeezing below the vacuum value 1/2 singles
out the photon-added state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .states import MomentReport, QuantumState, theory_observables

VACUUM_VARIANCE = 0.5


class Verdict(Enum):
    MATCH = "match"
    SPURIOUS = "spurious"


@dataclass(frozen=True)
class GlossaryEntry:
    state: QuantumState
    mean_n: float
    var_x: float
    var_p: float
    higher: Optional[dict] = None

    @property
    def squeezed_x(self) -> bool:
        return self.var_x < VACUUM_VARIANCE


@dataclass
class Classification:
    best: GlossaryEntry
    relative_errors: dict = field(default_factory=dict)
    verdict: Verdict = Verdict.SPURIOUS
    squeezed_x: bool = False


def build_glossary(state_list: list[QuantumState]) -> list[GlossaryEntry]:
    """One closed-form entry per state."""
    if not state_list:
        raise ValueError("state list must be nonempty")
    entries = []
    for state in state_list:
        rep = theory_observables(state)
        entries.append(GlossaryEntry(state=state, mean_n=rep.mean_n,
                                     var_x=rep.var_x, var_p=rep.var_p))
    return entries


def _mean_n_error(value: float, entry: GlossaryEntry) -> float:
    return abs(value - entry.mean_n) / (entry.mean_n + VACUUM_VARIANCE)


def classify(report: MomentReport, glossary: list[GlossaryEntry],
             tol: float = 0.04) -> Classification:
    """Pick the nearest glossary entry and judge the match.

    Within ``tol`` the mean photon number decides; among entries whose
    photon numbers are mutually degenerate at that tolerance the
    x-variance decides instead.  The verdict is a match only when both
    compared observables of the chosen entry agree within ``tol``.
    """
    if not glossary:
        raise ValueError("glossary must be nonempty")
    mean_n = report.mean_n
    var_x = report.var_x
    errs = [_mean_n_error(mean_n, e) for e in glossary]
    order = sorted(range(len(glossary)), key=lambda i: errs[i])
    best_i = order[0]

    candidates = [i for i in order if errs[i] <= tol]
    if len(candidates) > 1:
        # the photon number cannot separate near-degenerate entries; fall
        # back to the variance along the x quadrature
        degenerate = [i for i in candidates
                      if _mean_n_error(glossary[candidates[0]].mean_n,
                                       glossary[i]) < tol]
        if len(degenerate) > 1:
            best_i = min(degenerate,
                         key=lambda i: abs(var_x - glossary[i].var_x)
                         / glossary[i].var_x)
        else:
            best_i = candidates[0]
    elif candidates:
        best_i = candidates[0]

    best = glossary[best_i]
    rel = {
        "mean_n": _mean_n_error(mean_n, best),
        "var_x": abs(var_x - best.var_x) / best.var_x,
    }
    matched = rel["mean_n"] <= tol and rel["var_x"] <= tol
    return Classification(
        best=best,
        relative_errors=rel,
        verdict=Verdict.MATCH if matched else Verdict.SPURIOUS,
        squeezed_x=var_x < VACUUM_VARIANCE,
    )


# ---------------------------------------------------------------------------
# serialization

def glossary_to_json(entries: list[GlossaryEntry], path) -> None:
    rows = [{"state": e.state.label(), "mean_n": e.mean_n,
             "var_x": e.var_x, "var_p": e.var_p} for e in entries]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)


def glossary_from_json(path) -> list[GlossaryEntry]:
    with open(path) as fh:
        rows = json.load(fh)
    return [GlossaryEntry(state=QuantumState.from_label(r["state"]),
                          mean_n=r["mean_n"], var_x=r["var_x"],
                          var_p=r["var_p"]) for r in rows]
