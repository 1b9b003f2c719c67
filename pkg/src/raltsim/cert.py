"""Change classification, MOC matrix and Change Impact Analysis documents.

Classification is a data-driven predicate disjunction: a change is Major as
soon as any configured trigger predicate holds on its descriptor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Mapping, Sequence

from .errors import ValidationError

MAJOR = "major"
MINOR = "minor"

DEFAULT_MAJOR_PREDICATES = (
    "affects_form",
    "affects_fit",
    "affects_intended_function",
    "requires_operator_training",
    "requires_full_mops_retest",
)

TEST_LAB = "test_lab"
TEST_FLIGHT = "test_flight"
ANALYSIS = "analysis"
MOC_KINDS = (TEST_LAB, TEST_FLIGHT, ANALYSIS)

SECTION_HEADINGS = (
    "Declaration of the Change",
    "Project Schedule",
    "Affected Part Number",
    "Modification Description",
    "Affected Regulations/Requirements/Standards",
    "Compliance Strategy and MOC",
    "Verification Methods",
    "Return to Service",
)

DOCUMENT_SCHEMA = "raltsim.cia/1"


@dataclass(frozen=True)
class ChangeDescriptor:
    description: str = ""
    affects_form: bool = False
    affects_fit: bool = False
    affects_intended_function: bool = False
    requires_operator_training: bool = False
    requires_full_mops_retest: bool = False
    hardware_change: bool = False
    affected_part_numbers: tuple[tuple[str, str], ...] = ()
    open_problem_reports: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "affected_part_numbers", tuple(tuple(p) for p in self.affected_part_numbers))
        object.__setattr__(self, "open_problem_reports", tuple(tuple(p) for p in self.open_problem_reports))
        for pair in self.affected_part_numbers + self.open_problem_reports:
            if len(pair) != 2:
                raise ValidationError(f"expected a pair, got {pair!r}")
        if self.hardware_change and not self.affected_part_numbers:
            raise ValidationError("a hardware change must list its affected part numbers (old -> new)")

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["affected_part_numbers"] = [list(p) for p in self.affected_part_numbers]
        out["open_problem_reports"] = [list(p) for p in self.open_problem_reports]
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChangeDescriptor":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown change descriptor keys: {sorted(unknown)}")
        return cls(**data)


FILTER_CHANGE = ChangeDescriptor(
    description="Install a bandpass filter ahead of the receiver RF input to reject adjacent-band 5G energy.",
    hardware_change=True,
    affected_part_numbers=(("RALT-100", "RALT-100-F"),),
)


@dataclass(frozen=True)
class Classification:
    level: str
    triggered_predicates: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "triggered_predicates", tuple(self.triggered_predicates))
        if self.level not in (MAJOR, MINOR):
            raise ValidationError(f"classification level must be major or minor, got {self.level!r}")
        if (self.level == MAJOR) != bool(self.triggered_predicates):
            raise ValidationError("a change is major exactly when at least one predicate triggered")

    def to_dict(self) -> dict:
        return {"level": self.level, "triggered_predicates": list(self.triggered_predicates)}


def classify_change(change: ChangeDescriptor, predicates: Sequence[str] = DEFAULT_MAJOR_PREDICATES) -> Classification:
    triggered = tuple(p for p in predicates if getattr(change, p))
    return Classification(MAJOR if triggered else MINOR, triggered)


@dataclass(frozen=True)
class MOCRow:
    standard: str
    requirement_source: str
    mocs: tuple[str, ...]
    evidence: tuple[str, ...] = ()

    def __post_init__(self):
        mocs = tuple(self.mocs)
        if not mocs:
            raise ValidationError(f"MOC row {self.standard!r} lists no means of compliance")
        bad = [m for m in mocs if m not in MOC_KINDS]
        if bad:
            raise ValidationError(f"MOC row {self.standard!r}: unknown means {bad}; expected {MOC_KINDS}")
        # canonical order so merged and freshly built rows compare equal
        object.__setattr__(self, "mocs", tuple(m for m in MOC_KINDS if m in mocs))
        object.__setattr__(self, "evidence", tuple(self.evidence))

    @property
    def needs_test_evidence(self) -> bool:
        return any(m.startswith("test_") for m in self.mocs)

    def to_dict(self) -> dict:
        return {
            "standard": self.standard,
            "requirement_source": self.requirement_source,
            "mocs": list(self.mocs),
            "evidence": list(self.evidence),
        }


@dataclass(frozen=True)
class MOCMatrix:
    rows: tuple[MOCRow, ...]

    def row(self, standard: str) -> MOCRow:
        for r in self.rows:
            if r.standard == standard:
                return r
        raise KeyError(standard)

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


DEFAULT_MOC_ENTRIES = (
    ("TSO-C87", "AMOC", (TEST_LAB, ANALYSIS)),
    ("Non-Regulatory", "Product Specification", (TEST_LAB,)),
)


def build_moc_matrix(entries: Sequence = DEFAULT_MOC_ENTRIES) -> MOCMatrix:
    """Validate ``(standard, requirement_source, mocs)`` entries into a matrix.

    Rows sharing a standard identifier are merged with the union of their
    means; their requirement sources must agree.
    """
    merged: dict[str, MOCRow] = {}
    for entry in entries:
        row = entry if isinstance(entry, MOCRow) else MOCRow(entry[0], entry[1], tuple(entry[2]))
        prior = merged.get(row.standard)
        if prior is None:
            merged[row.standard] = row
            continue
        if prior.requirement_source != row.requirement_source:
            raise ValidationError(
                f"duplicate standard {row.standard!r} with conflicting requirement sources"
                f" {prior.requirement_source!r} / {row.requirement_source!r}"
            )
        merged[row.standard] = MOCRow(
            row.standard,
            row.requirement_source,
            prior.mocs + row.mocs,
            tuple(dict.fromkeys(prior.evidence + row.evidence)),
        )
    return MOCMatrix(tuple(merged.values()))


DEFAULT_REGULATIONS = (
    "TSO-C87",
    "RTCA DO-155 (MOPS)",
    "14 CFR Part 37",
    "AC 25-7D",
    "Product Specification (non-regulatory)",
)


@dataclass(frozen=True)
class CIADocument:
    declaration: Classification
    change: ChangeDescriptor
    moc_matrix: MOCMatrix
    verification_evidence: tuple[str, ...] = ()
    affected_regulations: tuple[str, ...] = DEFAULT_REGULATIONS
    schedule_note: str = ""
    return_to_service_note: str = ""
    verification_methods_note: str = ""

    @property
    def affected_pns(self) -> tuple[tuple[str, str], ...]:
        return self.change.affected_part_numbers

    @property
    def modification_description(self) -> str:
        return self.change.description

    def problems(self) -> list[str]:
        out = []
        expected = classify_change(self.change)
        if expected != self.declaration:
            out.append(
                f"declaration {self.declaration.level} {list(self.declaration.triggered_predicates)} disagrees"
                f" with descriptor ({expected.level} {list(expected.triggered_predicates)})"
            )
        known = set(self.verification_evidence)
        for row in self.moc_matrix.rows:
            if row.needs_test_evidence and not row.evidence:
                out.append(f"MOC row {row.standard!r} uses test means but links no verification evidence")
            for ref in row.evidence:
                if ref not in known:
                    out.append(f"MOC row {row.standard!r} references unknown evidence {ref!r}")
        return out

    def validate(self) -> "CIADocument":
        problems = self.problems()
        if problems:
            raise ValidationError("CIA document failed validation: " + "; ".join(problems), problems)
        return self

    def to_dict(self) -> dict:
        return {
            "schema": DOCUMENT_SCHEMA,
            "declaration": self.declaration.to_dict(),
            "change": self.change.to_dict(),
            "moc_matrix": self.moc_matrix.to_dict(),
            "verification_evidence": list(self.verification_evidence),
            "affected_regulations": list(self.affected_regulations),
            "schedule_note": self.schedule_note,
            "return_to_service_note": self.return_to_service_note,
            "verification_methods_note": self.verification_methods_note,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CIADocument":
        if data.get("schema") != DOCUMENT_SCHEMA:
            raise ValidationError(f"unsupported document schema {data.get('schema')!r}")
        decl = data["declaration"]
        rows = tuple(
            MOCRow(r["standard"], r["requirement_source"], tuple(r["mocs"]), tuple(r["evidence"]))
            for r in data["moc_matrix"]["rows"]
        )
        change = dict(data["change"])
        return cls(
            declaration=Classification(decl["level"], tuple(decl["triggered_predicates"])),
            change=ChangeDescriptor.from_dict(change),
            moc_matrix=MOCMatrix(rows),
            verification_evidence=tuple(data["verification_evidence"]),
            affected_regulations=tuple(data["affected_regulations"]),
            schedule_note=data["schedule_note"],
            return_to_service_note=data["return_to_service_note"],
            verification_methods_note=data["verification_methods_note"],
        )


def build_cia(
    change: ChangeDescriptor,
    classification: Classification,
    matrix: MOCMatrix,
    evidence: Mapping[str, Sequence[str]] | None = None,
    *,
    affected_regulations: Sequence[str] = DEFAULT_REGULATIONS,
    schedule_note: str = "",
    return_to_service_note: str = "",
    verification_methods_note: str = "",
) -> CIADocument:
    """Assemble and validate a CIA document.

    ``evidence`` maps a MOC row's standard identifier to the report
    fingerprints that back it. Keys naming no row are dangling references and
    are rejected along with test rows that end up without evidence.
    """
    evidence = dict(evidence or {})
    standards = {r.standard for r in matrix.rows}
    dangling = [k for k in evidence if k not in standards]
    problems = [f"evidence references unknown MOC row {k!r}" for k in dangling]
    rows = tuple(
        MOCRow(r.standard, r.requirement_source, r.mocs, tuple(dict.fromkeys(r.evidence + tuple(evidence.get(r.standard, ())))))
        for r in matrix.rows
    )
    all_refs = tuple(dict.fromkeys(ref for r in rows for ref in r.evidence))
    doc = CIADocument(
        declaration=classification,
        change=change,
        moc_matrix=MOCMatrix(rows),
        verification_evidence=all_refs,
        affected_regulations=tuple(affected_regulations),
        schedule_note=schedule_note,
        return_to_service_note=return_to_service_note,
        verification_methods_note=verification_methods_note,
    )
    problems += doc.problems()
    if problems:
        raise ValidationError("CIA document failed validation: " + "; ".join(problems), problems)
    return doc


def emit_document(doc: CIADocument, fmt: str = "json") -> bytes:
    """Serialise a validated document; refuses documents that do not validate."""
    doc.validate()
    if fmt == "json":
        return (json.dumps(doc.to_dict(), sort_keys=True, indent=2, ensure_ascii=True) + "\n").encode("utf-8")
    if fmt == "text":
        return render_text(doc).encode("utf-8")
    raise ValueError(f"unknown document format {fmt!r}")


def parse_document(data: bytes | str) -> CIADocument:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return CIADocument.from_dict(json.loads(data))


_MOC_LABELS = {TEST_LAB: "Laboratory Test", TEST_FLIGHT: "Flight Test", ANALYSIS: "Analysis"}


def render_text(doc: CIADocument) -> str:
    lines: list[str] = ["CHANGE IMPACT ANALYSIS", ""]

    def section(i: int, body: list[str]):
        title = f"{i}. {SECTION_HEADINGS[i - 1]}"
        lines.extend([title, "-" * len(title), *body, ""])

    decl = doc.declaration
    hw = "Hardware" if doc.change.hardware_change else "Software/Other"
    body = [f"Classification: {decl.level.capitalize()} {hw} Change"]
    if decl.triggered_predicates:
        body.append("Triggered predicates: " + ", ".join(decl.triggered_predicates))
    else:
        body.append("Triggered predicates: none")
    section(1, body)
    section(2, [doc.schedule_note or "(not specified)"])
    pns = [f"{old} -> {new}" for old, new in doc.affected_pns] or ["(none)"]
    section(3, pns)
    body = [doc.modification_description or "(not specified)"]
    if doc.change.open_problem_reports:
        body.append("Open problem reports reviewed:")
        body.extend(f"  {pid}: {disp}" for pid, disp in doc.change.open_problem_reports)
    section(4, body)
    section(5, [f"- {reg}" for reg in doc.affected_regulations] or ["(none)"])
    body = []
    for row in doc.moc_matrix.rows:
        means = ", ".join(_MOC_LABELS[m] for m in row.mocs)
        body.append(f"- {row.standard} | {row.requirement_source} | {means}")
    section(6, body)
    body = [doc.verification_methods_note] if doc.verification_methods_note else []
    for row in doc.moc_matrix.rows:
        refs = ", ".join(row.evidence) if row.evidence else "(none)"
        body.append(f"- {row.standard}: evidence {refs}")
    section(7, body)
    section(8, [doc.return_to_service_note or "(not specified)"])
    return "\n".join(lines).rstrip("\n") + "\n"
