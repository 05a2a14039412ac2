"""Prompt templates: rendering, exhaustive enumeration, closed-form counting.

A template fixes N slots. Slot i draws an object label from its object set
and, when the slot carries attributes, an attribute from its attribute set.
Three uniqueness modes govern which assignments are admissible:

* ``STRICT``: object labels pairwise distinct and attributes pairwise
  distinct across slots,
* ``PAIRWISE``: the (attribute, object) couple of a slot may not repeat at
  another slot; the same object may recur under different attributes,
* ``FREE``: every combination is admissible.

Counting is closed-form where one exists: falling factorials under
``STRICT`` with shared sets, a plain product under ``FREE``, and, under
``PAIRWISE``, a sum over placements of the couples shared between slots
(enumerated by a pruned tree walk) with slot-exclusive couples filling the
remaining positions.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .errors import (
    AssignmentError,
    InfeasibleTemplateError,
    SchemaError,
    TemplateError,
)

TEMPLATE_SCHEMA_ID = "tiam-template-v1"
DATASET_SCHEMA_ID = "tiam-dataset-v1"

STRICT = "STRICT"
PAIRWISE = "PAIRWISE"
FREE = "FREE"
UNIQUENESS_MODES = (STRICT, PAIRWISE, FREE)

_VOWELS = frozenset("aeiou")
_PLACEHOLDER = re.compile(r"(det|attr|obj)\((\d+)\)")

# One assignment slot: (object label, attribute or None).
Slot = tuple[str, "str | None"]


@dataclass(frozen=True)
class ObjectSet:
    """Ordered set of object labels admissible at one slot (1-based index)."""

    position_index: int
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.position_index < 1:
            raise TemplateError(f"object set position must be >= 1, got {self.position_index}")
        if not self.labels:
            raise TemplateError(f"object set at position {self.position_index} is empty")
        if len(set(self.labels)) != len(self.labels):
            raise TemplateError(f"duplicate labels in object set at position {self.position_index}")


@dataclass(frozen=True)
class AttributeSet:
    """Ordered set of attributes at one slot; empty means the slot is bare."""

    position_index: int
    attributes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.position_index < 1:
            raise TemplateError(f"attribute set position must be >= 1, got {self.position_index}")
        if len(set(self.attributes)) != len(self.attributes):
            raise TemplateError(
                f"duplicate attributes in attribute set at position {self.position_index}"
            )


@dataclass(frozen=True)
class Template:
    """Parametric prompt pattern with N object/attribute slots.

    ``text_pattern`` uses ``obj(i)``, ``attr(i)`` and ``det(i)`` placeholders
    (i in 1..N). ``obj(i)`` must appear exactly once per slot; ``attr(i)``
    exactly once for slots with attributes and never for bare slots;
    ``det(i)`` renders the English indefinite article for the word that
    follows it (the slot's attribute when present, else its object), with
    ``article_overrides`` handling exceptions the vowel rule gets wrong.
    """

    name: str
    n_positions: int
    text_pattern: str
    object_sets: tuple[ObjectSet, ...]
    attribute_sets: tuple[AttributeSet, ...]
    uniqueness_mode: str = STRICT
    article_overrides: Mapping[str, str] = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self) -> None:
        n = self.n_positions
        if n < 1:
            raise TemplateError(f"n_positions must be >= 1, got {n}")
        if self.uniqueness_mode not in UNIQUENESS_MODES:
            raise TemplateError(f"unknown uniqueness_mode {self.uniqueness_mode!r}")
        if len(self.object_sets) != n:
            raise TemplateError(f"expected {n} object sets, got {len(self.object_sets)}")
        if len(self.attribute_sets) != n:
            raise TemplateError(f"expected {n} attribute sets, got {len(self.attribute_sets)}")
        for i, (oset, aset) in enumerate(zip(self.object_sets, self.attribute_sets), start=1):
            if oset.position_index != i:
                raise TemplateError(f"object sets out of order at position {i}")
            if aset.position_index != i:
                raise TemplateError(f"attribute sets out of order at position {i}")
        obj_counts = {i: 0 for i in range(1, n + 1)}
        attr_counts = {i: 0 for i in range(1, n + 1)}
        for kind, idx in _PLACEHOLDER.findall(self.text_pattern):
            i = int(idx)
            if not 1 <= i <= n:
                raise TemplateError(f"placeholder {kind}({i}) out of range 1..{n}")
            if kind == "obj":
                obj_counts[i] += 1
            elif kind == "attr":
                attr_counts[i] += 1
        for i in range(1, n + 1):
            if obj_counts[i] != 1:
                raise TemplateError(f"obj({i}) must appear exactly once, found {obj_counts[i]}")
            has_attrs = bool(self.attribute_sets[i - 1].attributes)
            if has_attrs and attr_counts[i] != 1:
                raise TemplateError(f"attr({i}) must appear exactly once, found {attr_counts[i]}")
            if not has_attrs and attr_counts[i] != 0:
                raise TemplateError(f"attr({i}) used but position {i} has no attributes")

    def slot_candidates(self, position: int) -> list[Slot]:
        """Admissible (object, attribute) couples at a slot, object-major."""
        labels = self.object_sets[position - 1].labels
        attrs: Sequence[str | None] = self.attribute_sets[position - 1].attributes or (None,)
        return [(o, a) for o in labels for a in attrs]

    @property
    def attributed(self) -> bool:
        return any(aset.attributes for aset in self.attribute_sets)


@dataclass(frozen=True)
class PromptInstance:
    """One concrete prompt plus the content expected from it.

    ``ground_truth`` lists (position_index, object_label, attribute_or_None)
    triples, one per slot.
    """

    prompt_id: str
    text: str
    ground_truth: tuple[tuple[int, str, str | None], ...]


def _article(word: str, overrides: Mapping[str, str]) -> str:
    if word in overrides:
        return overrides[word]
    return "an" if word[:1].lower() in _VOWELS else "a"


def _check_assignment(template: Template, assignment: Sequence[Slot]) -> None:
    if len(assignment) != template.n_positions:
        raise AssignmentError(
            f"assignment length {len(assignment)} != {template.n_positions} positions"
        )
    for i, (obj, attr) in enumerate(assignment, start=1):
        oset = template.object_sets[i - 1]
        aset = template.attribute_sets[i - 1]
        if obj not in oset.labels:
            raise AssignmentError(f"object {obj!r} not admissible at position {i}")
        if aset.attributes:
            if attr not in aset.attributes:
                raise AssignmentError(f"attribute {attr!r} not admissible at position {i}")
        elif attr is not None:
            raise AssignmentError(f"position {i} carries no attributes, got {attr!r}")
    mode = template.uniqueness_mode
    if mode == STRICT:
        objects = [o for o, _ in assignment]
        if len(set(objects)) != len(objects):
            raise AssignmentError("STRICT mode forbids repeating an object")
        attrs = [a for _, a in assignment if a is not None]
        if len(set(attrs)) != len(attrs):
            raise AssignmentError("STRICT mode forbids repeating an attribute")
    elif mode == PAIRWISE:
        if len(set(assignment)) != len(assignment):
            raise AssignmentError("PAIRWISE mode forbids repeating an (attribute, object) couple")


def _prompt_id(template_name: str, assignment: Sequence[Slot]) -> str:
    payload = template_name + "\x1f" + "\x1f".join(
        f"{o}\x1e{'' if a is None else a}" for o, a in assignment
    )
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:16]


def _compile_pattern(template: Template) -> list[str | tuple[str, int]]:
    """Split the pattern into literal chunks and (kind, slot) placeholders."""
    parts: list[str | tuple[str, int]] = []
    cursor = 0
    for match in _PLACEHOLDER.finditer(template.text_pattern):
        if match.start() > cursor:
            parts.append(template.text_pattern[cursor : match.start()])
        parts.append((match.group(1), int(match.group(2)) - 1))
        cursor = match.end()
    if cursor < len(template.text_pattern):
        parts.append(template.text_pattern[cursor:])
    return parts


def _render_instance(
    template: Template,
    parts: Sequence[str | tuple[str, int]],
    assignment: Sequence[Slot],
) -> PromptInstance:
    chunks = []
    for part in parts:
        if isinstance(part, str):
            chunks.append(part)
            continue
        kind, slot = part
        obj, attr = assignment[slot]
        if kind == "obj":
            chunks.append(obj)
        elif kind == "attr":
            chunks.append(attr if attr is not None else "")
        else:
            chunks.append(_article(attr if attr is not None else obj, template.article_overrides))
    ground_truth = tuple((i, o, a) for i, (o, a) in enumerate(assignment, start=1))
    return PromptInstance(_prompt_id(template.name, assignment), "".join(chunks), ground_truth)


def render_prompt(template: Template, assignment: Sequence[Slot]) -> PromptInstance:
    """Substitute an admissible assignment into the template's pattern."""
    assignment = [(o, a) for o, a in assignment]
    _check_assignment(template, assignment)
    return _render_instance(template, _compile_pattern(template), assignment)


def _iter_assignments(template: Template) -> Iterator[tuple[Slot, ...]]:
    """Depth-first walk of admissible assignments in deterministic order.

    Candidates at each slot are object-major (object index outer, attribute
    index inner); slots advance left to right, so the overall order is
    lexicographic over (position, object index, attribute index).
    """
    n = template.n_positions
    candidates = [template.slot_candidates(i) for i in range(1, n + 1)]
    mode = template.uniqueness_mode
    chosen: list[Slot] = []

    def admissible(obj: str, attr: str | None) -> bool:
        if mode == STRICT:
            if any(obj == o for o, _ in chosen):
                return False
            return attr is None or all(attr != a for _, a in chosen)
        if mode == PAIRWISE:
            return (obj, attr) not in chosen
        return True

    def walk(position: int) -> Iterator[tuple[Slot, ...]]:
        if position == n:
            yield tuple(chosen)
            return
        for obj, attr in candidates[position]:
            if not admissible(obj, attr):
                continue
            chosen.append((obj, attr))
            yield from walk(position + 1)
            chosen.pop()

    yield from walk(0)


def enumerate_prompts(template: Template) -> list[PromptInstance]:
    """All admissible prompts of a template, in deterministic order."""
    parts = _compile_pattern(template)
    return [
        _render_instance(template, parts, assignment)
        for assignment in _iter_assignments(template)
    ]


def _shared_sets(sets: Sequence[tuple[str, ...]]) -> bool:
    first = set(sets[0])
    return all(set(s) == first for s in sets[1:])


def _count_strict_dfs(template: Template) -> int:
    n = template.n_positions
    candidates = [template.slot_candidates(i) for i in range(1, n + 1)]

    def walk(position: int, used_objects: frozenset[str], used_attrs: frozenset[str]) -> int:
        if position == n:
            return 1
        total = 0
        for obj, attr in candidates[position]:
            if obj in used_objects or (attr is not None and attr in used_attrs):
                continue
            total += walk(
                position + 1,
                used_objects | {obj},
                used_attrs if attr is None else used_attrs | {attr},
            )
        return total

    return walk(0, frozenset(), frozenset())


def count_couple_assignments(couples: Sequence[Sequence[Slot]]) -> int:
    """Count tuples drawing one couple per slot with no couple repeated.

    Couples admissible at several slots are placed explicitly on a pruned
    tree (each at most once); every unplaced slot contributes the number of
    couples admissible only there. Summing the product over all placements
    counts each assignment exactly once, because a couple unique to a slot
    can never collide with a shared couple or with another slot's exclusive
    couples.
    """
    n = len(couples)
    couple_sets = [set(c) for c in couples]
    exclusive_count = []
    shared = []
    for i in range(n):
        others: set[Slot] = set()
        for j in range(n):
            if j != i:
                others |= couple_sets[j]
        exclusive_count.append(len(couple_sets[i] - others))
        shared.append(sorted(couple_sets[i] & others))

    total = 0

    def walk(position: int, used: frozenset[Slot], product: int) -> None:
        nonlocal total
        if position == n:
            total += product
            return
        walk(position + 1, used, product * exclusive_count[position])
        for couple in shared[position]:
            if couple not in used:
                walk(position + 1, used | {couple}, product)

    walk(0, frozenset(), 1)
    return total


def count_prompts(template: Template) -> int:
    """Number of admissible prompts, without materializing them."""
    n = template.n_positions
    if template.uniqueness_mode == FREE:
        total = 1
        for i in range(1, n + 1):
            total *= len(template.slot_candidates(i))
        return total
    if template.uniqueness_mode == PAIRWISE:
        return count_couple_assignments(
            [template.slot_candidates(i) for i in range(1, n + 1)]
        )
    # STRICT: falling factorials when every slot shares the same sets.
    object_families = [oset.labels for oset in template.object_sets]
    attr_families = [aset.attributes for aset in template.attribute_sets]
    attr_sizes = {len(a) for a in attr_families}
    if _shared_sets(object_families) and (attr_sizes == {0} or _shared_sets(attr_families)):
        n_objects = len(object_families[0])
        n_attrs = len(attr_families[0])
        if n_objects < n:
            raise InfeasibleTemplateError(
                f"STRICT needs at least {n} objects, the shared set has {n_objects}"
            )
        if n_attrs and n_attrs < n:
            raise InfeasibleTemplateError(
                f"STRICT needs at least {n} attributes, the shared set has {n_attrs}"
            )
        total = math.perm(n_objects, n)
        if n_attrs:
            total *= math.perm(n_attrs, n)
        return total
    return _count_strict_dfs(template)


# --- template / dataset documents -------------------------------------------


def template_to_dict(template: Template) -> dict:
    doc = {
        "schema_id": TEMPLATE_SCHEMA_ID,
        "name": template.name,
        "n_positions": template.n_positions,
        "text_pattern": template.text_pattern,
        "object_sets": [
            {"position": s.position_index, "labels": list(s.labels)} for s in template.object_sets
        ],
        "attribute_sets": [
            {"position": s.position_index, "attributes": list(s.attributes)}
            for s in template.attribute_sets
        ],
        "uniqueness_mode": template.uniqueness_mode,
        "article_overrides": dict(template.article_overrides),
    }
    if template.notes:
        doc["notes"] = template.notes
    return doc


def template_from_dict(doc: Mapping) -> Template:
    try:
        if doc.get("schema_id", TEMPLATE_SCHEMA_ID) != TEMPLATE_SCHEMA_ID:
            raise SchemaError(f"unexpected template schema_id {doc['schema_id']!r}")
        object_sets = tuple(
            ObjectSet(s["position"], tuple(s["labels"])) for s in doc["object_sets"]
        )
        attribute_sets = tuple(
            AttributeSet(s["position"], tuple(s.get("attributes", ())))
            for s in doc["attribute_sets"]
        )
        return Template(
            name=doc["name"],
            n_positions=doc["n_positions"],
            text_pattern=doc["text_pattern"],
            object_sets=object_sets,
            attribute_sets=attribute_sets,
            uniqueness_mode=doc.get("uniqueness_mode", STRICT),
            article_overrides=dict(doc.get("article_overrides", {})),
            notes=doc.get("notes", ""),
        )
    except KeyError as exc:
        raise SchemaError(f"template document missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise SchemaError(f"malformed template document: {exc}") from None


def load_template(path: str | Path) -> Template:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return template_from_dict(doc)


@dataclass(frozen=True)
class PromptDataset:
    """Enumerated prompts of one template plus the count self-check."""

    template: Template
    prompts: tuple[PromptInstance, ...]
    count: int

    def __post_init__(self) -> None:
        if self.count != len(self.prompts):
            raise SchemaError(
                f"dataset self-check failed: header count {self.count} != "
                f"{len(self.prompts)} prompts"
            )

    @property
    def by_id(self) -> dict[str, PromptInstance]:
        return {p.prompt_id: p for p in self.prompts}

    @property
    def n_positions(self) -> int:
        return self.template.n_positions


def generate_dataset(template: Template) -> PromptDataset:
    prompts = tuple(enumerate_prompts(template))
    return PromptDataset(template=template, prompts=prompts, count=count_prompts(template))


def dataset_to_dict(dataset: PromptDataset) -> dict:
    return {
        "schema_id": DATASET_SCHEMA_ID,
        "template": template_to_dict(dataset.template),
        "count": dataset.count,
        "prompts": [
            {
                "prompt_id": p.prompt_id,
                "text": p.text,
                "ground_truth": [[i, o, a] for i, o, a in p.ground_truth],
            }
            for p in dataset.prompts
        ],
    }


def dataset_from_dict(doc: Mapping) -> PromptDataset:
    try:
        if doc["schema_id"] != DATASET_SCHEMA_ID:
            raise SchemaError(f"unexpected dataset schema_id {doc['schema_id']!r}")
        template = template_from_dict(doc["template"])
        prompts = tuple(
            PromptInstance(
                prompt_id=p["prompt_id"],
                text=p["text"],
                ground_truth=tuple((gt[0], gt[1], gt[2]) for gt in p["ground_truth"]),
            )
            for p in doc["prompts"]
        )
        return PromptDataset(template=template, prompts=prompts, count=doc["count"])
    except KeyError as exc:
        raise SchemaError(f"dataset document missing field {exc.args[0]!r}") from None


def load_dataset(path: str | Path) -> PromptDataset:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return dataset_from_dict(doc)
