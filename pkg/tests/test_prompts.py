"""Prompt engine: rendering, enumeration, counting, template documents."""

from __future__ import annotations

import itertools
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiam import (
    AssignmentError,
    AttributeSet,
    InfeasibleTemplateError,
    ObjectSet,
    SchemaError,
    Template,
    TemplateError,
    count_prompts,
    enumerate_prompts,
    load_template,
    render_prompt,
)
from tiam.prompts import (
    count_couple_assignments,
    dataset_from_dict,
    dataset_to_dict,
    generate_dataset,
    template_from_dict,
    template_to_dict,
)

TEMPLATE_DIR = "src/tiam/data/templates"


def pair_template(labels, attrs=(), mode="STRICT", name="pairs"):
    pattern = (
        "a photo of det(1) attr(1) obj(1) and det(2) attr(2) obj(2)"
        if attrs
        else "a photo of det(1) obj(1) and det(2) obj(2)"
    )
    return Template(
        name=name,
        n_positions=2,
        text_pattern=pattern,
        object_sets=(ObjectSet(1, tuple(labels)), ObjectSet(2, tuple(labels))),
        attribute_sets=(AttributeSet(1, tuple(attrs)), AttributeSet(2, tuple(attrs))),
        uniqueness_mode=mode,
    )


def brute_force_count(template: Template) -> int:
    """Independent oracle: full product filtered by the mode's constraint."""
    candidates = [template.slot_candidates(i) for i in range(1, template.n_positions + 1)]
    total = 0
    for combo in itertools.product(*candidates):
        objs = [o for o, _ in combo]
        attrs = [a for _, a in combo if a is not None]
        if template.uniqueness_mode == "STRICT":
            ok = len(set(objs)) == len(objs) and len(set(attrs)) == len(attrs)
        elif template.uniqueness_mode == "PAIRWISE":
            ok = len(set(combo)) == len(combo)
        else:
            ok = True
        total += ok
    return total


class TestRendering:
    def test_two_object_prompt(self):
        t = pair_template(["lion", "bear"])
        inst = render_prompt(t, [("lion", None), ("bear", None)])
        assert inst.text == "a photo of a lion and a bear"
        assert inst.ground_truth == ((1, "lion", None), (2, "bear", None))

    def test_vowel_article(self):
        t = Template(
            name="one",
            n_positions=1,
            text_pattern="a photo of det(1) obj(1)",
            object_sets=(ObjectSet(1, ("elephant", "lion")),),
            attribute_sets=(AttributeSet(1),),
        )
        assert render_prompt(t, [("elephant", None)]).text == "a photo of an elephant"
        assert render_prompt(t, [("lion", None)]).text == "a photo of a lion"

    def test_attribute_drives_article(self):
        t = pair_template(["cat", "car", "owl"], ["blue", "yellow", "orange"])
        inst = render_prompt(t, [("cat", "blue"), ("car", "yellow")])
        assert inst.text == "a photo of a blue cat and a yellow car"
        # article follows the attribute, not the object
        inst = render_prompt(t, [("owl", "orange"), ("cat", "blue")])
        assert inst.text == "a photo of an orange owl and a blue cat"

    def test_article_override(self):
        t = Template(
            name="override",
            n_positions=1,
            text_pattern="a photo of det(1) obj(1)",
            object_sets=(ObjectSet(1, ("hour",)),),
            attribute_sets=(AttributeSet(1),),
            article_overrides={"hour": "an"},
        )
        assert render_prompt(t, [("hour", None)]).text == "a photo of an hour"

    def test_multiword_label_article(self):
        t = Template(
            name="multiword",
            n_positions=1,
            text_pattern="a photo of det(1) obj(1)",
            object_sets=(ObjectSet(1, ("fire hydrant",)),),
            attribute_sets=(AttributeSet(1),),
        )
        assert render_prompt(t, [("fire hydrant", None)]).text == "a photo of a fire hydrant"

    def test_rejected_assignments(self):
        t = pair_template(["cat", "car"], ["blue", "yellow"])
        with pytest.raises(AssignmentError):
            render_prompt(t, [("cat", "blue")])  # wrong length
        with pytest.raises(AssignmentError):
            render_prompt(t, [("dog", "blue"), ("car", "yellow")])  # unknown object
        with pytest.raises(AssignmentError):
            render_prompt(t, [("cat", "red"), ("car", "yellow")])  # unknown attribute
        with pytest.raises(AssignmentError):
            render_prompt(t, [("cat", "blue"), ("cat", "yellow")])  # STRICT repeat
        with pytest.raises(AssignmentError):
            render_prompt(t, [("cat", "blue"), ("car", "blue")])  # STRICT attr repeat

    def test_pairwise_allows_object_repeat(self):
        t = pair_template(["cat", "car"], ["blue", "yellow"], mode="PAIRWISE")
        inst = render_prompt(t, [("cat", "blue"), ("cat", "yellow")])
        assert inst.text == "a photo of a blue cat and a yellow cat"
        with pytest.raises(AssignmentError):
            render_prompt(t, [("cat", "blue"), ("cat", "blue")])

    def test_prompt_id_stable_and_distinct(self):
        t = pair_template(["lion", "bear"])
        a = render_prompt(t, [("lion", None), ("bear", None)])
        b = render_prompt(t, [("lion", None), ("bear", None)])
        c = render_prompt(t, [("bear", None), ("lion", None)])
        assert a.prompt_id == b.prompt_id
        assert a.prompt_id != c.prompt_id


class TestTemplateValidation:
    def test_placeholder_out_of_range(self):
        with pytest.raises(TemplateError):
            Template(
                name="bad",
                n_positions=1,
                text_pattern="det(2) obj(1)",
                object_sets=(ObjectSet(1, ("cat",)),),
                attribute_sets=(AttributeSet(1),),
            )

    def test_missing_obj_placeholder(self):
        with pytest.raises(TemplateError):
            Template(
                name="bad",
                n_positions=2,
                text_pattern="a photo of obj(1)",
                object_sets=(ObjectSet(1, ("cat",)), ObjectSet(2, ("dog",))),
                attribute_sets=(AttributeSet(1), AttributeSet(2)),
            )

    def test_attr_placeholder_on_bare_slot(self):
        with pytest.raises(TemplateError):
            Template(
                name="bad",
                n_positions=1,
                text_pattern="attr(1) obj(1)",
                object_sets=(ObjectSet(1, ("cat",)),),
                attribute_sets=(AttributeSet(1),),
            )

    def test_duplicate_labels_rejected(self):
        with pytest.raises(TemplateError):
            ObjectSet(1, ("cat", "cat"))
        with pytest.raises(TemplateError):
            AttributeSet(1, ("blue", "blue"))


class TestCounting:
    def test_strict_24_labels_552(self):
        t = load_template(f"{TEMPLATE_DIR}/coco_pairs_24.json")
        assert count_prompts(t) == 552
        assert len(enumerate_prompts(t)) == 552

    def test_strict_one_slot_30(self):
        t = Template(
            name="one",
            n_positions=1,
            text_pattern="a photo of det(1) attr(1) obj(1)",
            object_sets=(ObjectSet(1, tuple("abcde")),),
            attribute_sets=(AttributeSet(1, tuple("uvwxyz")),),
        )
        assert count_prompts(t) == 30

    def test_strict_5x6_pairs_600(self):
        t = pair_template(list("abcde"), list("uvwxyz"))
        assert count_prompts(t) == 600 == brute_force_count(t)
        assert math.perm(5, 2) * math.perm(6, 2) == 600

    def test_free_product(self):
        t = pair_template(["a", "b", "c"], ["u", "v"], mode="FREE")
        assert count_prompts(t) == 36 == brute_force_count(t)

    def test_strict_infeasible(self):
        t = pair_template(["only"])
        with pytest.raises(InfeasibleTemplateError):
            count_prompts(t)
        t = pair_template(["a", "b"], ["one"])
        with pytest.raises(InfeasibleTemplateError):
            count_prompts(t)

    def test_strict_unshared_sets_fall_back(self):
        t = Template(
            name="unshared",
            n_positions=2,
            text_pattern="det(1) obj(1) and det(2) obj(2)",
            object_sets=(ObjectSet(1, ("a", "b", "c")), ObjectSet(2, ("b", "c", "d"))),
            attribute_sets=(AttributeSet(1), AttributeSet(2)),
        )
        assert count_prompts(t) == brute_force_count(t) == len(enumerate_prompts(t))

    def test_pairwise_shared_couples_tree(self):
        u1 = [("truck", "blue"), ("truck", "red"), ("bike", "blue"), ("bike", "red"),
              ("car", "red"), ("car", "blue")]
        u2 = [("banana", "green"), ("banana", "purple"), ("cherry", "green"),
              ("cherry", "purple"), ("apple", "purple"), ("apple", "green")]
        u3 = [("tiger", "green"), ("tiger", "blue"), ("bear", "green"),
              ("bear", "blue"), ("apple", "yellow"), ("car", "blue"), ("apple", "green")]
        brute = sum(
            1 for combo in itertools.product(u1, u2, u3) if len(set(combo)) == 3
        )
        assert count_couple_assignments([u1, u2, u3]) == brute == 240

    @pytest.mark.parametrize("mode", ["STRICT", "PAIRWISE", "FREE"])
    def test_count_matches_enumeration_small_sweep(self, mode):
        labels = ["cat", "car", "dog", "bus"]
        attrs = ["red", "blue", "green"]
        for n_labels in range(2, 5):
            for n_attrs in range(0, 4):
                t = pair_template(labels[:n_labels], attrs[:n_attrs], mode=mode)
                if mode == "STRICT" and n_attrs == 1:
                    with pytest.raises(InfeasibleTemplateError):
                        count_prompts(t)
                    assert len(enumerate_prompts(t)) == 0
                    continue
                assert count_prompts(t) == len(enumerate_prompts(t)) == brute_force_count(t)


class TestEnumeration:
    def test_deterministic_and_unique(self):
        t = pair_template(list("abcd"), ["red", "blue"], mode="PAIRWISE")
        first = enumerate_prompts(t)
        second = enumerate_prompts(t)
        assert [p.text for p in first] == [p.text for p in second]
        assert len({p.prompt_id for p in first}) == len(first)
        assert len({p.text for p in first}) == len(first)

    def test_lexicographic_order(self):
        t = pair_template(["bat", "cow"], mode="FREE")
        texts = [p.text for p in enumerate_prompts(t)]
        assert texts == [
            "a photo of a bat and a bat",
            "a photo of a bat and a cow",
            "a photo of a cow and a bat",
            "a photo of a cow and a cow",
        ]

    def test_strict_assignments_distinct(self):
        t = pair_template(list("abcde"), ["u", "v", "w"])
        for p in enumerate_prompts(t):
            objs = [o for _, o, _ in p.ground_truth]
            attrs = [a for _, _, a in p.ground_truth]
            assert len(set(objs)) == len(objs)
            assert len(set(attrs)) == len(attrs)

    def test_pairwise_no_repeated_couple(self):
        t = pair_template(list("abc"), ["u", "v"], mode="PAIRWISE")
        for p in enumerate_prompts(t):
            couples = [(o, a) for _, o, a in p.ground_truth]
            assert len(set(couples)) == len(couples)

    @given(
        n_labels=st.integers(1, 4),
        n_attrs=st.integers(0, 3),
        mode=st.sampled_from(["STRICT", "PAIRWISE", "FREE"]),
    )
    @settings(max_examples=40, deadline=None)
    def test_count_equals_enumeration_property(self, n_labels, n_attrs, mode):
        labels = [f"l{i}" for i in range(n_labels)]
        attrs = [f"a{i}" for i in range(n_attrs)]
        t = pair_template(labels, attrs, mode=mode)
        if mode == "STRICT" and (n_labels < 2 or 0 < n_attrs < 2):
            with pytest.raises(InfeasibleTemplateError):
                count_prompts(t)
            assert len(enumerate_prompts(t)) == 0
        else:
            assert count_prompts(t) == len(enumerate_prompts(t))


class TestDocuments:
    def test_template_round_trip(self):
        t = pair_template(list("abc"), ["u", "v"], mode="PAIRWISE")
        assert template_from_dict(template_to_dict(t)) == t

    def test_dataset_round_trip_and_header(self):
        t = pair_template(["cat", "dog", "cow"])
        ds = generate_dataset(t)
        doc = dataset_to_dict(ds)
        assert doc["count"] == len(doc["prompts"]) == 6
        restored = dataset_from_dict(doc)
        assert restored.prompts == ds.prompts

    def test_dataset_header_mismatch_rejected(self):
        t = pair_template(["cat", "dog"])
        doc = dataset_to_dict(generate_dataset(t))
        doc["count"] += 1
        with pytest.raises(SchemaError):
            dataset_from_dict(doc)

    def test_template_file_errors(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("not json", encoding="utf-8")
        with pytest.raises(SchemaError):
            load_template(path)
        path.write_text(json.dumps({"name": "x"}), encoding="utf-8")
        with pytest.raises(SchemaError):
            load_template(path)

    def test_shipped_fixtures_load(self):
        for name, expected in [
            ("coco_pairs_24.json", 552),
            ("semantic_pairs_28.json", 28 * 27),
            ("objects_1.json", 5),
            ("objects_2.json", 20),
            ("objects_3.json", 60),
            ("objects_4.json", 120),
            ("colored_1.json", 30),
            ("colored_2.json", 600),
        ]:
            t = load_template(f"{TEMPLATE_DIR}/{name}")
            assert count_prompts(t) == expected, name
