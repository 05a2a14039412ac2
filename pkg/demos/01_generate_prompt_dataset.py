#!/usr/bin/env python3
"""Walk through prompt-dataset generation from the shipped templates.

Loads the 24-label pair template, shows the closed-form count against the
enumerated length, prints a few rendered prompts, and demonstrates the
three uniqueness modes on a small colored template.
"""

from pathlib import Path

from tiam import (
    AttributeSet,
    ObjectSet,
    Template,
    count_prompts,
    enumerate_prompts,
    load_template,
)

TEMPLATES = Path(__file__).resolve().parents[1] / "src" / "tiam" / "data" / "templates"


def main() -> None:
    pairs = load_template(TEMPLATES / "coco_pairs_24.json")
    prompts = enumerate_prompts(pairs)
    print(f"{pairs.name}: closed-form count {count_prompts(pairs)}, "
          f"enumerated {len(prompts)}")
    for p in prompts[:3]:
        print(f"  {p.prompt_id}  {p.text}")
    print("  ...")

    colored = load_template(TEMPLATES / "colored_2.json")
    print(f"\n{colored.name}: {count_prompts(colored)} prompts, e.g.")
    for p in enumerate_prompts(colored)[:3]:
        print(f"  {p.text}")

    print("\nuniqueness modes on a 3-object x 2-color pair template:")
    for mode in ("STRICT", "PAIRWISE", "FREE"):
        t = Template(
            name=f"demo-{mode}",
            n_positions=2,
            text_pattern="a photo of det(1) attr(1) obj(1) and det(2) attr(2) obj(2)",
            object_sets=(ObjectSet(1, ("cat", "car", "cow")), ObjectSet(2, ("cat", "car", "cow"))),
            attribute_sets=(AttributeSet(1, ("red", "blue")), AttributeSet(2, ("red", "blue"))),
            uniqueness_mode=mode,
        )
        print(f"  {mode:8s} -> {count_prompts(t):3d} prompts")
    print("\nSTRICT forbids repeating objects or colors; PAIRWISE only forbids")
    print("repeating the same colored object; FREE allows everything.")


if __name__ == "__main__":
    main()
