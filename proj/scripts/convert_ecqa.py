#!/usr/bin/env python3
"""Convert CommonsenseQA questions plus ECQA explanations to normalized JSONL.

Questions come from the CommonsenseQA release JSONL (one object per line with
"id", "question": {"stem", "choices": [{"label": "A".."E", "text"}]} and
"answerKey"). Free-flow ECQA explanations are joined in from an optional
JSONL file mapping {"id", "explanation"}; rebuild that file from the ECQA
annotation release, which keys explanations by the same question ids.

    convert_ecqa.py --split test -o ecqa.jsonl \\
        --questions cqa_test.jsonl --explanations ecqa_explanations.jsonl

Output lines follow the normalized schema:
    {"example_id", "split",
     "fields": {"question", "option1".."option5"},
     "gold_label" in {"1".."5"}, "human_explanation"}
"""

import argparse
import json
import sys

CHOICE_LABELS = ["A", "B", "C", "D", "E"]


def load_explanations(path):
    explanations = {}
    if not path:
        return explanations
    with open(path, encoding="utf-8") as source:
        for line in source:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            explanations[row["id"]] = row["explanation"].strip()
    return explanations


def convert(questions_path, explanations, split, out, append):
    written = 0
    skipped = 0
    mode = "a" if append else "w"
    with open(out, mode, encoding="utf-8") as sink:
        with open(questions_path, encoding="utf-8") as source:
            for line in source:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                answer = row.get("answerKey", "").strip()
                if answer not in CHOICE_LABELS:
                    skipped += 1
                    continue
                by_label = {c["label"]: c["text"].strip()
                            for c in row["question"]["choices"]}
                if sorted(by_label) != CHOICE_LABELS:
                    skipped += 1
                    continue
                fields = {"question": row["question"]["stem"].strip()}
                for i, label in enumerate(CHOICE_LABELS, start=1):
                    fields[f"option{i}"] = by_label[label]
                example = {
                    "example_id": row["id"],
                    "split": split,
                    "fields": fields,
                    "gold_label": str(CHOICE_LABELS.index(answer) + 1),
                }
                explanation = explanations.get(row["id"], "")
                if explanation:
                    example["human_explanation"] = explanation
                sink.write(json.dumps(example, ensure_ascii=False) + "\n")
                written += 1
    return written, skipped


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--questions", required=True,
                        help="CommonsenseQA-format questions JSONL")
    parser.add_argument("--explanations",
                        help="JSONL mapping question id to free-flow explanation")
    parser.add_argument("--split", choices=["train", "test"], required=True)
    parser.add_argument("-o", "--out", required=True, help="output JSONL path")
    parser.add_argument("--append", action="store_true",
                        help="append to the output instead of truncating")
    args = parser.parse_args()

    explanations = load_explanations(args.explanations)
    written, skipped = convert(args.questions, explanations, args.split,
                               args.out, args.append)
    print(f"wrote {written} {args.split} examples to {args.out}"
          + (f" (skipped {skipped} incomplete rows)" if skipped else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
