#!/usr/bin/env python3
"""Convert e-SNLI release CSVs to the normalized JSONL schema.

The public e-SNLI release ships one CSV per split (the train split in two
parts) with columns including pairID, gold_label, Sentence1, Sentence2 and
Explanation_1. Each invocation converts one split:

    convert_esnli.py --split test -o esnli.jsonl esnli_test.csv
    convert_esnli.py --split train -o esnli.jsonl --append \\
        esnli_train_1.csv esnli_train_2.csv

Output lines follow the normalized schema:
    {"example_id", "split", "fields": {"text", "hypothesis"},
     "gold_label", "human_explanation"}
"""

import argparse
import csv
import json
import sys

LABELS = {"entailment", "neutral", "contradiction"}


def convert(paths, split, out, append):
    written = 0
    skipped = 0
    mode = "a" if append else "w"
    with open(out, mode, encoding="utf-8") as sink:
        for path in paths:
            with open(path, newline="", encoding="utf-8") as source:
                reader = csv.DictReader(source)
                for row in reader:
                    label = (row.get("gold_label") or "").strip()
                    if label not in LABELS:
                        skipped += 1
                        continue
                    example = {
                        "example_id": row["pairID"].strip(),
                        "split": split,
                        "fields": {
                            "text": row["Sentence1"].strip(),
                            "hypothesis": row["Sentence2"].strip(),
                        },
                        "gold_label": label,
                    }
                    explanation = (row.get("Explanation_1") or "").strip()
                    if explanation:
                        example["human_explanation"] = explanation
                    sink.write(json.dumps(example, ensure_ascii=False) + "\n")
                    written += 1
    return written, skipped


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csvs", nargs="+", help="e-SNLI release CSV file(s)")
    parser.add_argument("--split", choices=["train", "test"], required=True)
    parser.add_argument("-o", "--out", required=True, help="output JSONL path")
    parser.add_argument("--append", action="store_true",
                        help="append to the output instead of truncating")
    args = parser.parse_args()

    written, skipped = convert(args.csvs, args.split, args.out, args.append)
    print(f"wrote {written} {args.split} examples to {args.out}"
          + (f" (skipped {skipped} unlabeled rows)" if skipped else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
