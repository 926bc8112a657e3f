#!/usr/bin/env python3
"""Convert ComVE (SemEval-2020 task 4) CSVs to the normalized JSONL schema.

Subtask A supplies the sentence pairs (columns id, sent0, sent1) and the
answer file supplies which sentence violates common sense (id, 0-or-1).
Reference explanations from subtask C (id plus up to three referential
explanations) can be joined in; the first explanation is kept.

    convert_comve.py --split test -o comve.jsonl \\
        --data subtaskA_test_data.csv --answers subtaskA_gold_answers.csv \\
        --explanations subtaskC_gold_answers.csv

Output lines follow the normalized schema:
    {"example_id", "split", "fields": {"sentence0", "sentence1"},
     "gold_label" in {"0", "1"}, "human_explanation"}
"""

import argparse
import csv
import json
import sys


def read_rows(path):
    """CSV rows as lists, skipping a header row if the first cell is not
    numeric (the release ships some files with headers and some without)."""
    with open(path, newline="", encoding="utf-8") as source:
        rows = [row for row in csv.reader(source) if row]
    if rows and not rows[0][0].strip().isdigit():
        rows = rows[1:]
    return rows


def convert(data_path, answers_path, explanations_path, split, out, append):
    answers = {row[0].strip(): row[1].strip() for row in read_rows(answers_path)}
    explanations = {}
    if explanations_path:
        for row in read_rows(explanations_path):
            if len(row) >= 2 and row[1].strip():
                explanations[row[0].strip()] = row[1].strip()

    written = 0
    skipped = 0
    mode = "a" if append else "w"
    with open(out, mode, encoding="utf-8") as sink:
        for row in read_rows(data_path):
            example_id = row[0].strip()
            label = answers.get(example_id, "")
            if len(row) < 3 or label not in {"0", "1"}:
                skipped += 1
                continue
            example = {
                "example_id": example_id,
                "split": split,
                "fields": {
                    "sentence0": row[1].strip(),
                    "sentence1": row[2].strip(),
                },
                "gold_label": label,
            }
            if example_id in explanations:
                example["human_explanation"] = explanations[example_id]
            sink.write(json.dumps(example, ensure_ascii=False) + "\n")
            written += 1
    return written, skipped


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", required=True, help="subtask A sentence pairs CSV")
    parser.add_argument("--answers", required=True, help="subtask A answers CSV")
    parser.add_argument("--explanations", help="subtask C reference explanations CSV")
    parser.add_argument("--split", choices=["train", "test"], required=True)
    parser.add_argument("-o", "--out", required=True, help="output JSONL path")
    parser.add_argument("--append", action="store_true",
                        help="append to the output instead of truncating")
    args = parser.parse_args()

    written, skipped = convert(args.data, args.answers, args.explanations,
                               args.split, args.out, args.append)
    print(f"wrote {written} {args.split} examples to {args.out}"
          + (f" (skipped {skipped} unanswered rows)" if skipped else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
