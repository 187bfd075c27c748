"""Alpaca-style instruction records: loading, deterministic splits, manifests.

A dataset file is a UTF-8 JSON document holding one top-level array of
objects with string fields ``instruction``, ``input`` (optional) and
``output``. Records get ids 0..N-1 in file order, so ids are stable
across reloads of the same file.

Splitting shuffles ids with a Fisher-Yates pass driven by Python's
``random.Random`` (Mersenne Twister), which produces the same permutation
for the same seed on every platform. Part sizes are train =
floor(N*a/(a+b+c)), validation = floor(N*b/(a+b+c)), and the remainder
goes to the test set. Example: 4,905 records at 8:1:1 split as
(3924, 490, 491); note that no floor or rounding of 4905/10 can produce a
405-record test part, so a test size of 405 for that count is not
derivable from the ratio and is not reproduced here.
"""

from __future__ import annotations

import json
import math
import random
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path


class DatasetError(Exception):
    """Raised for unreadable, malformed, or too-small datasets."""


@dataclass(frozen=True)
class InstructionExample:
    id: int
    instruction: str
    input: str
    output: str


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[InstructionExample, ...]
    validation: tuple[InstructionExample, ...]
    test: tuple[InstructionExample, ...]
    seed: int
    ratios: tuple[int, int, int]


def load_instruction_dataset(path: str | Path) -> list[InstructionExample]:
    """Load instruction records from a JSON array file, ids in file order."""
    p = Path(path)
    if not p.is_file():
        raise DatasetError(f"dataset file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise DatasetError(f"dataset file unreadable: {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"dataset file is not valid JSON: {p}: {exc}") from exc
    if not isinstance(data, list):
        raise DatasetError(f"dataset must be a top-level JSON array, got {type(data).__name__}")

    examples: list[InstructionExample] = []
    for index, record in enumerate(data):
        if not isinstance(record, dict):
            raise DatasetError(f"record {index}: expected an object, got {type(record).__name__}")
        instruction = record.get("instruction")
        output = record.get("output")
        raw_input = record.get("input", "")
        if not isinstance(instruction, str) or not instruction.strip():
            raise DatasetError(f"record {index}: missing or empty 'instruction'")
        if not isinstance(output, str) or not output.strip():
            raise DatasetError(f"record {index}: missing or empty 'output'")
        if not isinstance(raw_input, str):
            raise DatasetError(f"record {index}: 'input' must be a string")
        examples.append(
            InstructionExample(id=index, instruction=instruction, input=raw_input, output=output)
        )
    return examples


def _shuffled_order(n: int, seed: int) -> list[int]:
    order = list(range(n))
    random.Random(seed).shuffle(order)
    return order


def split_dataset(
    examples: Sequence[InstructionExample],
    ratios: tuple[int, int, int] = (8, 1, 1),
    seed: int = 0,
) -> DatasetSplit:
    """Deterministic three-way partition by seeded shuffle.

    The shuffled id sequence is cut into consecutive blocks: train first,
    then validation, then test (which absorbs the rounding remainder).
    """
    a, b, c = ratios
    if a <= 0 or b <= 0 or c <= 0:
        raise DatasetError(f"ratio components must be positive, got {ratios}")
    n = len(examples)
    parts = a + b + c
    if n < parts:
        raise DatasetError(f"dataset of {n} records is too small for ratios {a}:{b}:{c}")

    order = _shuffled_order(n, seed)
    train_size = n * a // parts
    validation_size = n * b // parts

    train_ids = order[:train_size]
    validation_ids = order[train_size : train_size + validation_size]
    test_ids = order[train_size + validation_size :]

    return DatasetSplit(
        train=tuple(examples[i] for i in train_ids),
        validation=tuple(examples[i] for i in validation_ids),
        test=tuple(examples[i] for i in test_ids),
        seed=seed,
        ratios=(a, b, c),
    )


def holdout_split(
    examples: Sequence[InstructionExample],
    fraction: float,
    seed: int = 0,
) -> tuple[list[InstructionExample], list[InstructionExample]]:
    """Reserve floor(N * fraction) shuffled records as a held-out set.

    The held-out block is the tail of the shuffled order, mirroring the
    test block position in :func:`split_dataset`.
    """
    if not 0.0 <= fraction <= 1.0:
        raise DatasetError(f"holdout fraction must lie in [0, 1], got {fraction}")
    n = len(examples)
    heldout_size = math.floor(n * fraction)
    order = _shuffled_order(n, seed)
    rest_ids = order[: n - heldout_size]
    heldout_ids = order[n - heldout_size :]
    return [examples[i] for i in rest_ids], [examples[i] for i in heldout_ids]


def write_split_manifests(split: DatasetSplit, out_dir: str | Path) -> None:
    """Write train.ids / validation.ids / test.ids plus metadata.json.

    Output is byte-stable: same split, same bytes.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    parts = {"train": split.train, "validation": split.validation, "test": split.test}
    for name, part in parts.items():
        lines = "".join(f"{ex.id}\n" for ex in part)
        (out / f"{name}.ids").write_text(lines, encoding="utf-8")
    metadata = {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "counts": {name: len(part) for name, part in parts.items()},
    }
    (out / "metadata.json").write_text(
        json.dumps(metadata, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
