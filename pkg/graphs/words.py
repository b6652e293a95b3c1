"""
Word model used for all space accounting
One word is one 64-bit machine integer
"""

import dataclasses
from typing import Any

BITS_PER_WORD = 64


def bits_to_words(bit_count: int) -> int:
    """Words needed to hold a packed bit string"""
    return -(-bit_count // BITS_PER_WORD)


def count_words(obj: Any) -> int:
    """Count the words a value occupies when serialized"""
    if obj is None:
        return 0
    if isinstance(obj, (bool, int, float)):
        return 1
    if isinstance(obj, str):
        return -(-len(obj) // 8)
    if hasattr(obj, 'word_size'):
        return obj.word_size()
    if isinstance(obj, dict):
        return sum(count_words(k) + count_words(v) for k, v in obj.items())
    if isinstance(obj, (tuple, list, set, frozenset)):
        return sum(count_words(item) for item in obj)
    if dataclasses.is_dataclass(obj):
        return sum(count_words(getattr(obj, f.name)) for f in dataclasses.fields(obj))
    raise TypeError(f"Cannot count words of {type(obj).__name__}")
