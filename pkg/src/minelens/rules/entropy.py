import math
from collections import Counter

DEFAULT_ENTROPY_THRESHOLD = 4.33


def shannon_entropy(s: str) -> float:
    """Shannon entropy in bits per symbol of the character distribution of ``s``.

    Symbols are the string's own code points, so the value is bounded by
    ``log2(len(set(s)))``.
    """
    if not s:
        raise ValueError("entropy of an empty string is undefined")
    n = len(s)
    h = 0.0
    for count in Counter(s).values():
        p = count / n
        h -= p * math.log2(p)
    # a single symbol gives -1.0 * log2(1.0) == -0.0
    return h + 0.0
