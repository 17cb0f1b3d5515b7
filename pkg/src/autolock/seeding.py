"""Order-independent seed derivation.

Every random stream is derived from the master seed plus a role string and
indices, so results do not depend on evaluation order or worker count.
"""
import hashlib
import random


def derive_seed(*parts) -> int:
    digest = hashlib.blake2b("\x1f".join(map(str, parts)).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_rng(*parts) -> random.Random:
    return random.Random(derive_seed(*parts))
