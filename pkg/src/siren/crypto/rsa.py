"""Weather-seeded RSA without padding.

Each prime comes from one weather observation: a random city is drawn,
its daily temperature spread (kelvin) is scaled by a multiplier ``x`` and
rounded, and the nearest prime to that value is taken. Two such primes
make a textbook RSA key.

The moduli this produces are tiny (tens of bits). This mirrors the
published scheme and is suitable for stalling a honeypot visitor, not for
protecting real data.
"""

from __future__ import annotations

import datetime as dt
import math
import os
import random
from dataclasses import dataclass
from pathlib import Path

from siren.crypto.primes import nearest_prime
from siren.crypto.weather import EntropyProvider
from siren.errors import EntropyExhausted, KeyGenerationError, MessageTooLarge

DEFAULT_X = 10_000
MAX_REDRAWS = 16
PREFERRED_E = 65537
KEY_FILE_VERSION = 1


@dataclass(frozen=True)
class RsaKeyPair:
    p: int
    q: int
    n: int
    phi: int
    e: int
    d: int
    multiplier_x: int

    @property
    def public(self) -> tuple[int, int]:
        return self.e, self.n


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``g = gcd(a, b) = s*a + t*b`` (iterative)."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        k = old_r // r
        old_r, r = r, old_r - k * r
        old_s, s = s, old_s - k * s
        old_t, t = t, old_t - k * t
    return old_r, old_s, old_t


def modinv(a: int, m: int) -> int:
    g, s, _ = egcd(a % m, m)
    if g != 1:
        raise ValueError(f"{a} has no inverse modulo {m}")
    return s % m


def modexp(base: int, exponent: int, modulus: int) -> int:
    """Left-to-right square-and-multiply."""
    if modulus == 1:
        return 0
    result = 1
    base %= modulus
    for bit in bin(exponent)[2:]:
        result = result * result % modulus
        if bit == "1":
            result = result * base % modulus
    return result


def choose_public_exponent(phi: int) -> int:
    if PREFERRED_E < phi and math.gcd(PREFERRED_E, phi) == 1:
        return PREFERRED_E
    e = 3
    while math.gcd(e, phi) != 1:
        e += 1
    return e


def draw_multiplier(rng: random.Random) -> int:
    return rng.randrange(DEFAULT_X, 10 * DEFAULT_X)


def derive_prime(provider: EntropyProvider, rng: random.Random, x: int) -> int:
    """Nearest prime to ``round(delta_T * x)`` for a uniformly drawn city."""
    if x < 1:
        raise ValueError("multiplier x must be at least 1")
    for _ in range(MAX_REDRAWS):
        obs = provider.observe(rng.randint(1, provider.city_count))
        value = math.floor(obs.delta * x + 0.5)
        if value > 0:
            return nearest_prime(value)
    raise EntropyExhausted(f"{MAX_REDRAWS} consecutive draws had zero temperature spread")


def keypair_from_primes(p: int, q: int, x: int = 0) -> RsaKeyPair:
    if p == q:
        raise KeyGenerationError("p and q must differ")
    phi = (p - 1) * (q - 1)
    if phi <= 3:
        raise KeyGenerationError(f"totient {phi} too small for a key")
    e = choose_public_exponent(phi)
    if e >= phi:
        raise KeyGenerationError(f"no public exponent below totient {phi}")
    d = modinv(e, phi)
    return RsaKeyPair(p, q, p * q, phi, e, d, x)


def generate_keypair(provider: EntropyProvider, rng: random.Random, x: int | None = None) -> RsaKeyPair:
    """Two independent weather-derived primes -> key pair.

    ``x=None`` draws the multiplier for this key from ``rng``; pass an
    integer to pin it.
    """
    if x is None:
        x = draw_multiplier(rng)
    p = derive_prime(provider, rng, x)
    for _ in range(MAX_REDRAWS):
        q = derive_prime(provider, rng, x)
        if q != p:
            break
    else:
        raise KeyGenerationError("could not draw two distinct primes")
    return keypair_from_primes(p, q, x)


def encrypt(m: int, e: int, n: int) -> int:
    if not 0 <= m < n:
        raise MessageTooLarge(f"message {m} outside [0, {n})")
    return modexp(m, e, n)


def decrypt(c: int, d: int, n: int) -> int:
    if not 0 <= c < n:
        raise MessageTooLarge(f"ciphertext {c} outside [0, {n})")
    return modexp(c, d, n)


def block_sizes(n: int) -> tuple[int, int]:
    """(plaintext bytes per block, ciphertext bytes per block) for modulus ``n``."""
    if n <= 256:
        raise ValueError("modulus must exceed 256 to carry a byte per block")
    return (n.bit_length() - 1) // 8, (n.bit_length() + 7) // 8


def encrypt_blob(data: bytes, key: RsaKeyPair) -> list[int]:
    """Encrypt bytes block by block.

    Full blocks carry ``k`` plaintext bytes. The final block always holds the
    remaining ``0..k-1`` bytes behind a 0x01 marker byte, which is how the
    decoder recovers the exact length.
    """
    if not data:
        return []
    k, _ = block_sizes(key.n)
    cut = len(data) - len(data) % k
    blocks = [int.from_bytes(data[i:i + k], "big") for i in range(0, cut, k)]
    blocks.append(int.from_bytes(b"\x01" + data[cut:], "big"))
    return [encrypt(m, key.e, key.n) for m in blocks]


def decrypt_blob(blocks: list[int], key: RsaKeyPair) -> bytes:
    if not blocks:
        return b""
    k, _ = block_sizes(key.n)
    plain = [decrypt(c, key.d, key.n) for c in blocks]
    out = b"".join(m.to_bytes(k, "big") for m in plain[:-1])
    tail = plain[-1].to_bytes((plain[-1].bit_length() + 7) // 8, "big")
    if not tail.startswith(b"\x01"):
        raise ValueError("final block lacks the length marker; wrong key?")
    return out + tail[1:]


def serialize_blocks(blocks: list[int], n: int) -> bytes:
    _, width = block_sizes(n)
    return b"".join(c.to_bytes(width, "big") for c in blocks)


def deserialize_blocks(data: bytes, n: int) -> list[int]:
    _, width = block_sizes(n)
    if len(data) % width:
        raise ValueError("ciphertext length is not a multiple of the block width")
    return [int.from_bytes(data[i:i + width], "big") for i in range(0, len(data), width)]


def render_hex(blocks: list[int], n: int, per_line: int = 8) -> str:
    """Hex dump of ciphertext blocks, fixed width, ``per_line`` blocks per line."""
    _, width = block_sizes(n)
    cells = [format(c, f"0{2 * width}x") for c in blocks]
    return "\n".join(" ".join(cells[i:i + per_line]) for i in range(0, len(cells), per_line))


def write_key_file(key: RsaKeyPair, path: str | Path, created: dt.datetime | None = None) -> None:
    """Text key file (private material); created with mode 0600."""
    created = created or dt.datetime.now(dt.timezone.utc)
    lines = [
        "# siren weather-seeded RSA key (private, unpadded textbook RSA)",
        f"version={KEY_FILE_VERSION}",
        f"p={key.p}", f"q={key.q}", f"n={key.n}", f"e={key.e}", f"d={key.d}",
        f"x={key.multiplier_x}",
        f"created={created.isoformat()}",
    ]
    path = Path(path)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    os.chmod(path, 0o600)


def read_key_file(path: str | Path) -> RsaKeyPair:
    fields: dict[str, str] = {}
    for line in Path(path).read_text(encoding="ascii").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            k, _, v = line.partition("=")
            fields[k.strip()] = v.strip()
    if fields.get("version") != str(KEY_FILE_VERSION):
        raise KeyGenerationError(f"unsupported key file version {fields.get('version')!r}")
    try:
        p, q, n, e, d, x = (int(fields[k]) for k in ("p", "q", "n", "e", "d", "x"))
    except (KeyError, ValueError) as exc:
        raise KeyGenerationError(f"malformed key file: {exc}") from exc
    if n != p * q:
        raise KeyGenerationError("key file is inconsistent: n != p*q")
    phi = (p - 1) * (q - 1)
    if e * d % phi != 1:
        raise KeyGenerationError("key file is inconsistent: e*d != 1 mod phi")
    return RsaKeyPair(p, q, n, phi, e, d, x)
