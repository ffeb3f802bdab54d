"""Secure transfer of offloaded task data and its cycle-cost model.

The protocol is KeyGen / Enc / Dec / Hash / Verify. Enc wraps a fresh session
key with textbook RSA (PKCS#1 v1.5-style type-2 padding) and encrypts the body
with a SHA-256 counter-mode keystream; Hash is MD5 over the plaintext. This is a
working round trip at desk scale, not hardened cryptography.

Simulation costs never depend on how fast this code runs: they come from
:func:`overhead`, which charges per-byte cycle counts on the two endpoints.
"""

from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass

from .errors import InvalidArgument, MalformedEnvelope
from .topology import Node, Task

SECURITY_LEVELS = (512, 1024, 2048)
PUBLIC_EXPONENT = 65537
SESSION_KEY_BYTES = 32
NONCE_BYTES = 16
DIGEST_BYTES = hashlib.md5().digest_size


@dataclass(frozen=True)
class SecurityParams:
    enc_cycles_per_byte: float = 40.0
    dec_cycles_per_byte: float = 40.0
    hash_cycles_per_byte: float = 7.0

    def __post_init__(self):
        for name in ("enc_cycles_per_byte", "dec_cycles_per_byte", "hash_cycles_per_byte"):
            if getattr(self, name) < 0:
                raise InvalidArgument(f"{name} must be non-negative")


def overhead(task: Task, source: Node, target: Node, params: SecurityParams) -> tuple[float, float]:
    """Security delay (s) and energy (J) for moving ``task`` from ``source`` to ``target``.

    Encryption plus hashing runs on the source, decryption plus hashing on the
    target; each side pays its own frequency and per-cycle energy.
    """
    if source.id == target.id:
        raise InvalidArgument("security overhead applies only to offloaded tasks")
    n = task.data_bytes
    send_cycles = (params.enc_cycles_per_byte + params.hash_cycles_per_byte) * n
    recv_cycles = (params.dec_cycles_per_byte + params.hash_cycles_per_byte) * n
    t_sec = send_cycles / source.frequency + recv_cycles / target.frequency
    e_sec = source.energy_coeff * send_cycles + target.energy_coeff * recv_cycles
    return t_sec, e_sec


# --- key generation -------------------------------------------------------

_SMALL_PRIMES = [p for p in range(3, 2000, 2) if all(p % q for q in range(3, int(p ** 0.5) + 1, 2))]


def _probably_prime(n: int, rng: random.Random, rounds: int = 32) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng: random.Random) -> int:
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        if candidate % PUBLIC_EXPONENT != 1 and _probably_prime(candidate, rng):
            return candidate


@dataclass(frozen=True)
class PublicKey:
    n: int
    e: int

    @property
    def size_bytes(self) -> int:
        return (self.n.bit_length() + 7) // 8


@dataclass(frozen=True, repr=False)
class SecretKey:
    n: int
    d: int

    @property
    def size_bytes(self) -> int:
        return (self.n.bit_length() + 7) // 8

    def __repr__(self):
        return f"SecretKey(n=<{self.n.bit_length()} bits>)"


def keygen(security_level: int = 512, seed=None) -> tuple[PublicKey, SecretKey]:
    """RSA keypair with a ``security_level``-bit modulus; deterministic for a given seed."""
    if security_level not in SECURITY_LEVELS:
        raise InvalidArgument(f"unsupported security level {security_level}; use one of {SECURITY_LEVELS}")
    rng = random.Random(seed) if seed is not None else random.SystemRandom()
    half = security_level // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(security_level - half, rng)
        n = p * q
        if p != q and n.bit_length() == security_level:
            break
    d = pow(PUBLIC_EXPONENT, -1, (p - 1) * (q - 1))
    return PublicKey(n, PUBLIC_EXPONENT), SecretKey(n, d)


# --- seal / open -----------------------------------------------------------

@dataclass(frozen=True)
class SecureEnvelope:
    ciphertext: bytes
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != DIGEST_BYTES:
            raise MalformedEnvelope(f"digest must be {DIGEST_BYTES} bytes")


def hash_message(message: bytes) -> bytes:
    return hashlib.md5(message, usedforsecurity=False).digest()


def verify(digest: bytes, recomputed: bytes) -> bool:
    return hmac.compare_digest(digest, recomputed)


def _keystream_xor(key: bytes, nonce: bytes, data: bytes) -> bytes:
    out = bytearray(len(data))
    for block, start in enumerate(range(0, len(data), 32)):
        pad = hashlib.sha256(key + nonce + block.to_bytes(8, "big")).digest()
        chunk = data[start:start + 32]
        out[start:start + len(chunk)] = bytes(a ^ b for a, b in zip(chunk, pad))
    return bytes(out)


def _wrap_key(session_key: bytes, pk: PublicKey, rng: random.Random) -> bytes:
    k = pk.size_bytes
    pad_len = k - 3 - len(session_key)
    if pad_len < 8:
        raise InvalidArgument("modulus too small to wrap a session key")
    padding = bytes(rng.randrange(1, 256) for _ in range(pad_len))
    block = b"\x00\x02" + padding + b"\x00" + session_key
    return pow(int.from_bytes(block, "big"), pk.e, pk.n).to_bytes(k, "big")


def _unwrap_key(wrapped: bytes, sk: SecretKey) -> bytes | None:
    c = int.from_bytes(wrapped, "big")
    if c >= sk.n:
        return None
    block = pow(c, sk.d, sk.n).to_bytes(sk.size_bytes, "big")
    if block[:2] != b"\x00\x02":
        return None
    sep = block.find(b"\x00", 2)
    if sep < 10 or len(block) - sep - 1 != SESSION_KEY_BYTES:
        return None
    return block[sep + 1:]


def seal(message: bytes, pk: PublicKey, rng: random.Random | None = None) -> SecureEnvelope:
    """Encrypt ``message`` for the holder of ``pk`` and attach its plaintext digest."""
    if not message:
        raise InvalidArgument("cannot seal an empty message")
    rng = rng or random.SystemRandom()
    session_key = rng.randbytes(SESSION_KEY_BYTES)
    nonce = rng.randbytes(NONCE_BYTES)
    body = _keystream_xor(session_key, nonce, bytes(message))
    return SecureEnvelope(_wrap_key(session_key, pk, rng) + nonce + body, hash_message(bytes(message)))


def open_envelope(envelope: SecureEnvelope, sk: SecretKey) -> tuple[bytes, bool]:
    """Decrypt and check integrity. Returns ``(message, verified)``.

    A wrong key or tampered envelope gives ``verified=False``; the returned
    bytes are then meaningless (empty if the session key could not be unwrapped).
    """
    k = sk.size_bytes
    if len(envelope.ciphertext) <= k + NONCE_BYTES:
        raise MalformedEnvelope("ciphertext shorter than wrapped key + nonce + one byte")
    wrapped = envelope.ciphertext[:k]
    nonce = envelope.ciphertext[k:k + NONCE_BYTES]
    body = envelope.ciphertext[k + NONCE_BYTES:]
    session_key = _unwrap_key(wrapped, sk)
    if session_key is None:
        return b"", False
    message = _keystream_xor(session_key, nonce, body)
    return message, verify(envelope.digest, hash_message(message))
