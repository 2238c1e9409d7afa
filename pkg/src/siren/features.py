"""Lexical URL decomposition and the fixed 68-value feature vector.

Everything here is a pure function of the input string (plus the bundled
TLD and shortener lists), so it is safe to call from any thread.

Layout of the vector::

    [0:28]   URL block   16 symbol counts, length, digits, letters, vowels,
                         https, credentials, shortener, ipv4, ipv4_port,
                         hex_ip, ipv6, tld_count
    [28:48]  host block  16 symbol counts, length, digits, letters, vowels
    [48:68]  path block  16 symbol counts, length, digits, letters, vowels

Params, query and fragment are split out by :func:`decompose_url` but are
not featurized.
"""

from __future__ import annotations

import hashlib
import ipaddress
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

import numpy as np

from siren.errors import InvalidUrlError

SYMBOLS: tuple[str, ...] = (".", "-", "_", "/", "?", "=", "@", "&", "!", ",", "~", "*", "#", "$", "%", "+")
SYMBOL_NAMES: tuple[str, ...] = (
    "dot", "hyphen", "underscore", "slash", "question", "equal", "at", "and",
    "exclamation", "comma", "tilde", "asterisk", "hash", "dollar", "percent", "plus",
)
N_FEATURES = 68
VOWELS = frozenset("aeiouAEIOU")

_SCHEME_AUTHORITY = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*)://")
# Schemes that never carry an authority; "mailto:x@y" must not be read as host "mailto".
_OPAQUE_SCHEMES = frozenset({"mailto", "javascript", "data", "tel", "sms", "about", "news", "urn", "blob"})
_OPAQUE = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*):(?!//)")
_IPV4 = re.compile(r"^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})(?::(\d{1,5}))?$")
_HEX_IP = re.compile(r"^0[xX][0-9A-Fa-f]{1,8}(?::\d{1,5})?$")
_EMAIL = re.compile(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}")
_HOST_BAD = re.compile(r"[\s<>\"{}|\\^`]")


@dataclass(frozen=True)
class UrlParts:
    raw: str
    protocol: str | None = None
    host: str | None = None
    port: int | None = None
    path: str = ""
    params: str | None = None
    query: str | None = None
    fragment: str | None = None

    def reassemble(self) -> str:
        out = []
        if self.protocol is not None:
            out.append(self.protocol + (":" if self.host is None else "://"))
        if self.host is not None:
            out.append(self.host)
            if self.port is not None:
                out.append(f":{self.port}")
        out.append(self.path)
        if self.params is not None:
            out.append(";" + self.params)
        if self.query is not None:
            out.append("?" + self.query)
        if self.fragment is not None:
            out.append("#" + self.fragment)
        return "".join(out)


class IpFlags(NamedTuple):
    ipv4: int = 0
    ipv4_port: int = 0
    hex_ip: int = 0
    ipv6: int = 0


class CharStats(NamedTuple):
    length: int
    digit_count: int
    letter_count: int
    vowel_count: int


def decompose_url(raw: str) -> UrlParts:
    """Split a URL into protocol, host, port, path, params, query and fragment.

    Inputs without a ``scheme://`` prefix are parsed host-first, so
    ``"example.com/a"`` yields host ``example.com`` and path ``/a``. Inputs
    that do not produce a plausible host come back with ``host=None`` and
    the whole string as the path.
    """
    if raw is None or not raw.strip():
        raise InvalidUrlError("empty URL")
    text = raw.strip()

    m = _SCHEME_AUTHORITY.match(text)
    if m:
        protocol: str | None = m.group(1)
        rest = text[m.end():]
    else:
        m = _OPAQUE.match(text)
        if m and m.group(1).lower() in _OPAQUE_SCHEMES:
            path, params, query, fragment = _split_tail(text[m.end():])
            return UrlParts(text, protocol=m.group(1), path=path, params=params,
                            query=query, fragment=fragment)
        protocol = None
        rest = text

    end = len(rest)
    for delim in "/?#":
        i = rest.find(delim)
        if i != -1:
            end = min(end, i)
    authority, tail = rest[:end], rest[end:]
    host, port = _split_authority(authority)

    if host is None and protocol is None:
        return UrlParts(text, path=text)

    path, params, query, fragment = _split_tail(tail)
    return UrlParts(text, protocol=protocol, host=host, port=port, path=path,
                    params=params, query=query, fragment=fragment)


def _split_authority(authority: str) -> tuple[str | None, int | None]:
    hostport = authority.rpartition("@")[2]
    if hostport.startswith("["):
        close = hostport.find("]")
        if close == -1:
            return None, None
        host, after = hostport[:close + 1], hostport[close + 1:]
        port_text = after[1:] if after.startswith(":") else ""
    else:
        host, sep, port_text = hostport.rpartition(":")
        if not sep:
            host, port_text = hostport, ""
        elif port_text and not port_text.isdigit():
            # "a:b:c" style junk; keep it whole rather than guess
            host, port_text = hostport, ""
    port = int(port_text) if port_text.isdigit() else None
    if not host or _HOST_BAD.search(host):
        return None, None
    return host, port


def _split_tail(tail: str) -> tuple[str, str | None, str | None, str | None]:
    fragment = query = params = None
    if "#" in tail:
        tail, fragment = tail.split("#", 1)
    if "?" in tail:
        tail, query = tail.split("?", 1)
    # params belong to the last path segment only
    last_slash = tail.rfind("/")
    semi = tail.find(";", last_slash + 1)
    if semi != -1:
        tail, params = tail[:semi], tail[semi + 1:]
    return tail, params, query, fragment


def detect_ip(host: str | None) -> IpFlags:
    """Flag the address shape of a host; ``"1.2.3.4:80"`` sets ipv4 and ipv4_port."""
    if not host:
        return IpFlags()
    m = _IPV4.match(host)
    if m:
        if all(int(octet) <= 255 for octet in m.group(1, 2, 3, 4)):
            return IpFlags(ipv4=1, ipv4_port=int(m.group(5) is not None))
        return IpFlags()
    if _HEX_IP.match(host):
        return IpFlags(hex_ip=1)
    candidate = host
    if candidate.startswith("["):
        candidate = candidate[1:candidate.find("]")] if "]" in candidate else candidate[1:]
    if ":" in candidate:
        try:
            ipaddress.IPv6Address(candidate)
        except ValueError:
            return IpFlags()
        return IpFlags(ipv6=1)
    return IpFlags()


def count_symbols(text: str | None) -> list[int]:
    if not text:
        return [0] * len(SYMBOLS)
    return [text.count(s) for s in SYMBOLS]


def char_stats(text: str | None) -> CharStats:
    if not text:
        return CharStats(0, 0, 0, 0)
    digits = letters = vowels = 0
    for ch in text:
        if "0" <= ch <= "9":
            digits += 1
        elif ("a" <= ch <= "z") or ("A" <= ch <= "Z"):
            letters += 1
            if ch in VOWELS:
                vowels += 1
    return CharStats(len(text), digits, letters, vowels)


def _load_token_list(name: str) -> frozenset[str]:
    text = resources.files("siren.data").joinpath(name).read_text(encoding="utf-8")
    return frozenset(
        line.strip().lower() for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    )


@lru_cache(maxsize=None)
def tld_set() -> frozenset[str]:
    return _load_token_list("tlds.txt")


@lru_cache(maxsize=None)
def shortener_set() -> frozenset[str]:
    return _load_token_list("shorteners.txt")


def tld_count(host: str | None) -> int:
    if not host:
        return 0
    tlds = tld_set()
    return sum(1 for label in host.lower().split(".") if label in tlds)


def is_shortened(host: str | None) -> int:
    if not host:
        return 0
    h = host.lower()
    if h.startswith("www."):
        h = h[4:]
    return int(h in shortener_set())


def detect_credentials(raw: str | None) -> int:
    """1 if the URL embeds userinfo before the host or contains an email address."""
    if not raw:
        return 0
    text = raw.strip()
    m = _SCHEME_AUTHORITY.match(text)
    rest = text[m.end():] if m else text
    authority = re.split(r"[/?#]", rest, maxsplit=1)[0]
    if "@" in authority:
        return 1
    return int(_EMAIL.search(text) is not None)


def _block_names(prefix: str) -> list[str]:
    return [f"{prefix}_{n}_count" for n in SYMBOL_NAMES] + [
        f"{prefix}_length", f"{prefix}_digits", f"{prefix}_letters", f"{prefix}_vowels",
    ]


FEATURE_NAMES: tuple[str, ...] = tuple(
    _block_names("url")
    + ["https_flag", "credentials_flag", "shortener_flag", "ipv4", "ipv4_port",
       "hex_ip", "ipv6", "tld_count"]
    + _block_names("host")
    + _block_names("path")
)
assert len(FEATURE_NAMES) == N_FEATURES


def layout_hash() -> bytes:
    """SHA-256 over the ordered feature names; pins models to this layout."""
    return hashlib.sha256("\n".join(FEATURE_NAMES).encode("ascii")).digest()


def layout_manifest() -> list[dict]:
    return [{"index": i, "name": name} for i, name in enumerate(FEATURE_NAMES)]


def extract_features(raw: str) -> np.ndarray:
    """Return the 68-value float64 feature vector for ``raw``."""
    parts = decompose_url(raw)
    text = parts.raw
    host = parts.host
    ip_host = f"{host}:{parts.port}" if host is not None and parts.port is not None else host
    ip = detect_ip(ip_host)

    values: list[float] = []
    values += count_symbols(text)
    values += char_stats(text)
    values += [
        int((parts.protocol or "").lower() == "https"),
        detect_credentials(text),
        is_shortened(host),
        ip.ipv4, ip.ipv4_port, ip.hex_ip, ip.ipv6,
        tld_count(host),
    ]
    values += count_symbols(host)
    values += char_stats(host)
    values += count_symbols(parts.path)
    values += char_stats(parts.path)
    return np.asarray(values, dtype=np.float64)


def feature_dict(raw: str) -> dict[str, float]:
    return dict(zip(FEATURE_NAMES, extract_features(raw).tolist()))
