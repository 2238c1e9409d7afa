"""Weather-entropy RSA key generation and unpadded encryption."""

from siren.crypto.primes import is_probable_prime, nearest_prime
from siren.crypto.rsa import (
    RsaKeyPair,
    decrypt,
    decrypt_blob,
    derive_prime,
    encrypt,
    encrypt_blob,
    generate_keypair,
    keypair_from_primes,
    render_hex,
)
from siren.crypto.weather import FixtureProvider, LiveProvider, WeatherClient, WeatherObservation, fetch_weather

__all__ = [
    "FixtureProvider", "LiveProvider", "RsaKeyPair", "WeatherClient", "WeatherObservation",
    "decrypt", "decrypt_blob", "derive_prime", "encrypt", "encrypt_blob", "fetch_weather",
    "generate_keypair", "is_probable_prime", "keypair_from_primes", "nearest_prime", "render_hex",
]
