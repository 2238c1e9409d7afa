"""Weather observations used as key-generation entropy.

Two providers share one interface: :class:`FixtureProvider` replays a CSV
shipped with the package (used by tests and offline runs) and
:class:`LiveProvider` queries the OpenWeather current-weather endpoint.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
import os
import threading
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Protocol, Sequence

from siren.errors import (
    WeatherAuthError,
    WeatherError,
    WeatherHttpError,
    WeatherParseError,
    WeatherQuotaError,
)

logger = logging.getLogger(__name__)

OPENWEATHER_URL = "https://api.openweathermap.org/data/2.5/weather"
API_KEY_ENV = "OPENWEATHER_API_KEY"


@dataclass(frozen=True)
class WeatherObservation:
    city_name: str
    temp_min: float  # kelvin
    temp_max: float  # kelvin
    observed_date: dt.date

    def __post_init__(self):
        if not (self.temp_min > 0 and self.temp_max > 0):
            raise ValueError(f"{self.city_name}: temperatures must be positive kelvin")
        if self.temp_max < self.temp_min:
            raise ValueError(f"{self.city_name}: temp_max below temp_min")

    @property
    def delta(self) -> float:
        return self.temp_max - self.temp_min


class EntropyProvider(Protocol):
    city_count: int

    def observe(self, index: int) -> WeatherObservation:
        """Observation for the city at 1-based ``index``."""


def _check_index(index: int, count: int) -> None:
    if not 1 <= index <= count:
        raise IndexError(f"city index {index} outside 1..{count}")


class FixtureProvider:
    def __init__(self, observations: Sequence[WeatherObservation]):
        if not observations:
            raise ValueError("fixture provider needs at least one city")
        self.observations = tuple(observations)

    @property
    def city_count(self) -> int:
        return len(self.observations)

    def observe(self, index: int) -> WeatherObservation:
        _check_index(index, self.city_count)
        return self.observations[index - 1]

    @classmethod
    def parse(cls, text: str) -> "FixtureProvider":
        """Lines of ``city,temp_min,temp_max,YYYY-MM-DD``; ``#`` starts a comment, a ``city,...`` header is skipped."""
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
        if rows and rows[0][0].strip().lower() == "city":
            rows = rows[1:]
        try:
            obs = [WeatherObservation(r[0].strip(), float(r[1]), float(r[2]), dt.date.fromisoformat(r[3].strip()))
                   for r in rows]
        except (IndexError, ValueError) as exc:
            raise ValueError(f"bad fixture line: {exc}") from exc
        return cls(obs)

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureProvider":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "FixtureProvider":
        return cls.parse(resources.files("siren.data").joinpath("cities.csv").read_text(encoding="utf-8"))


def default_city_names() -> list[str]:
    return [o.city_name for o in FixtureProvider.default().observations]


def parse_current_weather(payload: bytes | str, city_name: str, today: dt.date | None = None) -> WeatherObservation:
    try:
        doc = json.loads(payload)
        main = doc["main"]
        tmin, tmax = float(main["temp_min"]), float(main["temp_max"])
    except (ValueError, KeyError, TypeError) as exc:
        raise WeatherParseError(f"unparseable weather payload for {city_name}: {exc}") from exc
    when = today
    if when is None:
        stamp = doc.get("dt")
        when = (dt.datetime.fromtimestamp(stamp, dt.timezone.utc).date() if isinstance(stamp, (int, float))
                else dt.datetime.now(dt.timezone.utc).date())
    try:
        return WeatherObservation(doc.get("name") or city_name, tmin, tmax, when)
    except ValueError as exc:
        raise WeatherParseError(str(exc)) from exc


class WeatherClient:
    """HTTP client with a per-(city, date) cache and per-city request serialization."""

    def __init__(self, api_key: str | None = None, base_url: str = OPENWEATHER_URL, timeout: float = 10.0,
                 clock: Callable[[], dt.date] | None = None):
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.base_url = base_url
        self.timeout = timeout
        self._today = clock or (lambda: dt.datetime.now(dt.timezone.utc).date())
        self._cache: dict[tuple[str, dt.date], WeatherObservation] = {}
        self._lock = threading.Lock()
        self._city_locks: dict[str, threading.Lock] = {}
        self.requests_made = 0

    def _city_lock(self, city: str) -> threading.Lock:
        with self._lock:
            return self._city_locks.setdefault(city.lower(), threading.Lock())

    def fetch(self, city_name: str) -> WeatherObservation:
        if not self.api_key:
            raise WeatherAuthError(f"no API key configured (set {API_KEY_ENV})")
        today = self._today()
        key = (city_name.lower(), today)
        with self._city_lock(city_name):
            with self._lock:
                cached = self._cache.get(key)
            if cached is not None:
                return cached
            query = urllib.parse.urlencode({"q": city_name, "appid": self.api_key, "units": "standard"})
            try:
                with urllib.request.urlopen(f"{self.base_url}?{query}", timeout=self.timeout) as resp:
                    payload = resp.read()
            except urllib.error.HTTPError as exc:
                if exc.code == 401:
                    raise WeatherAuthError("weather API rejected the key (HTTP 401)") from exc
                if exc.code == 429:
                    raise WeatherQuotaError("weather API quota exceeded (HTTP 429)") from exc
                raise WeatherHttpError(f"weather API returned HTTP {exc.code}") from exc
            except (urllib.error.URLError, OSError) as exc:
                raise WeatherHttpError(f"weather API unreachable: {exc}") from exc
            finally:
                self.requests_made += 1
            obs = parse_current_weather(payload, city_name, today)
            with self._lock:
                self._cache[key] = obs
            return obs


def fetch_weather(city_name: str, api_key: str | None = None, base_url: str = OPENWEATHER_URL) -> WeatherObservation:
    return WeatherClient(api_key, base_url).fetch(city_name)


class LiveProvider:
    """Live observations, falling back to ``fallback`` when the API fails."""

    def __init__(self, city_names: Sequence[str], client: WeatherClient,
                 fallback: EntropyProvider | None = None):
        if len(city_names) < 2:
            raise ValueError("need at least two cities")
        self.city_names = list(city_names)
        self.client = client
        self.fallback = fallback

    @property
    def city_count(self) -> int:
        return len(self.city_names)

    def observe(self, index: int) -> WeatherObservation:
        _check_index(index, self.city_count)
        try:
            return self.client.fetch(self.city_names[index - 1])
        except WeatherError as exc:
            if self.fallback is None:
                raise
            logger.warning("live weather failed (%s); using fixture observation", exc)
            return self.fallback.observe((index - 1) % self.fallback.city_count + 1)
