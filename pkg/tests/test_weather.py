import datetime as dt
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

import pytest

from siren.crypto.weather import (
    FixtureProvider,
    LiveProvider,
    WeatherClient,
    WeatherObservation,
    default_city_names,
    fetch_weather,
    parse_current_weather,
)
from siren.errors import WeatherAuthError, WeatherHttpError, WeatherParseError, WeatherQuotaError

# Shape of a current-weather response (trimmed), units=standard.
CHENNAI = {
    "coord": {"lon": 80.2785, "lat": 13.0878},
    "weather": [{"id": 802, "main": "Clouds", "description": "scattered clouds", "icon": "03d"}],
    "main": {"temp": 303.3, "feels_like": 309.1, "temp_min": 302.04, "temp_max": 304.21,
             "pressure": 1006, "humidity": 66},
    "dt": 1714550400,
    "name": "Chennai",
    "cod": 200,
}


class _Handler(BaseHTTPRequestHandler):
    seen: list = []

    def log_message(self, *args):
        pass

    def do_GET(self):
        q = parse_qs(urlsplit(self.path).query)
        type(self).seen.append(q)
        city = q.get("q", [""])[0]
        if q.get("appid") != ["good-key"]:
            self._reply(401, {"cod": 401, "message": "Invalid API key"})
        elif city == "Quota":
            self._reply(429, {"cod": 429})
        elif city == "Broken":
            self._reply(200, {"main": {"temp": 300.0}, "name": "Broken"})
        elif city == "Down":
            self._reply(503, {"cod": 503})
        else:
            self._reply(200, CHENNAI)

    def _reply(self, code, body):
        data = json.dumps(body).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture(scope="module")
def weather_url():
    srv = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}/data/2.5/weather"
    srv.shutdown()
    srv.server_close()


def test_fixture_replay_chennai(weather_url):
    obs = fetch_weather("Chennai", "good-key", weather_url)
    assert obs.city_name == "Chennai"
    assert obs.temp_max >= obs.temp_min > 0
    assert (obs.temp_min, obs.temp_max) == (302.04, 304.21)
    assert _Handler.seen[-1]["units"] == ["standard"]


def test_auth_error(weather_url):
    with pytest.raises(WeatherAuthError):
        fetch_weather("Chennai", "bad-key", weather_url)


def test_no_key(weather_url, monkeypatch):
    monkeypatch.delenv("OPENWEATHER_API_KEY", raising=False)
    with pytest.raises(WeatherAuthError):
        WeatherClient(base_url=weather_url).fetch("Chennai")


def test_key_from_env(weather_url, monkeypatch):
    monkeypatch.setenv("OPENWEATHER_API_KEY", "good-key")
    assert WeatherClient(base_url=weather_url).fetch("Chennai").city_name == "Chennai"


def test_quota_error(weather_url):
    with pytest.raises(WeatherQuotaError):
        fetch_weather("Quota", "good-key", weather_url)


def test_missing_field(weather_url):
    with pytest.raises(WeatherParseError):
        fetch_weather("Broken", "good-key", weather_url)


def test_http_error(weather_url):
    with pytest.raises(WeatherHttpError):
        fetch_weather("Down", "good-key", weather_url)


def test_unreachable():
    with pytest.raises(WeatherHttpError):
        WeatherClient("good-key", "http://127.0.0.1:9/none", timeout=1).fetch("Chennai")


def test_cache_per_city_and_date(weather_url):
    today = [dt.date(2024, 5, 1)]
    client = WeatherClient("good-key", weather_url, clock=lambda: today[0])
    client.fetch("Chennai")
    client.fetch("chennai")
    assert client.requests_made == 1
    today[0] = dt.date(2024, 5, 2)
    client.fetch("Chennai")
    assert client.requests_made == 2


def test_concurrent_fetches_share_one_request(weather_url):
    client = WeatherClient("good-key", weather_url, clock=lambda: dt.date(2024, 5, 1))
    threads = [threading.Thread(target=client.fetch, args=("Chennai",)) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert client.requests_made == 1


def test_live_provider_falls_back(weather_url):
    fallback = FixtureProvider.default()
    live = LiveProvider(["Quota", "Chennai"], WeatherClient("good-key", weather_url), fallback)
    assert live.observe(1) == fallback.observe(1)
    assert live.observe(2).city_name == "Chennai"
    with pytest.raises(IndexError):
        live.observe(3)
    strict = LiveProvider(["Quota", "Chennai"], WeatherClient("good-key", weather_url))
    with pytest.raises(WeatherQuotaError):
        strict.observe(1)


def test_parse_payload_directly():
    obs = parse_current_weather(json.dumps(CHENNAI), "Chennai")
    assert obs.observed_date == dt.date(2024, 5, 1)
    with pytest.raises(WeatherParseError):
        parse_current_weather("not json", "x")
    with pytest.raises(WeatherParseError):
        parse_current_weather(json.dumps({"main": {"temp_min": 300, "temp_max": 290}}), "x")


def test_observation_invariants():
    with pytest.raises(ValueError):
        WeatherObservation("x", 300.0, 299.0, dt.date.today())
    with pytest.raises(ValueError):
        WeatherObservation("x", 0.0, 10.0, dt.date.today())


def test_fixture_provider_contract(tmp_path):
    prov = FixtureProvider.default()
    assert prov.city_count == 20 == len(default_city_names())
    assert len({round(o.delta, 6) for o in prov.observations}) == 20
    with pytest.raises(IndexError):
        prov.observe(0)
    with pytest.raises(IndexError):
        prov.observe(21)
    path = tmp_path / "c.csv"
    path.write_text("city,temp_min_kelvin,temp_max_kelvin,date\nA,290.0,295.5,2024-05-01\nB,280,281,2024-05-01\n")
    custom = FixtureProvider.from_file(path)
    assert custom.city_count == 2 and custom.observe(1).delta == 5.5
