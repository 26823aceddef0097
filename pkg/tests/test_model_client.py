from __future__ import annotations

import time

import pytest

from blvrun.model_client import (
    BackendConfig,
    BackendTimeout,
    BackendUnreachable,
    ProtocolError,
    generate,
    health_check,
)

from .mock_server import MockGenerationServer, closed_port_url


class TestBackendConfig:
    def test_defaults(self):
        config = BackendConfig()
        assert config.endpoint == "http://127.0.0.1:11434"
        assert config.timeout_ms == 15000
        assert config.enabled

    def test_rejects_nonpositive_timeout(self):
        with pytest.raises(ValueError):
            BackendConfig(timeout_ms=0)

    def test_rejects_non_http_endpoint(self):
        with pytest.raises(ValueError):
            BackendConfig(endpoint="not a url")
        with pytest.raises(ValueError):
            BackendConfig(endpoint="ftp://host")


class TestGenerate:
    def test_happy_path_returns_response_field(self):
        with MockGenerationServer(response_text="ok") as server:
            config = BackendConfig(endpoint=server.url, model_name="test-model")
            assert generate(config, "hello") == "ok"

    def test_request_body_has_exactly_three_fields(self):
        with MockGenerationServer() as server:
            config = BackendConfig(endpoint=server.url, model_name="test-model")
            generate(config, "the prompt")
            assert server.seen == [
                {"model": "test-model", "prompt": "the prompt", "stream": False}
            ]

    def test_closed_port_raises_unreachable(self):
        config = BackendConfig(endpoint=closed_port_url(), timeout_ms=2000)
        with pytest.raises(BackendUnreachable):
            generate(config, "x")

    def test_error_body_with_200_raises_protocol(self):
        with MockGenerationServer(body={"error": "model not found"}) as server:
            config = BackendConfig(endpoint=server.url)
            with pytest.raises(ProtocolError):
                generate(config, "x")

    def test_non_200_status_raises_protocol(self):
        with MockGenerationServer(status=500, body={"error": "boom"}) as server:
            config = BackendConfig(endpoint=server.url)
            with pytest.raises(ProtocolError):
                generate(config, "x")

    def test_stalling_server_times_out_within_grace(self):
        with MockGenerationServer(delay_s=10.0) as server:
            config = BackendConfig(endpoint=server.url, timeout_ms=1000)
            start = time.perf_counter()
            with pytest.raises(BackendTimeout):
                generate(config, "x")
            elapsed = time.perf_counter() - start
            assert elapsed < 1.0 + 0.5

    def test_mock_rejects_extra_fields(self):
        # Harness self-check: the strict decoder is what validates the wire shape.
        import requests

        with MockGenerationServer() as server:
            resp = requests.post(
                f"{server.url}/api/generate",
                json={"model": "m", "prompt": "p", "stream": False, "extra": 1},
                timeout=5,
            )
            assert resp.status_code == 400


class TestHealthCheck:
    def test_running_server_is_healthy(self):
        with MockGenerationServer() as server:
            assert health_check(BackendConfig(endpoint=server.url)) is True

    def test_closed_port_is_unhealthy(self):
        assert health_check(BackendConfig(endpoint=closed_port_url())) is False

    def test_slow_server_fails_the_two_second_cap(self):
        with MockGenerationServer(delay_s=3.0) as server:
            config = BackendConfig(endpoint=server.url, timeout_ms=15000)
            start = time.perf_counter()
            assert health_check(config) is False
            assert time.perf_counter() - start < 2.6
