from __future__ import annotations

import pytest

import stackpilot as sp
from stackpilot.agents import UNSET
from stackpilot.errors import ExecutorFailure, TransportError
from stackpilot.executors.llm import ChatClient, ChatConfig, LlmExecutor, extract_action_text
from stackpilot.executors.prompts import render_prompt

from llm_stub import StubEndpoint

FN = sp.extract_functions(
    "def scale(x):\n    y = x * 2\n    z = y + 1\n    return z\n", "minilang"
)[0]


def _ctx(just_returned=UNSET):
    return sp.ExecContext(
        function=FN,
        appearance_index=1,
        pointer="L2",
        locals={"x": 4, "y": 8},
        visible_globals={"limit": 10},
        just_returned=just_returned,
        logs_tail=("started",),
    )


@pytest.fixture()
def stub():
    endpoint = StubEndpoint()
    yield endpoint
    endpoint.close()


def _client(stub, **kw):
    return ChatClient(ChatConfig(api_key="k", base_url=stub.base_url, model="m", **kw))


class TestRenderPrompt:
    def test_deterministic(self):
        assert render_prompt(_ctx()) == render_prompt(_ctx())

    def test_contains_labels_verbatim(self):
        prompt = render_prompt(_ctx())
        for label in ("L1", "L2", "L3"):
            assert label in prompt

    def test_pointer_and_variables_rendered(self):
        prompt = render_prompt(_ctx())
        assert "Execution pointer: L2" in prompt
        assert "x = 4" in prompt
        assert "limit = 10" in prompt

    def test_returned_value_section_only_when_resuming(self):
        without = render_prompt(_ctx())
        with_value = render_prompt(_ctx(just_returned=55))
        assert "A call just returned" not in without
        assert "A call just returned: 55" in with_value

    def test_schema_examples_present(self):
        prompt = render_prompt(_ctx())
        for word in ('"type":"step"', '"type":"call"', '"type":"return"', '"type":"fault"'):
            assert word in prompt


class TestExtractActionText:
    def test_bare_object_passthrough(self):
        assert extract_action_text(' {"type":"return","value":1} ') == '{"type":"return","value":1}'

    def test_last_fenced_block_wins(self):
        reply = "thinking\n```json\n{\"a\":1}\n```\nmore\n```\n{\"type\":\"return\",\"value\":2}\n```\nbye"
        assert extract_action_text(reply) == '{"type":"return","value":2}'


class TestLlmNextStep:
    def test_well_formed_reply(self, stub):
        stub.queue('{"type":"step","next_pointer":"L3","deltas":[{"scope":"local","name":"y","value":8}]}')
        client = _client(stub)
        action = LlmExecutor(client).next_step(_ctx())
        client.close()
        assert action == sp.Step(
            next_pointer="L3", deltas=(sp.HeapDelta("local", "y", 8),)
        )

    def test_request_shape(self, stub):
        stub.queue('{"type":"return","value":9}')
        client = _client(stub)
        LlmExecutor(client).next_step(_ctx())
        client.close()
        request = stub.requests[0]
        assert request["model"] == "m"
        assert request["temperature"] == 0
        assert request["seed"] == 0
        assert request["messages"][0]["role"] == "user"

    def test_retry_appends_validation_error(self, stub):
        stub.queue("garbage", '{"type":"return","value":3}')
        client = _client(stub)
        action = LlmExecutor(client).next_step(_ctx())
        client.close()
        assert action == sp.Return(value=3)
        retry_messages = stub.requests[1]["messages"]
        assert len(retry_messages) == 3
        assert "rejected" in retry_messages[2]["content"]

    def test_three_failures_exhaust(self, stub):
        stub.queue("a", "b", "c")
        client = _client(stub)
        with pytest.raises(ExecutorFailure) as info:
            LlmExecutor(client, max_retries=3).next_step(_ctx())
        client.close()
        assert str(info.value).count("|") == 2  # three joined validation errors

    def test_server_error_retried_then_raises(self, stub):
        stub.queue(500, 500, 500)
        client = _client(stub, transport_retries=3)
        with pytest.raises(TransportError):
            LlmExecutor(client).next_step(_ctx())
        client.close()
        assert len(stub.requests) == 3

    def test_client_error_not_retried(self, stub):
        stub.queue(401)
        client = _client(stub)
        with pytest.raises(TransportError):
            LlmExecutor(client).next_step(_ctx())
        client.close()
        assert len(stub.requests) == 1

    def test_server_recovers_mid_retry(self, stub):
        stub.queue(500, '{"type":"return","value":1}')
        client = _client(stub, transport_retries=3)
        assert LlmExecutor(client).next_step(_ctx()) == sp.Return(value=1)
        client.close()


class TestConfig:
    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("STACKPILOT_API_KEY", "key")
        monkeypatch.setenv("STACKPILOT_BASE_URL", "http://example.test/v1")
        monkeypatch.setenv("STACKPILOT_MODEL", "test-model")
        config = ChatConfig.from_env()
        assert (config.api_key, config.base_url, config.model) == (
            "key",
            "http://example.test/v1",
            "test-model",
        )
        assert config.timeout == 120.0

    def test_from_env_missing_key(self, monkeypatch):
        monkeypatch.delenv("STACKPILOT_API_KEY", raising=False)
        monkeypatch.setenv("STACKPILOT_BASE_URL", "http://example.test")
        monkeypatch.setenv("STACKPILOT_MODEL", "m")
        with pytest.raises(TransportError):
            ChatConfig.from_env()
