"""Template registry: caps, prompts, rendering, config overrides."""

import json

import pytest

from promptgate.errors import ContractViolation, DatasetError
from promptgate.templates import (
    DEFAULT_UNKNOWN_CAP,
    UNKNOWN_SYSTEM_PROMPT,
    TemplateRegistry,
    render_prompt,
    token_cap,
)
from promptgate.types import (
    CANONICAL_TEMPLATES,
    EXECUTIVE,
    MINIMAL,
    STANDARD,
    TECHNICAL,
    VERBOSE,
    Query,
    TemplateId,
)

EXPECTED_CAPS = {"minimal": 50, "standard": 200, "verbose": 500, "technical": 400, "executive": 150}


def test_known_caps():
    for name, cap in EXPECTED_CAPS.items():
        assert token_cap(TemplateId(name)) == cap


def test_unknown_template_caps_at_1000():
    assert token_cap(TemplateId("experimental")) == DEFAULT_UNKNOWN_CAP == 1000


def test_canonical_order_is_by_cap():
    caps = [token_cap(t) for t in CANONICAL_TEMPLATES]
    assert caps == sorted(caps)
    assert CANONICAL_TEMPLATES == (MINIMAL, EXECUTIVE, STANDARD, TECHNICAL, VERBOSE)


def test_minimal_system_prompt_verbatim():
    bundle = render_prompt(Query(id="1", text="What is 2+2?"), MINIMAL)
    assert bundle.system_prompt == "Answer briefly and directly"
    assert bundle.max_tokens == 50


def test_verbose_system_prompt_verbatim():
    bundle = render_prompt(Query(id="1", text="Explain entropy"), VERBOSE)
    assert bundle.system_prompt == (
        "Give a comprehensive, detailed explanation with examples and context"
    )
    assert bundle.max_tokens == 500


def test_unknown_template_renders_neutral_prompt():
    bundle = render_prompt(Query(id="1", text="hi there"), TemplateId("mystery"))
    assert bundle.system_prompt == UNKNOWN_SYSTEM_PROMPT
    assert bundle.max_tokens == 1000


def test_query_text_passes_through_byte_identical():
    text = "  spaced\ttext\nwith  odd   whitespace é漢 "
    bundle = render_prompt(Query(id="1", text=text), STANDARD)
    assert bundle.user_prompt == text


def test_registry_requires_all_five():
    registry = TemplateRegistry()
    with pytest.raises(ContractViolation):
        TemplateRegistry(specs={MINIMAL: registry.spec(MINIMAL)})


def test_mean_tokens_defaults_to_cap():
    registry = TemplateRegistry()
    for template in CANONICAL_TEMPLATES:
        assert registry.mean_tokens(template) == registry.token_cap(template)


def test_config_override(tmp_path):
    path = tmp_path / "templates.json"
    path.write_text(json.dumps({
        "minimal": {"system_prompt": "Be terse.", "max_tokens": 40},
        "verbose": {"mean_tokens": 450},
    }))
    registry = TemplateRegistry.from_file(path)
    assert registry.system_prompt(MINIMAL) == "Be terse."
    assert registry.token_cap(MINIMAL) == 40
    assert registry.mean_tokens(VERBOSE) == 450
    # untouched entries keep their defaults
    assert registry.token_cap(TECHNICAL) == 400


def test_config_rejects_unknown_template(tmp_path):
    path = tmp_path / "templates.json"
    path.write_text(json.dumps({"ultraverbose": {"max_tokens": 9000}}))
    with pytest.raises(DatasetError):
        TemplateRegistry.from_file(path)
