"""Tests for reward gating and the three evaluator operations."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scicopilot.evaluation import (
    EvaluationProtocolError,
    GateDecision,
    TaskEvaluation,
    ToolEvaluation,
    VisualEvaluation,
    evaluate_task,
    evaluate_tool_call,
    evaluate_visual,
    gate,
)
from scicopilot.prompts import load_prompt
from scicopilot.providers import ChatMessage, ScriptedProvider, ScriptEntry
from scicopilot.sandbox import STUB_PNG
from scicopilot.tags import RewardOutOfRangeError
from scicopilot.tools import Attachment


def scripted(*texts):
    return ScriptedProvider([ScriptEntry(text=t) for t in texts])


def tool_transcript():
    return [
        ChatMessage.text("system", "You answer questions against the paper database."),
        ChatMessage.text("user", "Count the papers."),
        ChatMessage.text("assistant", "<step>Run a count query.</step>"),
        ChatMessage.text("tool", "| count |\n| 60 |", tool_call_id="call_0"),
    ]


def task_transcript():
    return [
        ChatMessage.text("system", "You answer questions against the paper database."),
        ChatMessage.text("user", "Count the papers."),
        ChatMessage.text("assistant", "There are 60 papers in the corpus."),
    ]


FIGURE = Attachment(
    kind="image", reference="fig.png", media_type="image/png", data=STUB_PNG
)


class RecordingProvider:
    """Wraps a provider and captures every wire-level call."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    def complete(self, messages, tools=(), params=None):
        self.calls.append((list(messages), tuple(tools), params))
        return self.inner.complete(messages, tools, params)


class TestGate:
    def test_high_reward_continues(self):
        assert gate(0.85) is GateDecision.CONTINUE

    def test_mid_reward_adjusts(self):
        assert gate(0.75) is GateDecision.ADJUST

    def test_low_reward_backtracks(self):
        assert gate(0.4) is GateDecision.BACKTRACK

    def test_continue_boundary_is_inclusive(self):
        assert gate(0.8) is GateDecision.CONTINUE

    def test_adjust_boundary_is_inclusive(self):
        assert gate(0.5) is GateDecision.ADJUST

    def test_interval_endpoints(self):
        assert gate(0.0) is GateDecision.BACKTRACK
        assert gate(1.0) is GateDecision.CONTINUE

    @pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan"), float("inf")])
    def test_out_of_range_rejected(self, bad):
        with pytest.raises(RewardOutOfRangeError):
            gate(bad)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_partition_totality(self, reward):
        decision = gate(reward)
        if reward >= 0.8:
            assert decision is GateDecision.CONTINUE
        elif reward >= 0.5:
            assert decision is GateDecision.ADJUST
        else:
            assert decision is GateDecision.BACKTRACK


class TestToolEvaluation:
    def test_reward_only(self):
        result = evaluate_tool_call(scripted("<reward>0.8</reward>"), tool_transcript())
        assert result == ToolEvaluation(reward=0.8, reflection=None)

    def test_reward_with_reflection(self):
        provider = scripted(
            "<reward>0.4</reward>"
            "<reflection>fix the node-weight calculation</reflection>"
        )
        result = evaluate_tool_call(provider, tool_transcript())
        assert result.reward == 0.4
        assert result.reflection == "fix the node-weight calculation"

    def test_tagless_reply_retries_once_then_fails(self):
        provider = scripted("looks fine", "still looks fine")
        with pytest.raises(EvaluationProtocolError, match="reward"):
            evaluate_tool_call(provider, tool_transcript())
        assert provider.calls_made == 2

    def test_retry_recovers(self):
        provider = scripted("looks fine", "<reward>0.9</reward>")
        result = evaluate_tool_call(provider, tool_transcript())
        assert result.reward == 0.9
        assert provider.calls_made == 2

    def test_forbidden_tag_forces_retry(self):
        provider = scripted(
            "<answer>done</answer><reward>0.9</reward>",
            "<reward>0.9</reward>",
        )
        result = evaluate_tool_call(provider, tool_transcript())
        assert result.reward == 0.9
        assert provider.calls_made == 2

    def test_out_of_range_reward_forces_retry(self):
        provider = scripted("<reward>1.5</reward>", "<reward>0.7</reward>")
        assert evaluate_tool_call(provider, tool_transcript()).reward == 0.7

    def test_prose_between_tags_is_tolerated(self):
        provider = scripted("Looks solid.\n<reward>0.9</reward>\n")
        assert evaluate_tool_call(provider, tool_transcript()).reward == 0.9
        assert provider.calls_made == 1

    def test_last_reward_wins(self):
        provider = scripted("<reward>0.2</reward><reward>0.9</reward>")
        assert evaluate_tool_call(provider, tool_transcript()).reward == 0.9

    def test_transcript_must_end_with_tool_result(self):
        with pytest.raises(ValueError, match="tool result"):
            evaluate_tool_call(scripted("<reward>0.9</reward>"), task_transcript())

    def test_empty_transcript_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            evaluate_tool_call(scripted("<reward>0.9</reward>"), [])

    def test_meta_prompt_rides_a_closing_user_message(self):
        provider = RecordingProvider(scripted("<reward>0.8</reward>"))
        evaluate_tool_call(provider, tool_transcript())
        messages, tools, params = provider.calls[0]
        assert params.temperature == 0.0
        assert tools == ()
        assert messages[-1].role == "user"
        assert "evaluate the newest tool call" in messages[-1].text_body()
        assert messages[:-1] == tool_transcript()

    def test_observer_sees_every_attempt(self):
        provider = scripted("no tags here", "<reward>0.9</reward>")
        seen = []
        evaluate_tool_call(provider, tool_transcript(), observer=seen.append)
        assert [(a.evaluator, a.attempt) for a in seen] == [("tool", 1), ("tool", 2)]
        assert seen[0].problem is not None
        assert seen[1].problem is None


class TestVisualEvaluation:
    FULL_REPLY = (
        "<thinking>The axes are unlabeled and the legend is missing.</thinking>"
        "<caption>Citation counts by publication year.</caption>"
        "<reward>0.75</reward>"
        "<reflection>Label both axes.\nAdd a legend.\nIncrease font size.</reflection>"
    )

    def test_full_response_populates_every_field(self):
        result = evaluate_visual(scripted(self.FULL_REPLY), FIGURE, task_transcript())
        assert result.caption == "Citation counts by publication year."
        assert result.reward == 0.75
        assert "axes are unlabeled" in result.thinking
        assert "Add a legend." in result.reflection

    def test_mid_reward_gates_adjust(self):
        result = evaluate_visual(scripted(self.FULL_REPLY), FIGURE, task_transcript())
        assert gate(result.reward) is GateDecision.ADJUST

    def test_answer_tag_rejected_then_retried(self):
        provider = scripted("<answer>nice figure</answer>" + self.FULL_REPLY, self.FULL_REPLY)
        result = evaluate_visual(provider, FIGURE, task_transcript())
        assert result.reward == 0.75
        assert provider.calls_made == 2

    def test_missing_caption_fails_after_retry(self):
        provider = scripted("<reward>0.9</reward>", "<reward>0.9</reward>")
        with pytest.raises(EvaluationProtocolError, match="caption"):
            evaluate_visual(provider, FIGURE, task_transcript())

    def test_blank_caption_counts_as_missing(self):
        provider = scripted(
            "<caption>   </caption><reward>0.9</reward>",
            "<caption>A scatter plot.</caption><reward>0.9</reward>",
        )
        result = evaluate_visual(provider, FIGURE, task_transcript())
        assert result.caption == "A scatter plot."
        assert provider.calls_made == 2

    def test_reflection_is_optional(self):
        provider = scripted("<caption>A bar chart.</caption><reward>0.9</reward>")
        result = evaluate_visual(provider, FIGURE, task_transcript())
        assert result.reflection is None
        assert result.thinking == ""

    def test_image_rides_the_closing_message(self):
        provider = RecordingProvider(scripted(self.FULL_REPLY))
        evaluate_visual(provider, FIGURE, task_transcript())
        closing = provider.calls[0][0][-1]
        assert closing.role == "user"
        assert closing.parts[0].kind == "image"
        assert closing.parts[0].data == STUB_PNG
        assert "evaluate the figure" in closing.text_body()

    def test_non_image_attachment_rejected(self):
        table = Attachment(kind="file", reference="result.csv")
        with pytest.raises(ValueError, match="image attachment"):
            evaluate_visual(scripted(self.FULL_REPLY), table, task_transcript())

    def test_empty_transcript_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            evaluate_visual(scripted(self.FULL_REPLY), FIGURE, [])


class TestTaskEvaluation:
    def test_report_and_reward(self):
        provider = scripted(
            "<report>Counted 60 papers via a single SQL query.</report>"
            "<reward>0.95</reward>"
        )
        result = evaluate_task(provider, task_transcript())
        assert result == TaskEvaluation(
            report="Counted 60 papers via a single SQL query.", reward=0.95
        )

    def test_report_whitespace_is_trimmed(self):
        provider = scripted("<report>\n  Done well.\n</report><reward>0.9</reward>")
        assert evaluate_task(provider, task_transcript()).report == "Done well."

    def test_thinking_is_permitted(self):
        provider = scripted(
            "<thinking>The workflow was direct.</thinking>"
            "<report>One query sufficed.</report><reward>0.9</reward>"
        )
        assert evaluate_task(provider, task_transcript()).reward == 0.9

    def test_step_tag_is_not_permitted(self):
        provider = scripted(
            "<step>recap</step><report>fine</report><reward>0.9</reward>",
            "<report>fine</report><reward>0.9</reward>",
        )
        result = evaluate_task(provider, task_transcript())
        assert result.report == "fine"
        assert provider.calls_made == 2

    def test_empty_report_fails_after_retry(self):
        provider = scripted(
            "<report></report><reward>0.9</reward>",
            "<report>  </report><reward>0.9</reward>",
        )
        with pytest.raises(EvaluationProtocolError, match="report"):
            evaluate_task(provider, task_transcript())

    def test_missing_reward_fails_after_retry(self):
        provider = scripted("<report>done</report>", "<report>done</report>")
        with pytest.raises(EvaluationProtocolError, match="reward"):
            evaluate_task(provider, task_transcript())

    def test_empty_transcript_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            evaluate_task(scripted("<report>x</report><reward>1</reward>"), [])


class TestEvaluationTypes:
    def test_tool_evaluation_rejects_out_of_range_reward(self):
        with pytest.raises(RewardOutOfRangeError):
            ToolEvaluation(reward=1.5)

    def test_visual_evaluation_requires_caption(self):
        with pytest.raises(ValueError, match="caption"):
            VisualEvaluation(caption="  ", reward=0.5)

    def test_task_evaluation_requires_report(self):
        with pytest.raises(ValueError, match="report"):
            TaskEvaluation(report="", reward=0.5)

    def test_task_evaluation_rejects_negative_reward(self):
        with pytest.raises(RewardOutOfRangeError):
            TaskEvaluation(report="fine", reward=-0.1)


class TestPromptAssets:
    @pytest.mark.parametrize(
        "name, excerpt",
        [
            ("manager", "You are SciSciGPT"),
            ("literature", "You are `LiteratureSpecialist`"),
            ("database", "You are `DatabaseSpecialist`"),
            ("analytics", "You are `AnalyticsSpecialist`"),
            ("eval_tool", "evaluate the newest tool call"),
            ("eval_visual", "You are a Nature reviewer."),
            ("eval_task", "Analyze the above task accomplishment workflow"),
        ],
    )
    def test_assets_load_with_expected_content(self, name, excerpt):
        text = load_prompt(name)
        assert text.startswith("<system>")
        assert text.rstrip().endswith("</system>")
        assert excerpt in text

    def test_unknown_asset_is_an_error(self):
        with pytest.raises(KeyError, match="manager"):
            load_prompt("nonexistent")

    def test_budget_instruction_reaches_every_agent(self):
        for name in ("manager", "literature", "database", "analytics"):
            assert "Start with a 20-step budget" in load_prompt(name)
