"""Command line entry points: chat, replay, and fixture verification."""

import json

from click.testing import CliRunner

from scicopilot.cli import main
from scicopilot.config import CASE1_QUESTION
from scicopilot.providers import ScriptEntry


def write_script(path, entries):
    with path.open("w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(json.dumps({"text": entry.text, "tool": entry.tool,
                                     "args": entry.args}) + "\n")


class TestFixturesVerify:
    def test_all_checks_pass(self):
        result = CliRunner().invoke(main, ["fixtures", "verify"])
        assert result.exit_code == 0, result.output
        assert "all fixtures verified" in result.output
        assert "FAIL" not in result.output


class TestChat:
    def _env(self, tmp_path):
        return {
            "SESSION_DIR": str(tmp_path / "sessions"),
            "ARTIFACT_DIR": str(tmp_path / "artifacts"),
        }

    def test_scripted_chat_prints_the_answer(self, tmp_path):
        script = tmp_path / "script.jsonl"
        write_script(script, [ScriptEntry(text="<answer>forty-two</answer>")])
        result = CliRunner().invoke(
            main, ["chat", "--script", str(script)],
            input="What is six times seven?\nexit\n",
            env=self._env(tmp_path),
        )
        assert result.exit_code == 0, result.output
        assert "answer> forty-two" in result.output

    def test_scripted_chat_requires_a_script(self, tmp_path):
        result = CliRunner().invoke(main, ["chat"], env=self._env(tmp_path))
        assert result.exit_code == 2
        assert "--script" in result.output

    def test_live_chat_requires_an_endpoint(self, tmp_path, monkeypatch):
        monkeypatch.delenv("PROVIDER_ENDPOINT", raising=False)
        result = CliRunner().invoke(main, ["chat", "--provider", "live"],
                                    env=self._env(tmp_path))
        assert result.exit_code == 2
        assert "PROVIDER_ENDPOINT" in result.output


class TestReplay:
    def test_replay_prints_each_persisted_event(self, tmp_path):
        env = {
            "SESSION_DIR": str(tmp_path / "sessions"),
            "ARTIFACT_DIR": str(tmp_path / "artifacts"),
        }
        script = tmp_path / "script.jsonl"
        write_script(script, [ScriptEntry(text="<answer>forty-two</answer>")])
        runner = CliRunner()
        chat = runner.invoke(main, ["chat", "--script", str(script)],
                             input="What is six times seven?\nexit\n", env=env)
        assert chat.exit_code == 0, chat.output

        session_files = list((tmp_path / "sessions").glob("*.jsonl"))
        assert len(session_files) == 1
        session_id = session_files[0].stem

        replay = runner.invoke(main, ["replay", session_id], env=env)
        assert replay.exit_code == 0, replay.output
        lines = replay.output.strip().splitlines()
        assert len(lines) == 3
        assert lines[0].lstrip().startswith("0 you> What is six times seven?")
        assert lines[-1].lstrip().startswith("2 answer> forty-two")

    def test_replay_of_unknown_session_fails(self, tmp_path):
        result = CliRunner().invoke(
            main, ["replay", "ghost"],
            env={"SESSION_DIR": str(tmp_path / "sessions")},
        )
        assert result.exit_code == 1
        assert "ghost" in result.output


class TestCaseStudyEndToEnd:
    def test_case1_question_is_answerable_in_chat(self, tmp_path):
        from scicopilot.config import CASE1_SCRIPT

        env = {
            "SESSION_DIR": str(tmp_path / "sessions"),
            "ARTIFACT_DIR": str(tmp_path / "artifacts"),
        }
        question = CASE1_QUESTION.read_text(encoding="utf-8").strip()
        result = CliRunner().invoke(
            main, ["chat", "--script", str(CASE1_SCRIPT)],
            input=f"{question}\nexit\n", env=env,
        )
        assert result.exit_code == 0, result.output
        assert "answer>" in result.output
        assert "not reproducible at desk scale" in result.output
