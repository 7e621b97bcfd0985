"""scicopilot: a hierarchical multi-agent research assistant engine.

A manager agent plans and delegates; role-scoped specialist agents run tools
against an embedded scholarly data lake, a literature corpus, and stateful
code sandboxes; an evaluation agent scores every move and the scores gate the
control loop. Sessions are event-sourced and replayable, so the whole stack
can be exercised deterministically with a scripted model provider.
"""

__version__ = "0.1.0"
