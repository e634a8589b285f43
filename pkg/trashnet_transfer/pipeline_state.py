"""Stage tracking for a transfer-learning pipeline run.

A run walks idle -> loading, then either pretraining -> done or
splitting -> fine-tuning -> extracting -> training-heads -> evaluating -> done.
An optional ablation run loops evaluating -> fine-tuning once more. Any
non-terminal stage can fail.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

_LOGGER = logging.getLogger(__name__)

# Stage constants
# IDLE: Created, nothing run yet
# LOADING: Reading datasets and weights
# PRETRAINING: Training the extractor on the source dataset
# SPLITTING: Stratified half split of the target dataset
# FINE_TUNING: Training unfrozen layers on the train half
# EXTRACTING: Computing feature matrices for both halves
# TRAINING_HEADS: Fitting softmax and SVM heads on the shared features
# EVALUATING: Scoring both heads on the test half
# DONE / FAILED: Terminal
STATE_IDLE = "idle"
STATE_LOADING = "loading"
STATE_PRETRAINING = "pretraining"
STATE_SPLITTING = "splitting"
STATE_FINE_TUNING = "fine-tuning"
STATE_EXTRACTING = "extracting"
STATE_TRAINING_HEADS = "training-heads"
STATE_EVALUATING = "evaluating"
STATE_DONE = "done"
STATE_FAILED = "failed"

class PipelineEvent(Enum):
    """Events that move a run between stages."""

    LOAD = "load"
    PRETRAIN = "pretrain"
    SPLIT = "split"
    FINE_TUNE = "fine_tune"
    EXTRACT = "extract"
    TRAIN_HEADS = "train_heads"
    EVALUATE = "evaluate"
    FINISH = "finish"
    FAIL = "fail"


@dataclass
class StageTransition:
    """One allowed move between stages."""

    from_state: str
    to_state: str
    event: PipelineEvent


TransitionCallback = Callable[[str, str, PipelineEvent], None]

__all__ = [
    "PipelineEvent",
    "PipelineStateMachine",
    "STATE_DONE",
    "STATE_EVALUATING",
    "STATE_EXTRACTING",
    "STATE_FAILED",
    "STATE_FINE_TUNING",
    "STATE_IDLE",
    "STATE_LOADING",
    "STATE_PRETRAINING",
    "STATE_SPLITTING",
    "STATE_TRAINING_HEADS",
    "StageTransition",
]


class PipelineStateMachine:
    """Tracks which stage a pipeline run is in.

    Stages are entered only through defined transitions, so a run that skips
    a stage or restarts after finishing is rejected.
    """

    def __init__(self) -> None:
        self._current_state = STATE_IDLE
        self._previous_state: str | None = None
        self._state_entered_at = time.monotonic()
        self._history: list[str] = [STATE_IDLE]
        self._transitions: dict[tuple[str, PipelineEvent], StageTransition] = {}
        self._transition_callbacks: list[TransitionCallback] = []

        self._define_transitions()

    def _define_transitions(self) -> None:
        self._add_transition(STATE_IDLE, PipelineEvent.LOAD, STATE_LOADING)

        # Source pretraining
        self._add_transition(STATE_LOADING, PipelineEvent.PRETRAIN, STATE_PRETRAINING)
        self._add_transition(STATE_PRETRAINING, PipelineEvent.FINISH, STATE_DONE)

        # Fine-tune and compare
        self._add_transition(STATE_LOADING, PipelineEvent.SPLIT, STATE_SPLITTING)
        self._add_transition(STATE_SPLITTING, PipelineEvent.FINE_TUNE, STATE_FINE_TUNING)
        self._add_transition(STATE_FINE_TUNING, PipelineEvent.EXTRACT, STATE_EXTRACTING)
        self._add_transition(STATE_EXTRACTING, PipelineEvent.TRAIN_HEADS, STATE_TRAINING_HEADS)
        self._add_transition(STATE_TRAINING_HEADS, PipelineEvent.EVALUATE, STATE_EVALUATING)
        self._add_transition(STATE_EVALUATING, PipelineEvent.FINISH, STATE_DONE)

        # Ablation run with fresh weights
        self._add_transition(STATE_EVALUATING, PipelineEvent.FINE_TUNE, STATE_FINE_TUNING)

        for state in (
            STATE_IDLE,
            STATE_LOADING,
            STATE_PRETRAINING,
            STATE_SPLITTING,
            STATE_FINE_TUNING,
            STATE_EXTRACTING,
            STATE_TRAINING_HEADS,
            STATE_EVALUATING,
        ):
            self._add_transition(state, PipelineEvent.FAIL, STATE_FAILED)

    def _add_transition(self, from_state: str, event: PipelineEvent, to_state: str) -> None:
        self._transitions[(from_state, event)] = StageTransition(from_state, to_state, event)

    def transition(self, event: PipelineEvent) -> bool:
        """Attempt to move on ``event``; returns False when not allowed."""
        trans = self._transitions.get((self._current_state, event))
        if trans is not None:
            self._execute_transition(trans)
            return True
        _LOGGER.debug(
            "No transition defined for state=%s, event=%s",
            self._current_state,
            event.value,
        )
        return False

    def _execute_transition(self, transition: StageTransition) -> None:
        old_state = self._current_state
        new_state = transition.to_state
        _LOGGER.info("Stage %s -> %s", old_state, new_state)

        self._previous_state = old_state
        self._current_state = new_state
        self._state_entered_at = time.monotonic()
        self._history.append(new_state)

        for callback in self._transition_callbacks:
            try:
                callback(old_state, new_state, transition.event)
            except Exception as err:
                _LOGGER.error("Error in transition callback: %s", err)

    def on_transition(self, callback: TransitionCallback) -> None:
        """Register a callback run on every transition."""
        self._transition_callbacks.append(callback)

    @property
    def current_state(self) -> str:
        return self._current_state

    @property
    def history(self) -> list[str]:
        """Every stage entered so far, in order."""
        return list(self._history)

    @property
    def time_in_current_state(self) -> float:
        """Seconds spent in the current stage."""
        return time.monotonic() - self._state_entered_at

    def can_transition(self, event: PipelineEvent) -> bool:
        return (self._current_state, event) in self._transitions

    def get_info(self) -> dict[str, Any]:
        """Get state machine diagnostic info."""
        return {
            "current_state": self._current_state,
            "previous_state": self._previous_state,
            "history": self.history,
            "time_in_state": self.time_in_current_state,
            "available_transitions": [
                event.value for event in PipelineEvent if self.can_transition(event)
            ],
        }
