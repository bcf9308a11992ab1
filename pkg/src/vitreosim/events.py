"""Task events emitted by the engine tick; values, safe to hand anywhere."""

from __future__ import annotations

from dataclasses import dataclass, field


SPHERE_COLLECTED = "sphere_collected"
SPHERE_EXITED = "sphere_exited"
PATCH_DETACHED = "patch_detached"
SPOT_FIRED = "spot_fired"
SHOT_MISSED = "shot_missed"
BREAK_TREATED = "break_treated"
RETINAL_TOUCH = "retinal_touch"
MAGNIFICATION_TOGGLED = "magnification_toggled"
TASK_COMPLETED = "task_completed"


@dataclass(frozen=True)
class TaskEvent:
    t_ms: int
    type: str
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"t_ms": self.t_ms, "type": self.type, "data": self.data}

    @staticmethod
    def from_dict(d: dict) -> "TaskEvent":
        return TaskEvent(t_ms=d["t_ms"], type=d["type"], data=d.get("data", {}))
