"""Element views handed to the sector dispatchers."""

from __future__ import annotations

from dataclasses import dataclass

from sipg.scenario import ElementInstance, ElementTemplate


@dataclass(frozen=True)
class ActiveElement:
    instance: ElementInstance
    template: ElementTemplate

    @property
    def id(self) -> str:
        return self.instance.id

    @property
    def origin(self) -> str:
        return self.instance.origin

    @property
    def destination(self) -> str:
        return self.instance.destination
