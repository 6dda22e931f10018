import abc
import inspect

from typing import List

from .models import GameConfig


class Controller(abc.ABC):
    def __init__(self, config: GameConfig):
        self.config = config

    def options(self) -> List[str]:
        """
        Returns a list of all public methods for the current controller.
        """
        return [
            name
            for name, _ in inspect.getmembers(self, predicate=inspect.ismethod)
            if not name.startswith("_")
            if not name.__contains__("options")
        ]
