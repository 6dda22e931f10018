import logging

from typing import Optional, Tuple

from pydantic import BaseModel, model_validator

from . import errors
from . import models
from .closedform import ClosedForm
from .oracle import Oracle
from .solver import Solver
from .montecarlo import MonteCarlo

logger = logging.getLogger(__name__)


class LaboratoryConfig(BaseModel):
    b: int
    n: Optional[int] = None
    sizes: Optional[Tuple[int, ...]] = None
    m: Optional[int] = 1
    r: Optional[float] = 0.0
    debug: Optional[bool] = False

    @model_validator(mode="before")
    @classmethod
    def n_or_sizes(cls, values):
        n = values.get("n")
        sizes = values.get("sizes")

        if n is not None and sizes is not None:
            raise errors.PoggBuildModelError(
                err='"n" and "sizes" are both set', message="The parameter \"n\" cannot be set together with \"sizes\""
            )
        if n is None and sizes is None:
            raise errors.PoggBuildModelError(
                err='"n" and "sizes" are both empty', message="One of the parameters \"n\" or \"sizes\" must be set"
            )
        return values


class Laboratory:
    """
    Laboratory bundles the controllers that work on one game configuration.

    lab = Laboratory(b=4, n=2, r=6.5)
    lab.solver.find_mixed_roots(r=6.5)
    """

    def __init__(
        self,
        b: int,
        n: Optional[int] = None,
        sizes: Optional[Tuple[int, ...]] = None,
        m: Optional[int] = 1,
        r: Optional[float] = 0.0,
        debug: Optional[bool] = False,
    ):
        self.settings = {"b": b, "n": n, "sizes": sizes, "m": m, "r": r, "debug": debug}
        models.build_model(model=LaboratoryConfig, data=self.settings)

        data = {"b": b, "m": m, "r": r}
        if n is not None:
            data["n"] = n
        else:
            data["sizes"] = tuple(sizes)
        self.config = models.build_model(model=models.GameConfig, data=data)
        self.debug = debug

        if debug:
            logging.basicConfig(level=logging.DEBUG)
        logger.debug(f"Laboratory ready for sizes {self.config.sizes}, m={self.config.m}, r={self.config.r}")

    @classmethod
    def from_config(cls, config: models.GameConfig, debug: Optional[bool] = False) -> "Laboratory":
        return cls(b=config.b, sizes=config.sizes, m=config.m, r=config.r, debug=debug)

    def with_return(self, r: float) -> "Laboratory":
        if r == self.config.r:
            logger.debug(f"r already configured to {r}, skipping...")
            return self
        logger.debug(f"overriding r={self.config.r} with {r}")
        return Laboratory.from_config(self.config.with_return(r), debug=self.debug)

    @property
    def closedform(self) -> ClosedForm:
        return ClosedForm(self.config)

    @property
    def oracle(self) -> Oracle:
        return Oracle(self.config)

    @property
    def solver(self) -> Solver:
        return Solver(self.config)

    @property
    def montecarlo(self) -> MonteCarlo:
        return MonteCarlo(self.config)
