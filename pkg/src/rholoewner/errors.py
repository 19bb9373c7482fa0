"""Exception types shared across the package."""


class LoewnerError(Exception):
    """Base class for every error raised by this package."""

    code = "loewner_error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class HorizonError(LoewnerError):
    """A driving function was evaluated past its lifetime."""

    code = "horizon"


class ForcePointApproach(LoewnerError):
    """The driving value came within eps_stop of the force point image."""

    code = "force_point_approach"

    def __init__(self, message, t_safe=None, t_next=None):
        super().__init__(message)
        self.interval = (t_safe, t_next)


class StepSizeUnderflow(LoewnerError):
    code = "step_size_underflow"


class NumericalBlowup(LoewnerError):
    code = "numerical_blowup"


class SelfIntersection(LoewnerError):
    """A zipper vertex left the open domain while being peeled."""

    code = "self_intersection"


class DegenerateStep(LoewnerError):
    code = "degenerate_step"


class VertexSpacingError(LoewnerError):
    code = "vertex_spacing"


class BranchJump(LoewnerError):
    """The lifted argument moved by too much in a single evaluation."""

    code = "branch_jump"


class SingularityOnGrid(LoewnerError):
    code = "singularity_on_grid"


class NonConvergent(LoewnerError):
    code = "non_convergent"


class ConfigError(LoewnerError):
    code = "config"
