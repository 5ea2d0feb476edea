"""Exception types shared across the package."""


class BeliefPlanError(Exception):
    """Base class for all package errors."""


class DegenerateCovarianceError(BeliefPlanError):
    """Covariance matrix is not usable (non-SPD or near-singular)."""


class MalformedPathError(BeliefPlanError):
    """A belief path does not satisfy basic structural requirements."""


class InfeasibleStartError(BeliefPlanError):
    """The start belief violates the collision constraint."""


class InfeasibleEndpointError(BeliefPlanError):
    """A graph endpoint (start or goal vertex) is in collision."""


class UnsatisfiableScenarioError(BeliefPlanError):
    """Scenario generation could not find a collision-free start."""


class EmptyDensityError(BeliefPlanError):
    """A density grid has no positive mass to sample from."""


class DegenerateMixtureError(BeliefPlanError):
    """EM collapsed a mixture component and re-seeding did not help."""


class DisconnectedGraphError(BeliefPlanError):
    """No start-to-goal route exists in the belief graph."""


class ReconstructionError(BeliefPlanError):
    """Path reconstruction failed after exhausting the fallback budget."""

    def __init__(self, message, rounds_used=0, samples_used=0):
        super().__init__(message)
        self.rounds_used = rounds_used
        self.samples_used = samples_used


class FormatError(BeliefPlanError):
    """A binary file (dataset or checkpoint) is malformed."""


class TrainingDivergedError(BeliefPlanError):
    """Training produced a non-finite loss."""
