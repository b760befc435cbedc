from dependency_injector import containers, providers

from isolab.check_engine import CheckEngine
from isolab.checks import (
    CausticCertificates,
    Curl,
    FlowInvariants,
    LinearConstraints,
    LoopClosure,
    MonodromyRelations,
    ReferenceMatch,
    SeriesCertificates,
    StrongIsomonodromy,
    VringScan,
)
from isolab.presets import PRESETS, T_EVALUATORS
from isolab.tolerances import Tolerances
from isolab.utils.lab_log import LabLog, LabLogImpl


class Container(containers.DeclarativeContainer):
    """Main dependency injection container for isolab."""

    # Logging - Singleton (one logger instance for the entire application)
    log: providers.Provider[LabLog] = providers.Singleton(LabLogImpl)

    # Tolerances - Singleton, overridden by the CLI from the document and flags
    tolerances: providers.Provider[Tolerances] = providers.Singleton(Tolerances)

    # Named systems and T evaluators available to documents
    presets = providers.Object(PRESETS)
    t_evaluators = providers.Object(T_EVALUATORS)

    # Checks on a single system - accept (system) at call time
    linear_constraints = providers.Factory(LinearConstraints, log=log, tolerances=tolerances)
    curl = providers.Factory(Curl, log=log, tolerances=tolerances)
    monodromy_relations = providers.Factory(MonodromyRelations, log=log, tolerances=tolerances)
    series_certificates = providers.Factory(SeriesCertificates, log=log, tolerances=tolerances)

    # Checks on a flow - accept (flow) at call time
    flow_invariants = providers.Factory(FlowInvariants, log=log, tolerances=tolerances)
    loop_closure = providers.Factory(LoopClosure, log=log, tolerances=tolerances)
    strong_isomonodromy = providers.Factory(StrongIsomonodromy, log=log, tolerances=tolerances)

    # Comparison with a closed form - accepts (label, actual, expected)
    reference_match = providers.Factory(ReferenceMatch, log=log)

    # Caustic checks - accept (model) at call time
    caustic_certificates = providers.Factory(CausticCertificates, log=log, tolerances=tolerances)
    vring_scan = providers.Factory(VringScan, log=log)

    # CheckEngine - Factory (a fresh queue per command)
    check_engine = providers.Factory(CheckEngine, log=log)
