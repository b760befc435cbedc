from isolab.checks.caustic_certificates import CausticCertificates
from isolab.checks.curl import Curl
from isolab.checks.flow_invariants import FlowInvariants
from isolab.checks.linear_constraints import LinearConstraints
from isolab.checks.loop_closure import LoopClosure
from isolab.checks.monodromy_relations import MonodromyRelations
from isolab.checks.reference_match import ReferenceMatch
from isolab.checks.series_certificates import SeriesCertificates
from isolab.checks.strong_isomonodromy import StrongIsomonodromy
from isolab.checks.vring_scan import VringScan

__all__ = [
    "CausticCertificates",
    "Curl",
    "FlowInvariants",
    "LinearConstraints",
    "LoopClosure",
    "MonodromyRelations",
    "ReferenceMatch",
    "SeriesCertificates",
    "StrongIsomonodromy",
    "VringScan",
]
