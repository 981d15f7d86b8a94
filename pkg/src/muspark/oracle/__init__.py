"""Dynamic soundness oracle: alias sets, CREW and lemma checks, lockstep
verification, and seeded fuzzing."""

from muspark.oracle.alias import AliasSet, LemmaChecker, Violation, alias_sets, crew_check, lemma_checks
from muspark.oracle.fuzz import fuzz_soundness, repair, shrink_violation
from muspark.oracle.generator import coverage, gen_program
from muspark.oracle.lockstep import lockstep_verify, replay
from muspark.oracle.report import VerifyReport

__all__ = [
    "AliasSet", "LemmaChecker", "VerifyReport", "Violation", "alias_sets", "coverage", "crew_check",
    "fuzz_soundness", "gen_program", "lemma_checks", "lockstep_verify", "repair", "replay", "shrink_violation",
]
