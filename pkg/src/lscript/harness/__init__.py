"""Desk-scale verification harnesses: the verifier corpus and the
prompt-injection scenario suite."""

from .corpus import CorpusReport, run_corpus
from .injection import InjectionReport, run_injection_suite, run_scenario

__all__ = ["run_corpus", "CorpusReport", "run_injection_suite",
           "run_scenario", "InjectionReport"]
