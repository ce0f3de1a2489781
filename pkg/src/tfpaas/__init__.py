"""Test-first performance testing stack.

Three cooperating pieces: the ``tfpc`` developer CLI (scaffold projects,
validate test scripts, submit runs), the ``tfps`` orchestration service
(parse submissions, dispatch, store and report results) and the ``tfprun``
run center (generate HTTP load, measure, adaptively probe capacity).
``tfpsum`` computes a Summated Usability Metric score from raw task
observations.
"""

__version__ = "0.1.0"
