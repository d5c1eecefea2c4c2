"""mlr: a reference interpreter for a bidirectional reactive dataflow language.

The toolchain is organized as a pipeline:

    source (.mlr)
      -> lexer/parser          (lexer.py, parser.py, ast.py)
      -> type/shape inference  (types.py)
      -> inline + normalize    (normalize.py)
      -> one of three engines:
           sync.py    cycle-indexed least-fixpoint semantics over the
                      Bot/Absent/Known/Err lattice (post kept primitive)
           opsim.py   demand-driven operational simulator with the Pending
                      protocol, worklists and window reclamation (post
                      rewritten to backward recurrences)
           kahn.py    prefix-stream reference semantics (deadlocks on
                      backward recurrences, used for differential testing)
      -> trace.py chronograms, analysis.py causality/memory probes, cli.py.
"""

__version__ = "0.1.0"

from .domain import ExtVal, BOT, ABSENT, PENDING, ERR, known, join, nv  # noqa: F401
