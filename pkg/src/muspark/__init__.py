"""muSPARK: parser, typechecker, permission-based alias checker, reference
interpreter and a lockstep soundness oracle."""

__version__ = "0.1.0"
