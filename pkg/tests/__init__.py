from .conftest import Command, Environment, ProcessResult

__all__ = ["Command", "Environment", "ProcessResult"]
