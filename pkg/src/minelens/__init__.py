"""minelens: cryptojacking triage for Android apps."""

__version__ = "0.1.0"
