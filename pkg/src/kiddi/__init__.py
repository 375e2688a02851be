"""Knowledge-infused disease identification from patient-doctor dialogues."""

__version__ = "0.1.0"
