class DegenerateFormError(ValueError):
    """The symmetrized form has determinant zero."""


class IndefiniteFormError(ValueError):
    """The symmetrized form is indefinite, so its isometry group is infinite."""


class SearchTimeout(RuntimeError):
    """A search ran past its configured time budget."""
