"""Fwdlearn version.

The version is written into every checkpoint header; ``Version.parse`` reads
it back so loaders can refuse files from an incompatible major release.
"""

__all__ = ["Version", "vernum"]


class Version(tuple):
    """Semantic version triple."""

    __slots__ = ()
    fields = "major", "minor", "patch"

    def __new__(cls, major, minor, patch) -> "Version":
        return tuple.__new__(cls, (int(major), int(minor), int(patch)))

    @classmethod
    def parse(cls, text: str) -> "Version":
        """Parse ``"MAJOR.MINOR.PATCH"``; raises ``ValueError`` on anything else."""
        parts = str(text).strip().split(".")
        if len(parts) != 3:
            raise ValueError(f"not a version string: {text!r}")
        return cls(*parts)

    def is_compatible(self, other: "Version") -> bool:
        """Same major version."""
        return self.major == other.major

    def __repr__(self) -> str:
        fields = (f"{fld}={val}" for fld, val in zip(self.fields, self, strict=False))
        return f"{self.__class__.__name__}({', '.join(fields)})"

    def __str__(self) -> str:
        return f"{self[0]}.{self[1]}.{self[2]}"

    major = property(lambda self: self[0])
    minor = property(lambda self: self[1])
    patch = property(lambda self: self[2])


vernum = Version(0, 1, 0)
