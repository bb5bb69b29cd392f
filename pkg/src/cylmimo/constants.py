"""Physical constants shared across the package."""

C0 = 299792458.0  # speed of light in vacuum, m/s
