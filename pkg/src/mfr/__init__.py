"""Local virtual try-on toolkit.

Weight palettization and chunked model artifacts (MFRW container format),
baseline / split-layout attention kernels, a deterministic mask-constrained
denoising engine over pluggable per-garment models, a garment catalog with a
download planner, and CLI + HTTP front doors.
"""

__version__ = "0.1.0"
