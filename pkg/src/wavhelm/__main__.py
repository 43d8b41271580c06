import os
import sys

if os.environ.get("WAVHELM_THREADS", "").isdigit():
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["WAVHELM_THREADS"])

from .cli import main  # noqa: E402

sys.exit(main())
