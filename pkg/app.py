# -*- coding: utf-8 -*-
"""
app.py: reebpa v1.0
Command-line entry point.

    python app.py census --matrix 2,1,1,1 --kmax 2
    python app.py --config assets/examples/track_hyp.json --out report.json

No business logic lives here. All analysis logic is in reebpa/.
"""

import sys

from reebpa.cli import main

if __name__ == "__main__":
    sys.exit(main())
