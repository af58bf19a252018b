from __future__ import annotations

import sys
from pathlib import Path

# tests import the shared oracle helpers as a plain module
sys.path.insert(0, str(Path(__file__).parent))
