import sys
from pathlib import Path

# make the brute-force oracles importable from any pytest rootdir
sys.path.insert(0, str(Path(__file__).parent))
