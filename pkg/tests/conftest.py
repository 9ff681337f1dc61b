import os
import sys

# Add project root to path so `src` imports resolve
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))
