"""Pytest wiring: absltest normally parses absl flags in absltest.main()."""
import sys
from absl import flags

if not flags.FLAGS.is_parsed():
    flags.FLAGS([sys.argv[0]], known_only=True)
