#!/usr/bin/env python3
"""
lbs-ads: location-based advertisements driven by spatial triggers.

Examples:
  lbs-ads run --config scenario.json --seed 7
  lbs-ads adv add --snapshot db.json --id pizza-01 --secret s3 --x 0 --y 0 --service food
  lbs-ads user sub --snapshot db.json --msisdn 923001234567 --class GprsGps --service food
  lbs-ads validate --routes routes/
"""

from .cli import app


def main() -> None:
    """Main entry point for lbs-ads."""
    app()


if __name__ == "__main__":
    main()
