#!/usr/bin/env python3
"""
Version synchronization script for skillgauge.

This script keeps the package version in line with the release-please manifest.
It updates:
- python/skillgauge/__init__.py (__version__, read by hatchling at build time)

Usage:
    python scripts/sync_versions.py [--check-only]

    --check-only: Only check if versions are synchronized, don't update
"""

import argparse
import json
import re
import sys
from pathlib import Path

MANIFEST_PATH = Path(".release-please-manifest.json")
INIT_PATH = Path("python/skillgauge/__init__.py")
VERSION_RE = re.compile(r'__version__\s*=\s*"([^"]+)"')


def get_release_please_version():
    """Get version from release-please manifest."""
    if not MANIFEST_PATH.exists():
        raise FileNotFoundError("Release-please manifest not found")

    with open(MANIFEST_PATH) as f:
        manifest = json.load(f)

    return manifest["."]


def get_python_version():
    """Get version from the Python package."""
    if not INIT_PATH.exists():
        raise FileNotFoundError(f"{INIT_PATH} not found")

    match = VERSION_RE.search(INIT_PATH.read_text())
    if not match:
        raise ValueError("Could not find __version__ in __init__.py")

    return match.group(1)


def update_python_version(new_version):
    """Update version in the Python package."""
    content = INIT_PATH.read_text()
    new_content = VERSION_RE.sub(f'__version__ = "{new_version}"', content)

    if new_content == content:
        raise ValueError("Could not update version in __init__.py")

    INIT_PATH.write_text(new_content)
    print(f"✅ Updated Python package version to {new_version}")


def check_versions():
    """Check if the package version matches the manifest."""
    try:
        release_version = get_release_please_version()
        python_version = get_python_version()

        print("📋 Version Status:")
        print(f"  Release-please: {release_version}")
        print(f"  Python package: {python_version}")

        if release_version == python_version:
            print(f"✅ Versions are synchronized: {release_version}")
            return True, release_version

        print("❌ Version mismatch detected!")
        print("💡 Note: release-please will auto-update versions on next release")
        return False, release_version

    except Exception as e:
        print(f"❌ Error checking versions: {e}")
        return False, None


def main():
    """Main function for version synchronization."""
    parser = argparse.ArgumentParser(description="Synchronize skillgauge version files")
    parser.add_argument(
        "--check-only",
        action="store_true",
        help="Only check if versions are synchronized, don't update",
    )
    args = parser.parse_args()

    is_synced, target_version = check_versions()
    if args.check_only or is_synced:
        sys.exit(0 if is_synced else 1)

    if target_version is None:
        sys.exit(1)
    try:
        update_python_version(target_version)
    except Exception as e:
        print(f"❌ Version synchronization failed: {e}")
        sys.exit(1)
    print(f"🎉 Version synchronized to {target_version}")


if __name__ == "__main__":
    main()
