#!/usr/bin/env python
from setuptools import setup, find_packages
from os import path
import sys

min_py_version = (3, 8)

if sys.version_info < min_py_version:
    sys.exit(
        "valuecast is only supported for Python {}.{} or higher".format(*min_py_version)
    )

here = path.abspath(path.dirname(__file__))

long_description = (
    "Value-oriented renewable forecasting trained on the prices of day-ahead and "
    "real-time dispatch linear programs."
)

# read in version number into __version__
with open(path.join(here, "valuecast", "version.py")) as f:
    exec(f.read())

with open(path.join(here, "requirements.txt")) as f:
    requirements = [line.split("#", 1)[0].rstrip() for line in f.readlines()]

setup(
    name="valuecast",
    version=__version__,
    description="Value-oriented forecasting for virtual power plant dispatch.",
    long_description=long_description,
    author="valuecast contributors",
    license="GNU LGPL",
    keywords=[
        "forecasting",
        "economic dispatch",
        "linear programming",
        "decision-focused learning",
    ],
    packages=find_packages(exclude=["contrib", "docs", "tests*"]),
    install_requires=requirements,
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["valuecast=valuecast.cli:main"]},
    python_requires="~={}.{}".format(*min_py_version),
)
