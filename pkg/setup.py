#!/usr/bin/env python3
"""Setup script for the HR-Cache simulator."""

from setuptools import setup, find_packages

setup(
    name="hrcache_sim",
    version="1.0.0",
    description="Trace-driven cache simulation with hazard-rate-based learned eviction",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy==1.24.3",
    ],
    python_requires=">=3.8",
    entry_points={
        'console_scripts': [
            'hrcache-sim=hrcache_sim.engine.cli:main',
        ],
    },
)
