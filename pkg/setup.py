#!/usr/bin/env python
# -*- coding: utf-8 -*-
from setuptools import find_packages
from setuptools import setup

with open("README.rst") as readme_file:
    readme = readme_file.read()

with open("HISTORY.rst") as history_file:
    history = history_file.read()

requirements = [
    "attrs>=17",
    "colorama",
    "invoke>=1.0.0",
    "jinja2>=2.10",
    "numpy",
    "oop-ext",
    "pandas>=1.5",
    "scipy",
]

setup(
    name="voicache",
    use_scm_version=True,
    setup_requires=["setuptools_scm"],
    description="Stream active learning that probes, forgets, caches and recalls "
    "labeled points by value of information.",
    long_description=readme + "\n\n" + history,
    author="ESSS",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={"voicache": ["templates/*.txt"]},
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "voicache = voicache.cli:program.run",
        ],
    },
    license="MIT license",
    zip_safe=False,
    keywords="voicache",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    test_suite="tests",
    tests_require=[],
)
