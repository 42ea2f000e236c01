import os

from setuptools import find_packages, setup

install_requires = []
if os.path.exists("requirements.txt"):
    with open("requirements.txt") as f:
        install_requires = [line for line in f.read().splitlines() if line and line[0] != "-"]

setup(
    name="sln_atlas",
    description="Conjugacy invariants of circle vector fields and classification of SL(n,R)-actions",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=install_requires,
    python_requires=">=3.9",
    entry_points={"console_scripts": ["sln_atlas = sln_atlas.cli:main"]},
)
