from setuptools import find_packages, setup

from nearfieldkit._version import __version__

with open('README.md') as f:
    readme = f.read()

setup(
    name='nearfieldkit',
    version=__version__,
    description="Wideband near-field localization toolkit: hybrid angle-distance dictionaries, "
                "SOMP recovery, MUSIC benchmarks and regime boundaries",
    long_description=readme,
    long_description_content_type='text/markdown',
    install_requires=[
        "argmaxtools",
        "numpy",
        "scipy",
        "pandas",
        "tabulate",
        "tqdm",
        "jaxtyping",
        "beartype",
    ],
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    entry_points={
        "console_scripts": [
            "nearfieldkit-run=scripts.run_experiment:cli",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering",
    ],
)
