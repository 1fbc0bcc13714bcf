from setuptools import setup, find_packages

setup(
    name="sumset_toolkit",
    version="0.1.0",
    packages=find_packages(),
    install_requires=[
        "numpy>=1.26.0",
        "sympy>=1.12",
        "pydantic>=2.6.0",
        "python-json-logger>=2.0.7",
        "pytz>=2025.1",
        "cachetools>=5.3.2"
    ],
)
