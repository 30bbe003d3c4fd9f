from setuptools import setup

# Only needed for development installs (pip install -e .) and tools that
# still expect it. Configuration is in pyproject.toml.
setup()
