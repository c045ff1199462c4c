from setuptools import setup, find_packages

setup(
    name="sigcode",
    version="1.0.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    python_requires=">=3.11",
    install_requires=["numpy>=1.26", "scipy>=1.11", "psutil>=7.0.0"],
    entry_points={"console_scripts": ["sigcode = sigcode.cli:main"]},
)
