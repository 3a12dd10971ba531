import os, lateralguard

from setuptools import setup, find_packages

with open("README.rst", "r") as f:
	long_descr = f.read()

__version__ = None
if os.path.exists("VERSION"):
	with open("VERSION") as handle:
		for line in handle.readlines():
			line = line.strip()
			if len(line) > 0:
				__version__ = line
				break

setup(
	name=lateralguard.__package_name__,
	version=__version__,
	description=lateralguard.__description__,
	long_description=long_descr,
	url=lateralguard.__url__,
	author=lateralguard.__author__,
	author_email=lateralguard.__email__,
	license=lateralguard.__license__,
	packages=find_packages(exclude=["tests", "tests.*"]),
	python_requires=">=3.8",
	keywords=["lateral movement", "segmentation", "hardening", "spectral", "graph"],
	install_requires=[
	  "setuptools",
	  "numpy",
	  "scipy",
	  "pandas",
	  "pydantic>=2",
	  "PyYAML"
	],
	entry_points={
	  "console_scripts": ["lateralguard = lateralguard.cli:main"],
	},
	classifiers=[
	  "Development Status :: 4 - Beta",
	  "Intended Audience :: Science/Research",
	  "Topic :: Security",
	  "Programming Language :: Python",
	  "Programming Language :: Python :: 3.8",
	  "Programming Language :: Python :: 3.9",
	  "Programming Language :: Python :: 3.10",
	  "Programming Language :: Python :: 3.11",
	  "Programming Language :: Python :: 3.12",
	]
)
