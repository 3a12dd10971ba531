# Sphinx configuration for the lateralguard API reference.
import sys, datetime
from os.path import abspath, dirname
sys.path.append(dirname(dirname(abspath(__file__))))
import lateralguard

project = lateralguard.__project_name__
author = lateralguard.__author__
copyright = f"{datetime.datetime.now().year}, {author}"
release = lateralguard.__version__

extensions = ["sphinx.ext.autodoc", "sphinx.ext.napoleon"]

# Google-style docstrings only
napoleon_google_docstring = True
napoleon_numpy_docstring = False
autodoc_member_order = "bysource"

master_doc = "index"
exclude_patterns = ["_build"]
html_theme = "sphinx_rtd_theme"
