# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

from mklbci import __version__  # noqa: E402

# -- Project information -----------------------------------------------------

project = 'mklbci'
copyright = '2024, jkjkil4'
author = 'jkjkil4'
release = __version__

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx_copybutton',
]
autodoc_member_order = 'bysource'

templates_path = ['_templates']
exclude_patterns = []

language = 'zh_CN'

# -- Options for HTML output -------------------------------------------------

html_theme = 'furo'
html_static_path = []
