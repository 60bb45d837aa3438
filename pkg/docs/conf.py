# Configuration file for the Sphinx documentation builder.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

# -- Project information -----------------------------------------------------

project = 'asymptolab'
copyright = '2026, asymptolab developers'
author = 'asymptolab developers'
version = ''
release = ''

# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx_rtd_theme',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'

# Heavy dependencies are mocked so that the docs build without them
import mock

MOCK_MODULES = [
    'numpy', 'numpy.polynomial',
    'scipy', 'scipy.special', 'scipy.integrate', 'scipy.optimize',
    'pandas', 'torch', 'torch.autograd', 'dill', 'yaml',
]
for mod_name in MOCK_MODULES:
    sys.modules[mod_name] = mock.Mock()

# -- Options for HTML output -------------------------------------------------

import sphinx_rtd_theme

html_theme = 'sphinx_rtd_theme'
html_static_path = []
htmlhelp_basename = 'asymptolabdoc'

# -- Options for LaTeX and manual page output ----------------------------------

latex_documents = [
    (master_doc, 'asymptolab.tex', 'asymptolab Documentation', author, 'manual'),
]
man_pages = [
    (master_doc, 'asymptolab', 'asymptolab Documentation', [author], 1),
]
