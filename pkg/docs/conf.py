# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see
# http://www.sphinx-doc.org/en/master/config

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join("..", "src")))

from precursor.__version__ import __version__  # noqa: E402

# -- Project information -----------------------------------------------------

project = "precursor"
copyright = "2024, A Tabot Kevin project"
author = "Tabot Kevin"
description = "Multifractal random walk estimators for market-crash precursors."

# The short X.Y version
version = ".".join(__version__.split(".")[:2])
# The full version, including alpha/beta/rc tags
release = __version__


# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
    "sphinx.ext.autosectionlabel",
]

source_suffix = ".rst"

master_doc = "index"

language = "en"

exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

pygments_style = None

autodoc_member_order = "bysource"
autodoc_default_options = {"members": True, "undoc-members": False}

autosectionlabel_prefix_document = True


# -- Options for HTML output -------------------------------------------------

html_theme = "alabaster"

html_theme_options = {
    "description": description,
    "show_powered_by": False,
    "github_user": "tabotkevin",
    "github_repo": "precursor",
    "github_banner": False,
    "show_related": False,
    "fixed_sidebar": True,
    "page_width": "1040px",
}

html_sidebars = {
    "**": ["about.html", "navigation.html", "relations.html", "searchbox.html"]
}

html_title = f"precursor {release}"


# -- Options for other output ------------------------------------------------

htmlhelp_basename = "precursordoc"

latex_documents = [
    (master_doc, "precursor.tex", "precursor Documentation", author, "manual")
]

man_pages = [(master_doc, "precursor", description, [author], 1)]

texinfo_documents = [
    (
        master_doc,
        "precursor",
        "precursor Documentation",
        author,
        "precursor",
        description,
        "Science",
    )
]

epub_title = project
epub_exclude_files = ["search.html"]


# -- Extension configuration -------------------------------------------------

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
    "pandas": ("https://pandas.pydata.org/docs", None),
}
