# SPDX-FileCopyrightText: 2022 The meson-python developers
# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

import datetime
import os
import time

_build_time = int(os.environ.get('SOURCE_DATE_EPOCH', time.time()))
_build_date = datetime.datetime.fromtimestamp(_build_time, tz=datetime.timezone.utc)

project = 'hbolab'
copyright = f'2024\N{EN DASH}{_build_date.year} The hbolab developers'

html_theme = 'furo'
html_title = 'hbolab'

extensions = [
    'sphinx_copybutton',
    'sphinx_design',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
]

# sphinx.ext.intersphinx
intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
}
