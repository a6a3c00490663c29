# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

import sys

from hbolab import main


if __name__ == '__main__':
    sys.exit(main())
