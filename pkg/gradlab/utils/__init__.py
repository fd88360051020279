# -*- coding: utf-8 -*-
from ._core import *
from ._exceptions import *
from ._math import *
